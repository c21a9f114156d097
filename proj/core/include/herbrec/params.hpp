#pragma once

#include "herbrec/autodiff.hpp"
#include "herbrec/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace herbrec {

using ad::Mat;
using ad::Parameter;

// Xavier/Glorot uniform initialization: U(-sqrt(6/(fan_in+fan_out)), +).
Mat xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

Mat zeros(Eigen::Index rows, Eigen::Index cols);

// Flat registry of every trainable parameter in a model. Modules register
// their parameters under dotted names ("pepp.block0.wq") so artifacts can be
// saved and restored field by field.
class ParamRegistry {
public:
    Parameter& add(const std::string& name, Mat init);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;

    void zero_grads();
    Eigen::Index total_size() const;

private:
    // Deque-like stability: parameters must not move once handed out.
    std::vector<std::unique_ptr<Parameter>> params_;
};

// Adam with bias correction. Deterministic: update order follows the
// registration order of the parameter list.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Parameter*> params, double lr,
                  double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step();
    void zero_grads();
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    std::vector<Parameter*> params_;
    std::vector<Mat> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace herbrec
