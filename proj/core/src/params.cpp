#include "herbrec/params.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace herbrec {

Mat xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return m;
}

Mat zeros(Eigen::Index rows, Eigen::Index cols) { return Mat::Zero(rows, cols); }

Parameter& ParamRegistry::add(const std::string& name, Mat init) {
    if (contains(name)) throw std::logic_error("duplicate parameter: " + name);
    params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
    return *params_.back();
}

Parameter& ParamRegistry::get(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return *p;
    throw std::out_of_range("unknown parameter: " + name);
}

const Parameter& ParamRegistry::get(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return *p;
    throw std::out_of_range("unknown parameter: " + name);
}

bool ParamRegistry::contains(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return true;
    return false;
}

std::vector<Parameter*> ParamRegistry::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParamRegistry::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

void ParamRegistry::zero_grads() {
    for (auto& p : params_) p->zero_grad();
}

Eigen::Index ParamRegistry::total_size() const {
    Eigen::Index n = 0;
    for (const auto& p : params_) n += p->size();
    return n;
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, double lr,
                             double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
        const Mat mhat = m_[i] / bc1;
        const Mat vhat = v_[i] / bc2;
        p.value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    }
}

void AdamOptimizer::zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace herbrec
