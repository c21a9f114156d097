#pragma once

#include "herbrec/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace herbrec {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    Eigen::Index worst_index = -1;
    long coords_checked = 0;
};

// Central finite differences against analytic gradients.
//
// `run(with_grad)` must rebuild the computation from scratch (reseeding any
// randomness) and return the scalar loss; when with_grad is true it must also
// leave analytic gradients accumulated in the parameters. Checks every
// coordinate unless max_coords_per_param >= 0, in which case that many
// coordinates are sampled per parameter under sample_seed.
GradCheckReport grad_check(const std::vector<ad::Parameter*>& params,
                           const std::function<double(bool with_grad)>& run,
                           double eps = 1e-5,
                           long max_coords_per_param = -1,
                           std::uint64_t sample_seed = 0);

}  // namespace herbrec
