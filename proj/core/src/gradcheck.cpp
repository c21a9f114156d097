#include "herbrec/gradcheck.hpp"

#include "herbrec/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace herbrec {

using ad::Mat;

GradCheckReport grad_check(const std::vector<ad::Parameter*>& params,
                           const std::function<double(bool with_grad)>& run,
                           double eps, long max_coords_per_param,
                           std::uint64_t sample_seed) {
    for (ad::Parameter* p : params) p->zero_grad();
    const double base = run(true);
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");

    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (ad::Parameter* p : params) analytic.push_back(p->grad);

    Rng rng(sample_seed);
    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ad::Parameter& p = *params[pi];
        std::vector<Eigen::Index> coords;
        if (max_coords_per_param < 0 || max_coords_per_param >= p.size()) {
            coords.resize(p.size());
            for (Eigen::Index k = 0; k < p.size(); ++k) coords[k] = k;
        } else {
            auto picked = rng.sample_without_replacement(
                static_cast<std::size_t>(p.size()),
                static_cast<std::size_t>(max_coords_per_param));
            coords.assign(picked.begin(), picked.end());
        }
        for (Eigen::Index k : coords) {
            double* cell = p.value.data() + k;
            const double saved = *cell;
            *cell = saved + eps;
            const double up = run(false);
            *cell = saved - eps;
            const double down = run(false);
            *cell = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw std::runtime_error("grad_check: non-finite perturbed loss at " + p.name);
            const double numeric = (up - down) / (2.0 * eps);
            const double a = *(analytic[pi].data() + k);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            const double rel = std::abs(a - numeric) / denom;
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p.name;
                report.worst_index = k;
            }
        }
    }
    return report;
}

}  // namespace herbrec
