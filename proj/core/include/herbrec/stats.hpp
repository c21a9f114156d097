#pragma once

#include <cstddef>
#include <vector>

namespace herbrec::stats {

// Upper regularized incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Survival function of the chi-squared distribution with k dof.
double chi2_sf(double x, double dof);

// Pearson chi-squared goodness-of-fit p-value of `observed` counts against
// `expected` counts (same length, expected > 0).
double chi2_gof_pvalue(const std::vector<double>& observed,
                       const std::vector<double>& expected);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
double ks2_statistic(std::vector<double> a, std::vector<double> b);
double ks2_pvalue(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace herbrec::stats
