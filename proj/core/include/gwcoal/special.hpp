// Small special-function kit: regularized incomplete gamma, distribution
// CDFs and test critical values used by the statistics layer.
#pragma once

#include <cstdint>

namespace gwcoal {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Survival function of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, double df);

/// CDF of Gamma(shape, rate) at x.
double gamma_cdf(double x, double shape, double rate);

/// CDF of Exp(rate) at x.
double exponential_cdf(double x, double rate);

/// Asymptotic one-sample Kolmogorov-Smirnov critical value c(alpha)/sqrt(n).
double ks_threshold(double alpha, std::uint64_t n);

}  // namespace gwcoal
