// Adaptive Gauss-Kronrod (G7/K15) quadrature on finite intervals, with a
// half-infinite transform and a tanh-sinh fallback for endpoint
// singularities the Kronrod rule cannot resolve.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace gwcoal {

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int max_intervals = 4000;
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    bool converged = false;
};

struct QuadratureError : std::runtime_error {
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_error(achieved) {}
    double achieved_error;
};

using Integrand = std::function<double(double)>;

/// Adaptive G7/K15 on [a, b].
QuadResult integrate(const Integrand& f, double a, double b, const QuadOptions& opts = {});

/// Integral over (0, inf) via the substitution x = v/(1-v).
QuadResult integrate_zero_inf(const Integrand& f, const QuadOptions& opts = {});

/// Tanh-sinh rule on [a, b]; tolerates integrable endpoint singularities.
QuadResult integrate_tanh_sinh(const Integrand& f, double a, double b, double abs_tol = 1e-10);

/// As integrate(), but falls back to tanh-sinh when the adaptive rule stalls.
/// Throws QuadratureError if neither converges.
double integrate_checked(const Integrand& f, double a, double b, const QuadOptions& opts = {});

}  // namespace gwcoal
