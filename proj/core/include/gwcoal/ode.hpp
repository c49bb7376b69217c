// Adaptive Dormand-Prince 4(5) integrator for the small, smooth systems used
// here (generating-function and descending-moment equations). Accepted steps
// can be captured into a cubic-Hermite curve for later interpolation.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwcoal {

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.0;  // 0 = unrestricted
    long max_steps = 2'000'000;
};

struct OdeError : std::runtime_error {
    OdeError(const std::string& what, long steps) : std::runtime_error(what), steps_taken(steps) {}
    long steps_taken;
};

/// Right-hand side: dy/dt = f(t, y, dy).
using OdeRhs = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;

/// Integrate from t=0 to t_end; returns y(t_end).
std::vector<double> ode_solve(const OdeRhs& f, std::vector<double> y0, double t_end,
                              const OdeOptions& opts = {});

/// One interpolated scalar component of an ODE solution, stored as accepted
/// solver knots with exact derivatives (cubic Hermite between knots).
class HermiteCurve {
public:
    HermiteCurve() = default;
    HermiteCurve(std::vector<double> t, std::vector<double> y, std::vector<double> dy);

    double operator()(double t) const;
    double t_max() const { return t_.empty() ? 0.0 : t_.back(); }
    std::size_t knots() const { return t_.size(); }

private:
    std::vector<double> t_, y_, dy_;
};

/// Integrate and capture every component as a HermiteCurve over [0, t_end].
std::vector<HermiteCurve> ode_solve_curves(const OdeRhs& f, std::vector<double> y0, double t_end,
                                           const OdeOptions& opts = {});

}  // namespace gwcoal
