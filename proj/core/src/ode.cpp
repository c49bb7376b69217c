#include "gwcoal/ode.hpp"

#include <algorithm>
#include <cmath>

namespace gwcoal {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// Embedded 4th-order weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

struct StepSink {
    std::vector<std::vector<double>*> y_cols;
    std::vector<std::vector<double>*> dy_cols;
    std::vector<double>* ts = nullptr;
    void record(double t, const std::vector<double>& y, const std::vector<double>& dy) {
        if (!ts) return;
        ts->push_back(t);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y_cols[i]->push_back(y[i]);
            dy_cols[i]->push_back(dy[i]);
        }
    }
};

std::vector<double> dopri_integrate(const OdeRhs& f, std::vector<double> y, double t_end,
                                    const OdeOptions& opts, StepSink* sink) {
    const std::size_t n = y.size();
    if (t_end < 0.0) throw OdeError("ode_solve: negative horizon", 0);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    double t = 0.0;
    f(t, y, k1);
    if (sink) sink->record(t, y, k1);
    if (t_end == 0.0) return y;

    double h = t_end / 100.0;
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    long steps = 0;
    bool first_same_as_last = false;
    while (t < t_end) {
        if (++steps > opts.max_steps)
            throw OdeError("ode_solve: step limit exceeded", steps);
        h = std::min(h, t_end - t);
        if (!first_same_as_last) f(t, y, k1);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y4 =
                y[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opts.abs_tol + opts.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            const double d = (ynew[i] - y4) / sc;
            err += d * d;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;
            first_same_as_last = true;
            if (sink) sink->record(t, y, k1);
        } else {
            first_same_as_last = false;
        }
        double factor = 0.9 * std::pow(err > 0 ? err : 1e-10, -0.2);
        factor = std::clamp(factor, 0.2, 5.0);
        h *= factor;
        if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
        if (!(h > 0.0) || t + h == t)
            throw OdeError("ode_solve: step size underflow", steps);
    }
    return y;
}

}  // namespace

std::vector<double> ode_solve(const OdeRhs& f, std::vector<double> y0, double t_end,
                              const OdeOptions& opts) {
    return dopri_integrate(f, std::move(y0), t_end, opts, nullptr);
}

HermiteCurve::HermiteCurve(std::vector<double> t, std::vector<double> y, std::vector<double> dy)
    : t_(std::move(t)), y_(std::move(y)), dy_(std::move(dy)) {
    if (t_.size() != y_.size() || t_.size() != dy_.size() || t_.size() < 1)
        throw std::invalid_argument("HermiteCurve: inconsistent knot arrays");
}

double HermiteCurve::operator()(double t) const {
    if (t <= t_.front()) return y_.front();
    if (t >= t_.back()) return y_.back();
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * dy_[i] + h01 * y_[i + 1] + h11 * h * dy_[i + 1];
}

std::vector<HermiteCurve> ode_solve_curves(const OdeRhs& f, std::vector<double> y0, double t_end,
                                           const OdeOptions& opts) {
    const std::size_t n = y0.size();
    std::vector<double> ts;
    std::vector<std::vector<double>> ys(n), dys(n);
    StepSink sink;
    sink.ts = &ts;
    sink.y_cols.resize(n);
    sink.dy_cols.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sink.y_cols[i] = &ys[i];
        sink.dy_cols[i] = &dys[i];
    }
    dopri_integrate(f, std::move(y0), t_end, opts, &sink);
    std::vector<HermiteCurve> curves;
    curves.reserve(n);
    for (std::size_t i = 0; i < n; ++i) curves.emplace_back(ts, std::move(ys[i]), std::move(dys[i]));
    return curves;
}

}  // namespace gwcoal
