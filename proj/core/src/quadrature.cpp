#include "gwcoal/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace gwcoal {

namespace {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
constexpr double kKronrodNodes[8] = {
    0.000000000000000000000000000000000e+00,
    2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01,
    5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01,
    8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01,
    9.914553711208126392068546975263285e-01,
};
constexpr double kKronrodWeights[8] = {
    2.094821410847278280129991748917143e-01,
    2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01,
    1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01,
    1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02,
    2.293532201052922496373200805896959e-02,
};
constexpr double kGaussWeights[4] = {
    4.179591836734693877551020408163265e-01,
    3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01,
    1.294849661688696932706114326790820e-01,
};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate_panel(const Integrand& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double f0 = f(c);
    double k15 = kKronrodWeights[0] * f0;
    double g7 = kGaussWeights[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * kKronrodNodes[i];
        const double fs = f(c + dx) + f(c - dx);
        k15 += kKronrodWeights[i] * fs;
        if (i % 2 == 0) g7 += kGaussWeights[i / 2] * fs;
    }
    evals += 15;
    k15 *= h;
    g7 *= h;
    // QUADPACK-style error estimate.
    double err = std::fabs(k15 - g7);
    err = 200.0 * err;
    err = std::min(std::fabs(k15 - g7), err * std::sqrt(err));
    if (err == 0.0) err = std::fabs(k15 - g7);
    return Panel{a, b, k15, err};
}

}  // namespace

QuadResult integrate(const Integrand& f, double a, double b, const QuadOptions& opts) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<Panel> heap;
    Panel p0 = evaluate_panel(f, a, b, res.evaluations);
    double total = p0.value;
    double active_err = p0.error;
    double stuck_err = 0.0;  // panels at floating-point resolution
    heap.push(p0);
    int n_panels = 1;
    while (active_err + stuck_err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total)) &&
           n_panels < opts.max_intervals && !heap.empty()) {
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            active_err -= worst.error;
            stuck_err += worst.error;
            continue;
        }
        Panel left = evaluate_panel(f, worst.a, mid, res.evaluations);
        Panel right = evaluate_panel(f, mid, worst.b, res.evaluations);
        total += left.value + right.value - worst.value;
        active_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++n_panels;
    }
    res.value = total;
    res.error_estimate = active_err + stuck_err;
    res.converged = res.error_estimate <= std::max(opts.abs_tol, opts.rel_tol * std::fabs(total));
    return res;
}

QuadResult integrate_zero_inf(const Integrand& f, const QuadOptions& opts) {
    auto g = [&f](double v) {
        const double om = 1.0 - v;
        const double x = v / om;
        return f(x) / (om * om);
    };
    return integrate(g, 0.0, 1.0, opts);
}

QuadResult integrate_tanh_sinh(const Integrand& f, double a, double b, double abs_tol) {
    // Transform to [-1,1], x = tanh((pi/2) sinh(t)); trapezoid in t with
    // level doubling.
    QuadResult res;
    const double c = 0.5 * (a + b);
    const double h0 = 0.5 * (b - a);
    const double tmax = 3.8;  // weights below ~1e-16 beyond this
    auto term = [&](double t) {
        const double pi2 = 1.5707963267948966;
        const double sh = std::sinh(t);
        const double x = std::tanh(pi2 * sh);
        const double w = pi2 * std::cosh(t) / std::pow(std::cosh(pi2 * sh), 2);
        const double xx = c + h0 * x;
        if (xx <= a || xx >= b) return 0.0;
        double v = f(xx) * w;
        return std::isfinite(v) ? v : 0.0;
    };
    double h = 1.0;
    double sum = term(0.0);
    {
        for (double t = h; t <= tmax; t += h) sum += term(t) + term(-t);
    }
    double prev = sum * h * h0;
    res.evaluations = static_cast<int>(2 * tmax / h) + 1;
    for (int level = 1; level <= 10; ++level) {
        h *= 0.5;
        double add = 0.0;
        for (double t = h; t <= tmax; t += 2 * h) {
            add += term(t) + term(-t);
            res.evaluations += 2;
        }
        sum += add;
        const double cur = sum * h * h0;
        res.error_estimate = std::fabs(cur - prev);
        prev = cur;
        if (level >= 3 && res.error_estimate < abs_tol) {
            res.converged = true;
            break;
        }
    }
    res.value = prev;
    return res;
}

double integrate_checked(const Integrand& f, double a, double b, const QuadOptions& opts) {
    QuadResult r = integrate(f, a, b, opts);
    if (r.converged) return r.value;
    QuadResult ts = integrate_tanh_sinh(f, a, b, opts.abs_tol);
    if (ts.converged) return ts.value;
    throw QuadratureError("quadrature did not converge; achieved error " +
                              std::to_string(std::min(r.error_estimate, ts.error_estimate)),
                          std::min(r.error_estimate, ts.error_estimate));
}

}  // namespace gwcoal
