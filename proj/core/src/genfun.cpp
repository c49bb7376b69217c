#include "gwcoal/genfun.hpp"

#include <cmath>
#include <stdexcept>

namespace gwcoal {

bool BDParams::critical() const {
    if (!(beta > 0.0) || alpha < 0.0) throw std::invalid_argument("BDParams: need beta > 0, alpha >= 0");
    return std::fabs(beta - alpha) < 1e-9 * beta;
}

OffspringLaw BDParams::law() const {
    const double r = rate();
    return OffspringLaw({alpha / r, 0.0, beta / r}, r);
}

double bd_extinction(const BDParams& p, double t) {
    if (t < 0.0) throw std::invalid_argument("bd_extinction: t >= 0 required");
    if (t == 0.0) return 0.0;
    if (p.critical()) {
        const double bt = p.beta * t;
        return bt / (bt + 1.0);
    }
    const double c = p.beta - p.alpha;
    // alpha (e^{ct} - 1) / (beta e^{ct} - alpha), written with expm1 so the
    // subcritical tail keeps precision.
    const double em1 = std::expm1(c * t);
    return p.alpha * em1 / (p.beta * em1 + c);
}

double bd_q(const BDParams& p, double t) {
    if (t < 0.0) throw std::invalid_argument("bd_q: t >= 0 required");
    if (t == 0.0) return 0.0;
    if (p.critical()) {
        const double bt = p.beta * t;
        return bt / (bt + 1.0);
    }
    const double c = p.beta - p.alpha;
    const double em1 = std::expm1(c * t);
    return p.beta * em1 / (p.beta * em1 + c);
}

double bd_descending_moment(const BDParams& p, int k, double t) {
    if (k < 1) throw std::invalid_argument("bd_descending_moment: k >= 1 required");
    if (t < 0.0) throw std::invalid_argument("bd_descending_moment: t >= 0 required");
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    if (p.critical()) return kfact * std::pow(p.beta * t, k - 1);
    const double c = p.beta - p.alpha;
    const double e = std::exp(c * t);
    return kfact * std::pow(p.beta / c, k - 1) * e * std::pow(std::expm1(c * t), k - 1);
}

double bd_tail(const BDParams& p, int k, double t) {
    if (k < 1) throw std::invalid_argument("bd_tail: k >= 1 required");
    const double pt = bd_extinction(p, t);
    if (k == 1) return 1.0 - pt;
    return (1.0 - pt) * std::pow(bd_q(p, t), k - 1);
}

double bd_moment_over_tail(const BDParams& p, int k, double t) {
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    if (p.critical()) return kfact * std::pow(p.beta * t + 1.0, k);
    const double c = p.beta - p.alpha;
    return kfact * std::pow((p.beta * std::exp(c * t) - p.alpha) / c, k);
}

double backward_F(const OffspringLaw& law, double theta0, double t, double rel_tol,
                  double abs_tol) {
    if (theta0 < 0.0 || theta0 > 1.0) throw std::domain_error("backward_F: theta0 in [0,1] required");
    if (t < 0.0) throw std::invalid_argument("backward_F: t >= 0 required");
    if (t == 0.0 || theta0 == 1.0) return theta0 == 1.0 ? 1.0 : theta0;
    const double r = law.rate();
    OdeOptions opts;
    opts.rel_tol = rel_tol;
    opts.abs_tol = abs_tol;
    auto rhs = [&law, r](double, const std::vector<double>& y, std::vector<double>& dy) {
        double th = y[0];
        if (th < 0.0) th = 0.0;
        if (th > 1.0) th = 1.0;
        dy[0] = r * law.u(th);
    };
    const double F = ode_solve(rhs, {theta0}, t, opts)[0];
    return std::min(1.0, std::max(0.0, F));
}

double MomentCurve::operator()(int order, double t) const {
    if (order < 1 || order > max_order())
        throw std::invalid_argument("MomentCurve: order out of range");
    const double v = curves_[static_cast<std::size_t>(order - 1)](t);
    return v < 0.0 ? 0.0 : v;
}

MomentCurve moment_ode(const OffspringLaw& law, int k, double t_max, double rel_tol,
                       double abs_tol) {
    if (k < 1) throw std::invalid_argument("moment_ode: k >= 1 required");
    if (!(t_max >= 0.0)) throw std::invalid_argument("moment_ode: t_max >= 0 required");
    const double r = law.rate();
    const double m = law.mean();
    // Binomial coefficients and factorial moments, fixed for the whole solve.
    std::vector<std::vector<double>> coef(static_cast<std::size_t>(k) + 1);
    for (int kk = 1; kk <= k; ++kk) {
        coef[static_cast<std::size_t>(kk)].resize(static_cast<std::size_t>(kk) + 1, 0.0);
        double binom = 1.0;
        for (int j = 1; j <= kk; ++j) {
            binom = binom * (kk - j + 1) / j;
            if (j >= 2)
                coef[static_cast<std::size_t>(kk)][static_cast<std::size_t>(j)] =
                    binom * law.factorial_moment(j);
        }
    }
    auto rhs = [&, r, m, k](double, const std::vector<double>& y, std::vector<double>& dy) {
        for (int kk = 1; kk <= k; ++kk) {
            double acc = kk * r * (m - 1.0) * y[static_cast<std::size_t>(kk - 1)];
            for (int j = 2; j <= kk; ++j)
                acc += r * coef[static_cast<std::size_t>(kk)][static_cast<std::size_t>(j)] *
                       y[static_cast<std::size_t>(kk - j)];
            dy[static_cast<std::size_t>(kk - 1)] = acc;
        }
    };
    std::vector<double> y0(static_cast<std::size_t>(k), 0.0);
    y0[0] = 1.0;
    OdeOptions opts;
    opts.rel_tol = rel_tol;
    opts.abs_tol = abs_tol;
    if (t_max > 0.0) opts.max_step = t_max / 256.0;
    auto curves = ode_solve_curves(rhs, std::move(y0), t_max, opts);
    return MomentCurve(std::move(curves), t_max);
}

double survival_scaled(const OffspringFamily& family, double s, double T) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("survival_scaled: s in (0,1] required");
    const OffspringLaw law = family.at_horizon(T);
    return T * (1.0 - backward_F(law, 0.0, s * T));
}

}  // namespace gwcoal
