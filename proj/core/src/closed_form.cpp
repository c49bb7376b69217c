#include "gwcoal/closed_form.hpp"

#include <algorithm>
#include <cmath>

namespace gwcoal {

namespace {

void require_distinct(std::span<const double> e, const char* who) {
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j) {
            const double scale = std::max(std::fabs(e[i]), std::fabs(e[j]));
            if (std::fabs(e[i] - e[j]) <= 1e-12 * scale)
                throw TieError(std::string(who) + ": tied coordinates; perturb symmetrically",
                               1e-7 * std::max(scale, 1.0));
        }
}

// log(1+x) - x/(1+a) style cancellation does not occur here; the shared
// kernel is sum/products of ratios of the e's.
double pf2_kernel(std::span<const double> e, bool finite_domain) {
    const std::size_t k = e.size();
    const double e0 = e[0];
    double first = finite_domain ? 1.0 / (1.0 + e0) : 1.0 / e0;
    for (std::size_t i = 1; i < k; ++i) first *= e[i] / (e[i] - e0);
    double sum = first;
    for (std::size_t j = 1; j < k; ++j) {
        double term = e[j] / ((e[j] - e0) * (e[j] - e0));
        for (std::size_t i = 1; i < k; ++i)
            if (i != j) term *= e[i] / (e[i] - e[j]);
        const double lg = finite_domain ? std::log((1.0 + e0) / (1.0 + e[j]))
                                        : std::log(e0 / e[j]);
        sum += term * lg;
    }
    return sum;
}

}  // namespace

double partial_fraction_integral(std::span<const double> e, Domain domain) {
    if (e.size() < 2) throw std::invalid_argument("partial_fraction_integral: need k >= 2 entries");
    for (double v : e)
        if (!(v > 0.0)) throw std::invalid_argument("partial_fraction_integral: entries must be positive");
    require_distinct(e, "partial_fraction_integral");
    return pf2_kernel(e, domain == Domain::ZeroToOne);
}

double bd_joint_tail(double alpha, double beta, double T, std::span<const double> s) {
    if (!(beta > 0.0) || alpha < 0.0 || std::fabs(beta - alpha) < 1e-9 * beta)
        throw std::invalid_argument("bd_joint_tail: noncritical birth-death required");
    if (s.empty()) return 1.0;
    for (double v : s)
        if (!(v > 0.0 && v <= T)) throw std::invalid_argument("bd_joint_tail: s in (0, T] required");
    require_distinct(s, "bd_joint_tail");

    const double c = beta - alpha;
    const std::size_t k = s.size() + 1;
    // e_j = beta (E_j - 1) / (beta - alpha) with E_j = exp(c (T - s_j)), s_0 = 0.
    std::vector<double> e(k);
    e[0] = beta * std::expm1(c * T) / c;
    for (std::size_t j = 1; j < k; ++j) e[j] = beta * std::expm1(c * (T - s[j - 1])) / c;
    const double kernel = pf2_kernel(e, /*finite_domain=*/true);
    const double E0 = std::exp(c * T);
    const double prefactor = static_cast<double>(k) * beta *
                             std::pow(E0 - alpha / beta, static_cast<double>(k)) /
                             (std::pow(std::expm1(c * T), static_cast<double>(k - 1)) * c);
    return prefactor * kernel;
}

double bd_crit_joint_tail(double beta, double T, std::span<const double> s) {
    if (!(beta > 0.0) || !(T > 0.0)) throw std::invalid_argument("bd_crit_joint_tail: beta, T > 0");
    if (s.empty()) return 1.0;
    for (double v : s)
        if (!(v > 0.0 && v <= 1.0))
            throw std::invalid_argument("bd_crit_joint_tail: scaled s in (0, 1] required");
    require_distinct(s, "bd_crit_joint_tail");

    const std::size_t k = s.size() + 1;
    std::vector<double> e(k);
    e[0] = T;
    for (std::size_t j = 1; j < k; ++j) e[j] = T * (1.0 - s[j - 1]);
    const double kernel = pf2_kernel(e, /*finite_domain=*/true);
    return static_cast<double>(k) * T *
           std::pow(1.0 + 1.0 / (beta * T), static_cast<double>(k)) * kernel;
}

double nearcrit_joint_tail(double r, double mu, std::span<const double> s) {
    if (!(r > 0.0)) throw std::invalid_argument("nearcrit_joint_tail: r > 0 required");
    if (s.empty()) return 1.0;
    for (double v : s)
        if (!(v > 0.0 && v < 1.0))
            throw std::invalid_argument("nearcrit_joint_tail: s in (0, 1) required");
    require_distinct(s, "nearcrit_joint_tail");

    const std::size_t k = s.size() + 1;
    std::vector<double> e(k);
    if (mu == 0.0) {
        e[0] = 1.0;
        for (std::size_t j = 1; j < k; ++j) e[j] = 1.0 - s[j - 1];
    } else {
        // |exp(r mu (1-s_j)) - 1|; the sign is common to all entries and the
        // kernel is 1-homogeneous-inverse, so absolute values are exact.
        e[0] = std::fabs(std::expm1(r * mu));
        for (std::size_t j = 1; j < k; ++j) e[j] = std::fabs(std::expm1(r * mu * (1.0 - s[j - 1])));
    }
    return static_cast<double>(k) * e[0] * pf2_kernel(e, /*finite_domain=*/false);
}

double limit_density(double r, double mu, std::span<const double> s, const QuadOptions& opts) {
    if (!(r > 0.0)) throw std::invalid_argument("limit_density: r > 0 required");
    for (double v : s)
        if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("limit_density: s in [0, 1) required");
    const std::size_t k = s.size() + 1;

    // b_i = |E_i|, a_i = exp(r mu (1 - s_i)) with s_0 = 0; both branches of
    // the sign of mu reduce to the same positive integrand.
    std::vector<double> a(k), b(k);
    a[0] = std::exp(r * mu);
    b[0] = mu == 0.0 ? 1.0 : std::fabs(std::expm1(r * mu));
    for (std::size_t i = 1; i < k; ++i) {
        a[i] = std::exp(r * mu * (1.0 - s[i - 1]));
        b[i] = mu == 0.0 ? 1.0 - s[i - 1] : std::fabs(std::expm1(r * mu * (1.0 - s[i - 1])));
    }
    double prefactor = static_cast<double>(k);
    if (mu != 0.0)
        prefactor *= std::pow(r * std::fabs(mu), static_cast<double>(k - 1)) *
                     std::fabs(-std::expm1(-r * mu));

    auto integrand = [&](double theta) {
        double val = std::pow(theta, static_cast<double>(k - 1));
        for (std::size_t i = 0; i < k; ++i) {
            const double d = 1.0 + theta * b[i];
            val *= a[i] / (d * d);
        }
        return val;
    };
    QuadResult q = integrate_zero_inf(integrand, opts);
    if (!q.converged)
        throw QuadratureError("limit_density: quadrature did not converge", q.error_estimate);
    return prefactor * q.value;
}

double k2_limit(K2Kind kind, double alpha, double beta, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("k2_limit: s > 0 required");
    if (kind == K2Kind::SupercriticalBD) {
        if (!(beta > alpha)) throw std::invalid_argument("k2_limit: supercritical needs beta > alpha");
        const double c = beta - alpha;
        const double em = std::exp(-c * s);
        const double one_minus = -std::expm1(-c * s);
        double bracket;
        if (c * s < 1e-3) {
            const double x = c * s;
            bracket = x * x / 2.0 - x * x * x / 6.0 + x * x * x * x / 24.0;
        } else {
            bracket = c * s - 1.0 + em;
        }
        return 2.0 * em * bracket / (one_minus * one_minus);
    }
    if (!(alpha > beta)) throw std::invalid_argument("k2_limit: subcritical needs alpha > beta");
    const double c = alpha - beta;
    const double E = std::exp(c * s);
    const double em1 = std::expm1(c * s);
    const double lg = std::log1p(beta / (alpha * E - beta));
    return 2.0 * alpha * alpha / (beta * beta) * em1 * (E * lg - beta / alpha);
}

double critical_k2_tail(double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("critical_k2_tail: s in (0,1) required");
    if (s < 1e-4) {
        // log(1-s) + s = -(s^2/2 + s^3/3 + ...)
        double series = 0.0, pw = s * s;
        for (int n = 2; n <= 8; ++n) {
            series += pw / n;
            pw *= s;
        }
        return 2.0 * (1.0 - s) / (s * s) * series;
    }
    return 2.0 * (s - 1.0) / (s * s) * (std::log1p(-s) + s);
}

double athreya_value(double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("athreya_value: s in (0,1) required");
    return 2.0 * (1.0 - s) / (s * s) * (std::log(1.0 / (1.0 - s)) - s);
}

double durrett_series(double s, int n_terms) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("durrett_series: s in (0,1) required");
    if (n_terms < 1) throw std::invalid_argument("durrett_series: n_terms >= 1 required");
    double sum = 0.0, pw = s;
    for (int j = 1; j <= n_terms; ++j) {
        sum += pw / (j + 2);
        pw *= s;
    }
    return (1.0 - s) * (1.0 + 2.0 * sum);
}

double integrate_out_bd(double s_j, double T, double alpha, double beta, double y) {
    if (!(s_j >= 0.0 && s_j <= T)) throw std::invalid_argument("integrate_out_bd: 0 <= s_j <= T");
    const double c = beta - alpha;
    const double Ej = std::exp(c * (T - s_j));
    return std::expm1(c * (T - s_j)) / (c * c * (beta * (1.0 - y) * Ej + beta * y - alpha));
}

double integrate_out_nearcrit(double s_i, double r, double mu, double phi) {
    if (!(s_i >= 0.0 && s_i <= 1.0)) throw std::invalid_argument("integrate_out_nearcrit: 0 <= s_i <= 1");
    if (mu == 0.0) throw std::invalid_argument("integrate_out_nearcrit: mu != 0 required");
    const double em1 = std::expm1(r * mu * (1.0 - s_i));
    return em1 / (r * mu * (1.0 + phi * em1));
}

double purple_rate(double gamma, double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("purple_rate: s in (0,1) required");
    if (gamma == 0.0) return 1.0 / (1.0 - s);
    return gamma + gamma / std::expm1(gamma * (1.0 - s));
}

double yule_time_change(double gamma, double t) {
    if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("yule_time_change: t in [0,1) required");
    if (t == 0.0) return 0.0;
    if (gamma == 0.0) return -std::log1p(-t);
    return std::log(std::expm1(gamma) / std::expm1(gamma * (1.0 - t)));
}

int CoalescentLaw::k() const {
    return std::visit([](const auto& l) { return l.k; }, kind_);
}

double CoalescentLaw::tail(std::span<const double> s) const {
    if (static_cast<int>(s.size()) != k() - 1)
        throw std::invalid_argument("CoalescentLaw::tail: expected k-1 coordinates");
    if (const auto* bd = std::get_if<BDNoncritLaw>(&kind_)) return bd_joint_tail(bd->alpha, bd->beta, bd->T, s);
    if (const auto* bc = std::get_if<BDCritLaw>(&kind_)) return bd_crit_joint_tail(bc->beta, bc->T, s);
    const auto& nc = std::get<NearCritLimitLaw>(kind_);
    return nearcrit_joint_tail(nc.r, nc.mu, s);
}

double CoalescentLaw::tail_smoothed(std::span<const double> s) const {
    try {
        return tail(s);
    } catch (const TieError& te) {
        // Average evaluations at symmetric perturbations of each coordinate.
        const double eps = te.suggested_epsilon;
        std::vector<double> lo(s.begin(), s.end()), hi(s.begin(), s.end());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double delta = eps * (static_cast<double>(i) + 1.0);
            lo[i] -= delta;
            hi[i] += delta;
        }
        return 0.5 * (tail(lo) + tail(hi));
    }
}

double CoalescentLaw::density(std::span<const double> s) const {
    const auto* nc = std::get_if<NearCritLimitLaw>(&kind_);
    if (!nc)
        throw std::invalid_argument(
            "CoalescentLaw::density: only the near-critical limit family has a density");
    if (static_cast<int>(s.size()) != nc->k - 1)
        throw std::invalid_argument("CoalescentLaw::density: expected k-1 coordinates");
    return limit_density(nc->r, nc->mu, s);
}

}  // namespace gwcoal
