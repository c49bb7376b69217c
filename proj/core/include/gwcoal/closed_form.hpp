// Exact joint distribution functions for the split times of a uniform
// k-sample, their scaling limits, limit densities, and the analytic
// integrals they reduce to. Pure functions; all take explicit parameters.
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gwcoal/quadrature.hpp"

namespace gwcoal {

/// Analytic formulas below are singular when two evaluation coordinates
/// coincide; callers get a TieError with a suggested symmetric perturbation.
struct TieError : std::invalid_argument {
    TieError(const std::string& what, double eps)
        : std::invalid_argument(what), suggested_epsilon(eps) {}
    double suggested_epsilon;
};

enum class Domain { ZeroToOne, ZeroToInf };

/// integral of (1+theta e_0)^{-2} prod_{j>=1} (1 - 1/(1+theta e_j)) dtheta
/// over the chosen domain, in closed form. Entries must be positive and
/// pairwise distinct (ties raise TieError).
double partial_fraction_integral(std::span<const double> e, Domain domain);

/// Joint survival function of the k-1 unordered split times of a uniform
/// k-sample at horizon T, noncritical birth-death (alpha != beta).
/// s entries in (0, T], pairwise distinct.
double bd_joint_tail(double alpha, double beta, double T, std::span<const double> s);

/// Critical birth-death (alpha == beta == beta), arguments already scaled:
/// s entries in (0, 1], pairwise distinct; evaluates P(S_i/T >= s_i for all i).
double bd_crit_joint_tail(double beta, double T, std::span<const double> s);

/// Near-critical scaling limit: s entries in (0,1), pairwise distinct.
/// mu = 0 selects the critical branch; the function is continuous in mu.
double nearcrit_joint_tail(double r, double mu, std::span<const double> s);

/// Density of the scaling limit of the unordered split times at s in
/// (0,1)^{k-1}, by adaptive quadrature over the mixing variable.
double limit_density(double r, double mu, std::span<const double> s,
                     const QuadOptions& opts = {});

enum class K2Kind { SupercriticalBD, SubcriticalBD };

/// T -> infinity limits for a sampled pair from a birth-death process.
/// Supercritical (beta > alpha): returns P(split >= s).
/// Subcritical (alpha > beta): returns P(split >= T - s), i.e. the
/// distribution function of the distance-from-horizon variable at s.
double k2_limit(K2Kind kind, double alpha, double beta, double s);

/// Critical k=2 limit tail 2(s-1)/s^2 (log(1-sexp) + s).
double critical_k2_tail(double s);

/// Same limit via the geometric-mixture representation.
double athreya_value(double s);

/// Same limit via the power series, truncated after n_terms.
double durrett_series(double s, int n_terms);

/// Antiderivative identities used to integrate one coordinate out of the
/// joint densities (verified against quadrature in the tests).
double integrate_out_bd(double s_j, double T, double alpha, double beta, double y);
double integrate_out_nearcrit(double s_i, double r, double mu, double phi);

/// Branching rate of the skeleton of surviving lineages at scaled time s,
/// for near-criticality parameter gamma (gamma == 0 gives the critical
/// analogue 1/(1-s)), and the matching deterministic time change mapping it
/// to a unit-rate binary tree.
double purple_rate(double gamma, double s);
double yule_time_change(double gamma, double t);

// ---------------------------------------------------------------------------
// Parameter bundle selecting which closed-form family applies.

struct BDNoncritLaw {
    double alpha, beta, T;
    int k;
};
struct BDCritLaw {
    double beta, T;
    int k;
};
struct NearCritLimitLaw {
    double r, mu;
    int k;
};

class CoalescentLaw {
public:
    using Kind = std::variant<BDNoncritLaw, BDCritLaw, NearCritLimitLaw>;

    CoalescentLaw(BDNoncritLaw l) : kind_(l) {}
    CoalescentLaw(BDCritLaw l) : kind_(l) {}
    CoalescentLaw(NearCritLimitLaw l) : kind_(l) {}

    int k() const;
    /// Joint survival function at the k-1 coordinates of s.
    double tail(std::span<const double> s) const;
    /// Averages tail over +/- eps perturbations of tied coordinates.
    double tail_smoothed(std::span<const double> s) const;
    /// Joint density; only defined for the near-critical limit family.
    double density(std::span<const double> s) const;

    const Kind& kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace gwcoal
