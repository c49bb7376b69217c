// Offspring distributions for continuous-time branching: a finite pmf on
// {0,..,J} together with the branching rate r, plus parametric families that
// resolve to a concrete law at a given horizon T.
#pragma once

#include <stdexcept>
#include <variant>
#include <vector>

#include "gwcoal/rng.hpp"

namespace gwcoal {

class OffspringLaw {
public:
    /// pmf[j] = P(L = j). Requires sum == 1 (1e-12), all entries >= 0,
    /// p0 + p1 < 1, and rate > 0.
    OffspringLaw(std::vector<double> pmf, double rate);

    double rate() const { return rate_; }
    double mean() const { return mean_; }
    int support_bound() const { return static_cast<int>(pmf_.size()) - 1; }
    const std::vector<double>& pmf() const { return pmf_; }

    /// j-th descending factorial moment E[L(L-1)...(L-j+1)], j >= 1.
    double factorial_moment(int j) const;

    /// Probability generating function E[theta^L]. Accepts theta in
    /// [0, 1 + headroom]; headroom gives root-finders a little slack.
    double pgf(double theta, double headroom = 1e-9) const;

    /// u(theta) = pgf(theta) - theta.
    double u(double theta, double headroom = 1e-9) const;

    /// Derivative u'(theta) = pgf'(theta) - 1.
    double u_prime(double theta, double headroom = 1e-9) const;

    int sample(Rng& rng) const;

    /// Draws j with probability j p_j / m.
    int sample_size_biased(Rng& rng) const;

    bool is_birth_death() const;

private:
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    std::vector<double> size_biased_cdf_;
    double rate_;
    double mean_;
};

struct BirthDeathFamily {
    double alpha;  // death rate
    double beta;   // birth rate
};

struct ExplicitFamily {
    std::vector<double> pmf;
    double rate;
};

/// Support {0,1,2} with mean exactly 1 + mu/T. The second factorial moment is
/// sigma2 exactly whenever p1 = 1 + mu/T - sigma2 is nonnegative; otherwise
/// p1 is pinned to 0 and the second factorial moment becomes 1 + mu/T, which
/// drifts from sigma2 by O(1/T) and vanishes in the large-T limit.
struct NearCriticalTernaryFamily {
    double rate;
    double mu;
    double sigma2;
};

class OffspringFamily {
public:
    using Kind = std::variant<BirthDeathFamily, ExplicitFamily, NearCriticalTernaryFamily>;

    OffspringFamily(BirthDeathFamily f) : kind_(f) {}
    OffspringFamily(ExplicitFamily f) : kind_(std::move(f)) {}
    OffspringFamily(NearCriticalTernaryFamily f) : kind_(f) {}

    /// Law at horizon T. Throws std::invalid_argument when the parameters do
    /// not yield a valid pmf at this horizon.
    OffspringLaw at_horizon(double T) const;

    const Kind& kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace gwcoal
