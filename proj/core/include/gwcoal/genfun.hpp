// Generating functions, extinction probabilities and descending moments of
// the population size: exact closed forms for birth-death, adaptive-ODE
// evaluation for general offspring laws.
#pragma once

#include <vector>

#include "gwcoal/ode.hpp"
#include "gwcoal/offspring.hpp"

namespace gwcoal {

struct BDParams {
    double alpha = 0.0;  // death rate, >= 0
    double beta = 1.0;   // birth rate, > 0

    double rate() const { return alpha + beta; }
    // The noncritical closed forms are 0/0 at alpha == beta; anything inside
    // this band must take the critical branch.
    bool critical() const;
    OffspringLaw law() const;
};

/// p_t = P(N_t = 0).
double bd_extinction(const BDParams& p, double t);

/// q_t, the geometric parameter of the positive part: P(N_t = j) =
/// (1-p_t)(1-q_t) q_t^{j-1} for j >= 1.
double bd_q(const BDParams& p, double t);

/// E[N_t (N_t-1) ... (N_t-k+1)].
double bd_descending_moment(const BDParams& p, int k, double t);

/// P(N_t >= k) = (1 - p_t) q_t^{k-1}.
double bd_tail(const BDParams& p, int k, double t);

/// E[N_t^{(k)}] / P(N_t >= k), needed by the spine identities.
double bd_moment_over_tail(const BDParams& p, int k, double t);

/// F(theta0, t) = E[theta0^{N_t}] for a general offspring law, solved from
/// dF/dt = r u(F). Throws OdeError on solver failure.
double backward_F(const OffspringLaw& law, double theta0, double t, double rel_tol = 1e-10,
                  double abs_tol = 1e-12);

/// Descending-moment curves M_1..M_k on [0, t_max], solved jointly from the
/// triangular system M_k' = k r (m-1) M_k + r sum_{j=2}^k C(k,j) E[L^{(j)}] M_{k+1-j},
/// with M_1(0) = 1 and M_j(0) = 0 for j >= 2.
class MomentCurve {
public:
    MomentCurve() = default;
    MomentCurve(std::vector<HermiteCurve> curves, double t_max)
        : curves_(std::move(curves)), t_max_(t_max) {}

    int max_order() const { return static_cast<int>(curves_.size()); }
    double t_max() const { return t_max_; }

    /// M_order(t); clamps interpolation wiggle below zero.
    double operator()(int order, double t) const;

private:
    std::vector<HermiteCurve> curves_;
    double t_max_ = 0.0;
};

MomentCurve moment_ode(const OffspringLaw& law, int k, double t_max, double rel_tol = 1e-10,
                       double abs_tol = 1e-12);

/// T * P(N_{sT} > 0) for the law the family resolves to at horizon T,
/// computed via backward_F at theta = 0.
double survival_scaled(const OffspringFamily& family, double s, double T);

}  // namespace gwcoal
