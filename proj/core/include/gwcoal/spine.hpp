// Samplers for the k-spine skeleton under the size-biased change of measure
// (exact closed form for birth-death; descending-moment-driven for general
// offspring laws), subtree immigration along the spines, and the
// change-of-measure identity checks built on them.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gwcoal/genfun.hpp"
#include "gwcoal/gw_sim.hpp"
#include "gwcoal/offspring.hpp"
#include "gwcoal/rng.hpp"

namespace gwcoal {

struct SpineSkeleton {
    int k = 0;
    double T = 0.0;
    std::vector<double> psis;  // sorted split times; repeated values for multiway splits

    struct Split {
        double time = 0.0;
        std::vector<int> sizes_before;  // block sizes just before, canonical order
        int block = 0;                  // which block split
        std::vector<int> child_sizes;   // exchangeable order; >= 2 groups
        int offspring = 0;              // children born at the event (l >= n_groups)
    };
    std::vector<Split> splits;        // one per distinct event, ascending time
    std::vector<Partition> chain;     // mark partitions, starting from one block

    struct Segment {
        double begin = 0.0;
        double end = 0.0;
    };
    std::vector<Segment> segments;  // lifetime of each distinct spine line

    /// integral of n_t dt: total spine length carrying immigration.
    double total_length() const;
};

/// Exact skeleton sampler for birth-death: split times are k-1 sorted iid
/// draws with density proportional to exp((beta-alpha)(T-s)) on [0,T]
/// (uniform when critical); the topology follows the (a_j-1)/(k-i-1) block
/// rule with uniform split sizes.
SpineSkeleton sample_skeleton_bd(int k, double T, const BDParams& p, Rng& rng);

/// Sequential sampler for a general finite-support law (k <= 6): each block's
/// next split time comes from inverting the descending-moment survival
/// function, then group sizes and the offspring count are drawn from the
/// exact event weights. `moments` must cover orders 1..k on [0, T].
SpineSkeleton sample_skeleton_general(int k, double T, const OffspringLaw& law,
                                      const MomentCurve& moments, Rng& rng);

enum class FaultInjection {
    None,
    PlainOffspringImmigration,  // deliberately wrong: immigrants not size-biased
};

struct ImmigrationLedger {
    struct Birth {
        double time = 0.0;
        int offspring = 0;          // family size at the event
        std::uint64_t subtree_pop = 0;  // descendants alive at the horizon
    };
    std::vector<Birth> ordinary;  // born off a spine between splits
    std::vector<Birth> residue;   // extra children born at spine split events

    std::uint64_t ordinary_total = 0;
    std::uint64_t residue_total = 0;

    /// N_T = k + ordinary + residue.
    std::uint64_t population(int k) const {
        return static_cast<std::uint64_t>(k) + ordinary_total + residue_total;
    }
};

/// Immigrates subtrees along the skeleton: Poisson births at rate m*r per
/// spine line with size-biased family sizes (the spine continues in one
/// child), plus the leftover children at split events; every subtree runs
/// under the plain measure to the horizon.
ImmigrationLedger immigrate(const SpineSkeleton& skel, const OffspringLaw& law, Rng& rng,
                            std::uint64_t population_cap = kDefaultPopulationCap,
                            FaultInjection fault = FaultInjection::None);

/// Conditional Laplace transform of the ordinary population given the split
/// times: prod_i exp(-r(m-1)(T-psi_i)) u(F(e^-z, T-psi_i)) / u(e^-z), with
/// psi_0 = 0 and F from backward_F.
double campbell_formula(const OffspringLaw& law, std::span<const double> psis, double T, double z);

/// Pass/fail record of one identity check; serializes to a JSON object
/// {identity, lhs, lhs_ci, rhs, rhs_ci, pass}. CI fields are 3-sigma
/// half-widths (0 for exact sides).
struct CheckReport {
    std::string identity;
    double lhs = 0.0;
    double lhs_ci = 0.0;
    double rhs = 0.0;
    double rhs_ci = 0.0;
    bool pass = false;

    std::string to_json() const;
};

/// MC average of e^{-z N~_T} over immigrations, held at fixed skeletons,
/// against campbell_formula; one report per (skeleton bucket, z).
std::vector<CheckReport> campbell_check(const OffspringLaw& law, int k, double T,
                                        std::span<const double> zs, int n_skeletons,
                                        int n_immigrations, std::uint64_t seed, int threads = 1);

/// Two-estimator comparison for tail functionals f = 1{all splits >= threshold}:
/// conditioned forward simulation vs spine sampling with the (e^z-1)^{k-1}
/// kernel integrated by quadrature per replicate.
CheckReport firstprop_check(const BDParams& p, double T, int k, double threshold,
                            std::uint64_t n_forward, std::uint64_t n_spine, std::uint64_t seed,
                            int threads = 1);

/// Reciprocal-descending-moment identity for constant N (both sides exact /
/// quadrature; absolute tolerance).
CheckReport recip_constant_check(int n, int k, double tol = 1e-8);

/// Same identity for N = 1 + geometric (support {2,3,...}) with the given
/// mean: MC left side vs quadrature of the analytic transform.
CheckReport recip_geometric_check(int k, double mean, std::uint64_t n_samples, std::uint64_t seed);

}  // namespace gwcoal
