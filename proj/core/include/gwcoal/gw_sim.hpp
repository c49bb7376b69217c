// Event-driven forward simulation of the continuous-time branching tree,
// survival conditioning by rejection, uniform k-sampling of the particles
// alive at the horizon, and extraction of the sampled genealogy (split times
// and partition chain).
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcoal/offspring.hpp"
#include "gwcoal/rng.hpp"

namespace gwcoal {

struct PopulationCapError : std::runtime_error {
    explicit PopulationCapError(std::uint64_t cap)
        : std::runtime_error("population cap exceeded (" + std::to_string(cap) + " particles)"),
          cap_value(cap) {}
    std::uint64_t cap_value;
};

struct AttemptsExhaustedError : std::runtime_error {
    AttemptsExhaustedError(std::uint64_t attempts, double survival_estimate)
        : std::runtime_error("max attempts exhausted after " + std::to_string(attempts) +
                             " tries; empirical success rate " + std::to_string(survival_estimate)),
          attempts(attempts),
          survival_estimate(survival_estimate) {}
    std::uint64_t attempts;
    double survival_estimate;
};

struct Particle {
    double birth = 0.0;
    double death = 0.0;  // horizon T when censored
    std::int32_t parent = -1;
    std::int32_t first_child = -1;
    std::int32_t n_children = 0;
    bool alive_at_horizon = false;
};

struct GWTree {
    std::vector<Particle> particles;
    std::vector<std::uint32_t> alive;  // indices of particles alive at the horizon
    double horizon = 0.0;
    std::uint64_t event_count = 0;  // branching events (deaths before the horizon)

    std::uint64_t population() const { return alive.size(); }

    /// Last time u and v shared an ancestor (the death time of their LCA).
    /// Both must be alive at the horizon.
    double coalescence_time(std::uint32_t u, std::uint32_t v) const;

    /// One particle per line: "id parent birth death nchildren".
    std::string dump() const;
};

inline constexpr std::uint64_t kDefaultPopulationCap = 10'000'000;

GWTree simulate(const OffspringLaw& law, double T, Rng& rng,
                std::uint64_t population_cap = kDefaultPopulationCap);

/// Population size at T only; no tree is materialized.
std::uint64_t simulate_population(const OffspringLaw& law, double T, Rng& rng,
                                  std::uint64_t population_cap = kDefaultPopulationCap);

struct ConditionedResult {
    GWTree tree;
    std::uint64_t attempts = 0;
};

/// Rejection-samples until N_T >= k. Throws AttemptsExhaustedError (carrying
/// the empirical success rate) once max_attempts trees have failed.
ConditionedResult simulate_conditioned(const OffspringLaw& law, double T, int k, Rng& rng,
                                       std::uint64_t max_attempts = 1'000'000,
                                       std::uint64_t population_cap = kDefaultPopulationCap);

/// Uniform k-subset of the alive set, as an ordered tuple.
std::vector<std::uint32_t> sample_k_uniform(const GWTree& tree, int k, Rng& rng);

/// Partition of {0..k-1}, canonically labelled: block ids are assigned in
/// order of first appearance, so block_of is lexicographically minimal.
struct Partition {
    std::vector<int> block_of;

    int n_blocks() const;
    std::vector<int> block_sizes() const;  // ordered by smallest element
    std::string encode() const;            // e.g. "0011"
    bool operator==(const Partition& o) const { return block_of == o.block_of; }
};

Partition single_block(int k);

/// One refinement step of a partition chain: block `block` (index into the
/// predecessor's blocks) is replaced by child blocks of sizes child_sizes.
/// child_sizes is in an exchangeable order (see extract_genealogy / samplers).
struct SplitEvent {
    double time = 0.0;
    std::vector<int> sizes_before;  // block sizes just before the split
    int block = 0;                  // which block split
    std::vector<int> child_sizes;   // >= 2 entries; sum == sizes_before[block]
};

struct SampledGenealogy {
    int k = 0;
    std::vector<std::uint32_t> leaves;
    std::vector<double> ordered_splits;    // size k-1, nondecreasing; ties for multiway splits
    std::vector<double> unordered_splits;  // uniformly permuted copy
    std::vector<Partition> chain;          // strictly refining, first entry single block
    std::vector<SplitEvent> events;        // one per distinct jump
};

/// Derives split times, partition chain and split events for the given
/// leaves (distinct, alive at the horizon). The RNG only drives the uniform
/// unordering permutation.
SampledGenealogy extract_genealogy(const GWTree& tree, std::span<const std::uint32_t> leaves,
                                   Rng& rng);

}  // namespace gwcoal
