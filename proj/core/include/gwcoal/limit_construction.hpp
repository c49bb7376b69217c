// Direct sampling of the scaling-limit genealogy: k iid heavy-tailed draws
// normalized by their maximum give the split times; a planar line-attachment
// rule gives the topology.
#pragma once

#include <vector>

#include "gwcoal/gw_sim.hpp"
#include "gwcoal/rng.hpp"

namespace gwcoal {

/// Draw with density (1+x)^{-2} on (0, inf): X = U / (1 - U).
double sample_x(Rng& rng);

struct LimitTimes {
    std::vector<double> times;  // size k; times[max_index] == 0
    int max_index = 0;

    /// The k-1 coordinates other than the maximum, in sampling order;
    /// distributed as the unordered split times of the scaling limit.
    std::vector<double> split_times() const;
};

/// mu == 0: T_i = 1 - X_i / M.  mu != 0: the log-transformed variant.
LimitTimes sample_limit_times(int k, double mu, double r, Rng& rng);

struct LimitTree {
    int k = 0;
    std::vector<double> times;      // split time of each line; 0 for the tallest
    std::vector<double> positions;  // horizontal positions (cosmetic)
    int max_index = 0;
    std::vector<int> attach;  // attach[i] = line i joins; -1 for the tallest
    std::vector<Partition> chain;
    std::vector<SplitEvent> events;  // child_sizes = (new line's block, remainder)

    /// JSON object {"times": [...], "attachments": [...]} for plotting.
    std::string to_json() const;
};

/// Uniform horizontal positions; each line attaches to the first strictly
/// taller line between it and the tallest. The partition chain is derived by
/// sweeping split heights top-down.
LimitTree build_limit_tree(const LimitTimes& times, Rng& rng);

/// Sample of the scaled population limit sum_{i=0}^{k-1} V_i Gamma_i with
/// V_0 = 1, V_1..V_{k-1} iid U[0,1] and Gamma_i iid Gamma(2, rate 2/sigma2).
double q_population_sample(int k, double sigma2, Rng& rng);

}  // namespace gwcoal
