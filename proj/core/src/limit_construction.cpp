#include "gwcoal/limit_construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gwcoal {

double sample_x(Rng& rng) {
    const double u = rng.uniform();
    return u / (1.0 - u);
}

std::vector<double> LimitTimes::split_times() const {
    std::vector<double> out;
    out.reserve(times.size() - 1);
    for (std::size_t i = 0; i < times.size(); ++i)
        if (static_cast<int>(i) != max_index) out.push_back(times[i]);
    return out;
}

LimitTimes sample_limit_times(int k, double mu, double r, Rng& rng) {
    if (k < 2) throw std::invalid_argument("sample_limit_times: k >= 2 required");
    if (!(r > 0.0)) throw std::invalid_argument("sample_limit_times: r > 0 required");
    std::vector<double> x(static_cast<std::size_t>(k));
    for (;;) {
        for (auto& v : x) v = sample_x(rng);
        bool tied = false;
        for (int i = 0; i < k && !tied; ++i)
            for (int j = i + 1; j < k; ++j)
                if (x[static_cast<std::size_t>(i)] == x[static_cast<std::size_t>(j)]) {
                    tied = true;
                    break;
                }
        if (!tied) break;  // float ties have probability ~0; resample
    }
    const auto max_it = std::max_element(x.begin(), x.end());
    const int max_index = static_cast<int>(max_it - x.begin());
    const double m = *max_it;

    LimitTimes lt;
    lt.max_index = max_index;
    lt.times.resize(static_cast<std::size_t>(k));
    const double scale = mu == 0.0 ? 0.0 : std::expm1(r * mu);
    for (int i = 0; i < k; ++i) {
        const double ratio = x[static_cast<std::size_t>(i)] / m;
        double t;
        if (mu == 0.0)
            t = 1.0 - ratio;
        else
            t = 1.0 - std::log1p(scale * ratio) / (r * mu);
        if (i == max_index) t = 0.0;
        lt.times[static_cast<std::size_t>(i)] = t;
    }
    return lt;
}

LimitTree build_limit_tree(const LimitTimes& lt, Rng& rng) {
    const int k = static_cast<int>(lt.times.size());
    if (k < 2) throw std::invalid_argument("build_limit_tree: k >= 2 required");
    LimitTree tree;
    tree.k = k;
    tree.times = lt.times;
    tree.max_index = lt.max_index;
    tree.positions.resize(static_cast<std::size_t>(k));
    for (auto& u : tree.positions) u = rng.uniform();

    // Line i reaches height 1 - times[i]; a smaller split time means a taller
    // line. Attachment: first strictly taller line scanning from positions[i]
    // toward the tallest line.
    tree.attach.assign(static_cast<std::size_t>(k), -1);
    const double u_max = tree.positions[static_cast<std::size_t>(tree.max_index)];
    for (int i = 0; i < k; ++i) {
        if (i == tree.max_index) continue;
        const double ui = tree.positions[static_cast<std::size_t>(i)];
        int best = tree.max_index;
        double best_dist = std::fabs(u_max - ui);
        for (int j = 0; j < k; ++j) {
            if (j == i || j == tree.max_index) continue;
            const double uj = tree.positions[static_cast<std::size_t>(j)];
            const bool between = (ui < uj && uj < u_max) || (u_max < uj && uj < ui);
            if (!between) continue;
            if (tree.times[static_cast<std::size_t>(j)] >= tree.times[static_cast<std::size_t>(i)])
                continue;  // not strictly taller
            const double d = std::fabs(uj - ui);
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        tree.attach[static_cast<std::size_t>(i)] = best;
    }

    // Ancestor line of leaf i at time t: follow attachments until reaching a
    // line whose split time is <= t.
    auto ancestor_line = [&](int i, double t) {
        while (tree.times[static_cast<std::size_t>(i)] > t) i = tree.attach[static_cast<std::size_t>(i)];
        return i;
    };

    std::vector<std::pair<double, int>> splits;  // (time, line) ascending
    for (int i = 0; i < k; ++i)
        if (i != tree.max_index) splits.emplace_back(tree.times[static_cast<std::size_t>(i)], i);
    std::sort(splits.begin(), splits.end());

    auto partition_at = [&](double t) {
        std::vector<int> raw(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) raw[static_cast<std::size_t>(i)] = ancestor_line(i, t);
        Partition p;
        p.block_of.resize(static_cast<std::size_t>(k));
        std::vector<int> label(static_cast<std::size_t>(k), -1);
        int next = 0;
        for (int i = 0; i < k; ++i) {
            int& l = label[static_cast<std::size_t>(raw[static_cast<std::size_t>(i)])];
            if (l < 0) l = next++;
            p.block_of[static_cast<std::size_t>(i)] = l;
        }
        return p;
    };

    tree.chain.push_back(single_block(k));
    Partition prev = single_block(k);
    for (std::size_t si = 0; si < splits.size(); ++si) {
        const double t = splits[si].first;
        const int line = splits[si].second;
        const double t_next = si + 1 < splits.size() ? splits[si + 1].first : 1.0;
        Partition cur = partition_at(0.5 * (t + t_next));

        SplitEvent ev;
        ev.time = t;
        ev.sizes_before = prev.block_sizes();
        // The new block is the set of leaves whose ancestor line is `line`.
        int new_size = 0;
        int parent_block = -1;
        for (int i = 0; i < k; ++i) {
            if (ancestor_line(i, 0.5 * (t + t_next)) == line) {
                ++new_size;
                parent_block = prev.block_of[static_cast<std::size_t>(i)];
            }
        }
        ev.block = parent_block;
        ev.child_sizes = {new_size, ev.sizes_before[static_cast<std::size_t>(parent_block)] - new_size};
        tree.events.push_back(std::move(ev));
        tree.chain.push_back(cur);
        prev = std::move(cur);
    }
    return tree;
}

std::string LimitTree::to_json() const {
    std::string out = "{\"times\":[";
    char buf[64];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", times[i]);
        out += buf;
    }
    out += "],\"attachments\":[";
    for (std::size_t i = 0; i < attach.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%d", i ? "," : "", attach[i]);
        out += buf;
    }
    out += "]}";
    return out;
}

double q_population_sample(int k, double sigma2, Rng& rng) {
    if (k < 1) throw std::invalid_argument("q_population_sample: k >= 1 required");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("q_population_sample: sigma2 > 0 required");
    const double rate = 2.0 / sigma2;
    double total = rng.gamma_int_shape(2, rate);  // V_0 = 1
    for (int i = 1; i < k; ++i) total += rng.uniform() * rng.gamma_int_shape(2, rate);
    return total;
}

}  // namespace gwcoal
