#include "gwcoal/gw_sim.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>

namespace gwcoal {

double GWTree::coalescence_time(std::uint32_t u, std::uint32_t v) const {
    if (u == v) throw std::invalid_argument("coalescence_time: particles must be distinct");
    // Walk the later-born lineage upward; birth times strictly increase along
    // any line of descent.
    while (u != v) {
        const Particle& pu = particles[u];
        const Particle& pv = particles[v];
        if (pu.birth > pv.birth) {
            u = static_cast<std::uint32_t>(pu.parent);
        } else if (pv.birth > pu.birth) {
            v = static_cast<std::uint32_t>(pv.parent);
        } else {
            u = static_cast<std::uint32_t>(pu.parent);
            v = static_cast<std::uint32_t>(pv.parent);
        }
    }
    return particles[u].death;
}

std::string GWTree::dump() const {
    std::string out;
    char buf[160];
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const Particle& p = particles[i];
        std::snprintf(buf, sizeof buf, "%zu %d %.17g %.17g %d\n", i, p.parent, p.birth, p.death,
                      p.n_children);
        out += buf;
    }
    return out;
}

GWTree simulate(const OffspringLaw& law, double T, Rng& rng, std::uint64_t population_cap) {
    if (!(T > 0.0)) throw std::invalid_argument("simulate: T > 0 required");
    GWTree tree;
    tree.horizon = T;
    const double rate = law.rate();
    tree.particles.push_back({0.0, rng.exponential(rate), -1, -1, 0, false});
    std::vector<std::uint32_t> pending{0};
    while (!pending.empty()) {
        const std::uint32_t idx = pending.back();
        pending.pop_back();
        if (tree.particles[idx].death >= T) {
            tree.particles[idx].death = T;
            tree.particles[idx].alive_at_horizon = true;
            tree.alive.push_back(idx);
            continue;
        }
        ++tree.event_count;
        const double branch_time = tree.particles[idx].death;
        const int n_off = law.sample(rng);
        if (n_off == 0) continue;
        if (tree.particles.size() + static_cast<std::size_t>(n_off) > population_cap)
            throw PopulationCapError(population_cap);
        tree.particles[idx].first_child = static_cast<std::int32_t>(tree.particles.size());
        tree.particles[idx].n_children = n_off;
        for (int c = 0; c < n_off; ++c) {
            tree.particles.push_back(
                {branch_time, branch_time + rng.exponential(rate),
                 static_cast<std::int32_t>(idx), -1, 0, false});
            pending.push_back(static_cast<std::uint32_t>(tree.particles.size() - 1));
        }
    }
    return tree;
}

std::uint64_t simulate_population(const OffspringLaw& law, double T, Rng& rng,
                                  std::uint64_t population_cap) {
    if (!(T > 0.0)) throw std::invalid_argument("simulate_population: T > 0 required");
    const double rate = law.rate();
    std::uint64_t alive = 0;
    std::uint64_t created = 1;
    std::vector<double> pending{rng.exponential(rate)};  // death times
    while (!pending.empty()) {
        const double death = pending.back();
        pending.pop_back();
        if (death >= T) {
            ++alive;
            continue;
        }
        const int n_off = law.sample(rng);
        created += static_cast<std::uint64_t>(n_off);
        if (created > population_cap) throw PopulationCapError(population_cap);
        for (int c = 0; c < n_off; ++c) pending.push_back(death + rng.exponential(rate));
    }
    return alive;
}

ConditionedResult simulate_conditioned(const OffspringLaw& law, double T, int k, Rng& rng,
                                       std::uint64_t max_attempts, std::uint64_t population_cap) {
    if (k < 1) throw std::invalid_argument("simulate_conditioned: k >= 1 required");
    for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        GWTree tree = simulate(law, T, rng, population_cap);
        if (tree.population() >= static_cast<std::uint64_t>(k))
            return ConditionedResult{std::move(tree), attempt};
    }
    throw AttemptsExhaustedError(max_attempts, 0.0);
}

std::vector<std::uint32_t> sample_k_uniform(const GWTree& tree, int k, Rng& rng) {
    const std::uint64_t n = tree.population();
    if (n < static_cast<std::uint64_t>(k))
        throw std::invalid_argument("sample_k_uniform: fewer than k particles alive");
    // Partial Fisher-Yates over a scratch copy of the alive list.
    std::vector<std::uint32_t> scratch(tree.alive);
    std::vector<std::uint32_t> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const std::uint64_t j = i + rng.below(n - static_cast<std::uint64_t>(i));
        std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
        out.push_back(scratch[static_cast<std::size_t>(i)]);
    }
    return out;
}

int Partition::n_blocks() const {
    int mx = -1;
    for (int b : block_of) mx = std::max(mx, b);
    return mx + 1;
}

std::vector<int> Partition::block_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(n_blocks()), 0);
    for (int b : block_of) ++sizes[static_cast<std::size_t>(b)];
    return sizes;
}

std::string Partition::encode() const {
    std::string s;
    s.reserve(block_of.size());
    for (int b : block_of) {
        if (b < 10)
            s.push_back(static_cast<char>('0' + b));
        else
            s.push_back(static_cast<char>('a' + (b - 10)));
    }
    return s;
}

Partition single_block(int k) { return Partition{std::vector<int>(static_cast<std::size_t>(k), 0)}; }

namespace {

// Canonical relabelling: block ids in order of first appearance.
Partition canonicalize(const std::vector<int>& raw) {
    Partition p;
    p.block_of.resize(raw.size());
    std::map<int, int> relabel;
    int next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto [it, inserted] = relabel.try_emplace(raw[i], next);
        if (inserted) ++next;
        p.block_of[i] = it->second;
    }
    return p;
}

}  // namespace

SampledGenealogy extract_genealogy(const GWTree& tree, std::span<const std::uint32_t> leaves,
                                   Rng& rng) {
    const int k = static_cast<int>(leaves.size());
    if (k < 1) throw std::invalid_argument("extract_genealogy: need at least one leaf");
    for (auto u : leaves)
        if (!tree.particles[u].alive_at_horizon)
            throw std::invalid_argument("extract_genealogy: leaf not alive at horizon");

    SampledGenealogy g;
    g.k = k;
    g.leaves.assign(leaves.begin(), leaves.end());
    g.chain.push_back(single_block(k));
    if (k == 1) return g;

    // Pairwise coalescence times, plus the LCA particle of each pair so the
    // split events can order child blocks by birth order.
    std::vector<std::vector<double>> sigma(static_cast<std::size_t>(k),
                                           std::vector<double>(static_cast<std::size_t>(k), 0.0));
    std::vector<double> jump_times;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            const double s = tree.coalescence_time(leaves[static_cast<std::size_t>(i)],
                                                   leaves[static_cast<std::size_t>(j)]);
            sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
            sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = s;
            jump_times.push_back(s);
        }
    std::sort(jump_times.begin(), jump_times.end());
    jump_times.erase(std::unique(jump_times.begin(), jump_times.end()), jump_times.end());

    // Partition at time t: i ~ j iff sigma(i,j) > t. Evaluated just above
    // each distinct jump; union-find over the pair relation.
    auto partition_after = [&](double t) {
        std::vector<int> root(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) root[static_cast<std::size_t>(i)] = i;
        std::function<int(int)> find = [&](int x) {
            while (root[static_cast<std::size_t>(x)] != x) x = root[static_cast<std::size_t>(x)];
            return x;
        };
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                if (sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > t)
                    root[static_cast<std::size_t>(find(j))] = find(i);
        std::vector<int> raw(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) raw[static_cast<std::size_t>(i)] = find(i);
        return canonicalize(raw);
    };

    Partition prev = single_block(k);
    for (double t : jump_times) {
        Partition cur = partition_after(t);
        const int before = prev.n_blocks();
        const int after = cur.n_blocks();
        const int delta = after - before;
        for (int d = 0; d < delta; ++d) g.ordered_splits.push_back(t);

        // Identify the split block and the child blocks it produced.
        SplitEvent ev;
        ev.time = t;
        ev.sizes_before = prev.block_sizes();
        std::vector<std::vector<int>> children;  // leaves of each child of the split block
        int split_block = -1;
        {
            std::vector<int> first_leaf_of_cur(static_cast<std::size_t>(after), -1);
            std::vector<int> parent_of_cur(static_cast<std::size_t>(after), -1);
            for (int i = 0; i < k; ++i) {
                const int cb = cur.block_of[static_cast<std::size_t>(i)];
                if (first_leaf_of_cur[static_cast<std::size_t>(cb)] < 0) {
                    first_leaf_of_cur[static_cast<std::size_t>(cb)] = i;
                    parent_of_cur[static_cast<std::size_t>(cb)] =
                        prev.block_of[static_cast<std::size_t>(i)];
                }
            }
            std::vector<int> count_children(static_cast<std::size_t>(before), 0);
            for (int cb = 0; cb < after; ++cb)
                ++count_children[static_cast<std::size_t>(parent_of_cur[static_cast<std::size_t>(cb)])];
            for (int pb = 0; pb < before; ++pb)
                if (count_children[static_cast<std::size_t>(pb)] > 1) split_block = pb;
            if (split_block < 0) throw std::logic_error("extract_genealogy: no block split at jump");
            for (int cb = 0; cb < after; ++cb) {
                if (parent_of_cur[static_cast<std::size_t>(cb)] != split_block) continue;
                std::vector<int> members;
                for (int i = 0; i < k; ++i)
                    if (cur.block_of[static_cast<std::size_t>(i)] == cb) members.push_back(i);
                children.push_back(std::move(members));
            }
        }
        ev.block = split_block;
        // Order child blocks by the birth order of the branches they follow:
        // compare the particle index of each child's lineage just after t
        // (children of one parent are stored consecutively).
        {
            std::vector<std::pair<std::uint32_t, std::size_t>> order;
            for (std::size_t c = 0; c < children.size(); ++c) {
                std::uint32_t rep = g.leaves[static_cast<std::size_t>(children[c][0])];
                while (tree.particles[rep].birth > t)
                    rep = static_cast<std::uint32_t>(tree.particles[rep].parent);
                order.emplace_back(rep, c);
            }
            std::sort(order.begin(), order.end());
            for (const auto& [rep, c] : order)
                ev.child_sizes.push_back(static_cast<int>(children[c].size()));
        }
        g.events.push_back(std::move(ev));
        g.chain.push_back(cur);
        prev = std::move(cur);
    }
    if (static_cast<int>(g.ordered_splits.size()) != k - 1)
        throw std::logic_error("extract_genealogy: split count mismatch");

    g.unordered_splits = g.ordered_splits;
    rng.shuffle(g.unordered_splits);
    return g;
}

}  // namespace gwcoal
