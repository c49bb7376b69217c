#include "gwcoal/spine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gwcoal/ensemble.hpp"
#include "gwcoal/quadrature.hpp"

namespace gwcoal {

double SpineSkeleton::total_length() const {
    double acc = 0.0;
    for (const auto& seg : segments) acc += seg.end - seg.begin;
    return acc;
}

namespace {

Partition partition_from_blocks(const std::vector<std::vector<int>>& blocks, int k) {
    std::vector<int> raw(static_cast<std::size_t>(k), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (int m : blocks[b]) raw[static_cast<std::size_t>(m)] = static_cast<int>(b);
    // canonical labels by order of first appearance
    Partition p;
    p.block_of.resize(static_cast<std::size_t>(k));
    std::vector<int> label(blocks.size(), -1);
    int next = 0;
    for (int i = 0; i < k; ++i) {
        int& l = label[static_cast<std::size_t>(raw[static_cast<std::size_t>(i)])];
        if (l < 0) l = next++;
        p.block_of[static_cast<std::size_t>(i)] = l;
    }
    return p;
}

// Blocks ordered canonically (by smallest mark).
void sort_blocks_canonical(std::vector<std::vector<int>>& blocks,
                           std::vector<double>& birth_times) {
    std::vector<std::size_t> order(blocks.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return blocks[a].front() < blocks[b].front();
    });
    std::vector<std::vector<int>> nb;
    std::vector<double> nt;
    for (auto i : order) {
        nb.push_back(std::move(blocks[i]));
        nt.push_back(birth_times[i]);
    }
    blocks = std::move(nb);
    birth_times = std::move(nt);
}

}  // namespace

SpineSkeleton sample_skeleton_bd(int k, double T, const BDParams& p, Rng& rng) {
    if (k < 2) throw std::invalid_argument("sample_skeleton_bd: k >= 2 required");
    if (!(T > 0.0)) throw std::invalid_argument("sample_skeleton_bd: T > 0 required");
    const bool crit = p.critical();
    const double c = p.beta - p.alpha;

    SpineSkeleton skel;
    skel.k = k;
    skel.T = T;
    skel.psis.resize(static_cast<std::size_t>(k - 1));
    for (auto& s : skel.psis) {
        const double u = rng.uniform();
        s = crit ? u * T : -std::log1p(u * std::expm1(-c * T)) / c;
    }
    std::sort(skel.psis.begin(), skel.psis.end());

    std::vector<std::vector<int>> blocks(1);
    std::vector<double> births{0.0};
    blocks[0].resize(static_cast<std::size_t>(k));
    std::iota(blocks[0].begin(), blocks[0].end(), 0);
    skel.chain.push_back(single_block(k));

    for (int step = 0; step < k - 1; ++step) {
        const double psi = skel.psis[static_cast<std::size_t>(step)];
        // Block j splits next with probability (a_j - 1) / (k - step - 1).
        const int denom = k - step - 1;
        double u = rng.uniform() * denom;
        std::size_t chosen = 0;
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            const double w = static_cast<double>(blocks[j].size()) - 1.0;
            if (u < w) {
                chosen = j;
                break;
            }
            u -= w;
        }
        const int a = static_cast<int>(blocks[chosen].size());

        SpineSkeleton::Split ev;
        ev.time = psi;
        for (const auto& b : blocks) ev.sizes_before.push_back(static_cast<int>(b.size()));
        ev.block = static_cast<int>(chosen);
        ev.offspring = 2;

        // Uniform split size, uniform subset.
        const int l = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(a - 1)));
        std::vector<int> marks = blocks[chosen];
        rng.shuffle(marks);
        std::vector<int> g1(marks.begin(), marks.begin() + l);
        std::vector<int> g2(marks.begin() + l, marks.end());
        std::sort(g1.begin(), g1.end());
        std::sort(g2.begin(), g2.end());
        ev.child_sizes = {l, a - l};
        skel.splits.push_back(std::move(ev));

        skel.segments.push_back({births[chosen], psi});
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(chosen));
        births.erase(births.begin() + static_cast<std::ptrdiff_t>(chosen));
        blocks.push_back(std::move(g1));
        births.push_back(psi);
        blocks.push_back(std::move(g2));
        births.push_back(psi);
        sort_blocks_canonical(blocks, births);
        skel.chain.push_back(partition_from_blocks(blocks, k));
    }
    for (std::size_t j = 0; j < blocks.size(); ++j) skel.segments.push_back({births[j], T});
    return skel;
}

namespace {

struct SizeComposition {
    std::vector<int> sizes;  // nonincreasing, >= 2 parts
    double multiplicity;     // number of set partitions with these sizes
};

void enumerate_partitions(int remaining, int max_part, std::vector<int>& cur,
                          std::vector<SizeComposition>& out) {
    if (remaining == 0) {
        if (cur.size() >= 2) {
            SizeComposition sc;
            sc.sizes = cur;
            out.push_back(std::move(sc));
        }
        return;
    }
    for (int part = std::min(max_part, remaining); part >= 1; --part) {
        cur.push_back(part);
        enumerate_partitions(remaining - part, part, cur, out);
        cur.pop_back();
    }
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::vector<SizeComposition> size_compositions(int a) {
    std::vector<SizeComposition> out;
    std::vector<int> cur;
    enumerate_partitions(a, a, cur, out);
    for (auto& sc : out) {
        double denom = 1.0;
        int run = 1;
        for (std::size_t i = 0; i < sc.sizes.size(); ++i) {
            denom *= factorial(sc.sizes[i]);
            if (i + 1 < sc.sizes.size() && sc.sizes[i + 1] == sc.sizes[i])
                ++run;
            else {
                denom *= factorial(run);
                run = 1;
            }
        }
        sc.multiplicity = factorial(a) / denom;
    }
    return out;
}

double descending(int l, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= static_cast<double>(l - i);
    return v;
}

}  // namespace

SpineSkeleton sample_skeleton_general(int k, double T, const OffspringLaw& law,
                                      const MomentCurve& moments, Rng& rng) {
    if (k < 2 || k > 6) throw std::invalid_argument("sample_skeleton_general: 2 <= k <= 6");
    if (moments.max_order() < k || moments.t_max() < T)
        throw std::invalid_argument("sample_skeleton_general: moment curves too small");
    const double m = law.mean();
    const double r = law.rate();
    const auto& pmf = law.pmf();

    struct PendingSplit {
        double time;
        std::vector<int> marks_before;  // marks in the splitting block
        std::vector<std::vector<int>> groups;
        int offspring;
    };
    std::vector<PendingSplit> events;
    std::vector<SpineSkeleton::Segment> segments;

    // Recursive block evolution; exact because subtrees of distinct spine
    // particles are independent with the horizon shifted to the block's
    // birth time.
    auto split_block = [&](auto&& self, std::vector<int> marks, double birth) -> void {
        const int a = static_cast<int>(marks.size());
        if (a == 1) {
            segments.push_back({birth, T});
            return;
        }
        const double horizon = T - birth;
        const double m_end = moments(a, horizon);
        // Survival G(tau) = (M_a(horizon - tau) / M_a(horizon)) e^{(m-1) r tau}.
        auto survival = [&](double tau) {
            return moments(a, horizon - tau) / m_end * std::exp((m - 1.0) * r * tau);
        };
        const double u = rng.uniform_pos();
        double lo = 0.0, hi = horizon;
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            if (survival(mid) > u)
                lo = mid;
            else
                hi = mid;
        }
        const double tau = 0.5 * (lo + hi);
        const double when = birth + tau;
        segments.push_back({birth, when});

        // Event weights: p_l l^(n) * (#partitions with these sizes) * prod M_{a_i}(T - when).
        const auto comps = size_compositions(a);
        std::vector<double> weights;
        std::vector<std::pair<int, int>> choice;  // (composition index, l)
        const double rem = T - when;
        for (std::size_t ci = 0; ci < comps.size(); ++ci) {
            const int n = static_cast<int>(comps[ci].sizes.size());
            double mprod = comps[ci].multiplicity;
            for (int sz : comps[ci].sizes) mprod *= moments(sz, rem);
            for (int l = n; l < static_cast<int>(pmf.size()); ++l) {
                if (pmf[static_cast<std::size_t>(l)] <= 0.0) continue;
                weights.push_back(pmf[static_cast<std::size_t>(l)] * descending(l, n) * mprod);
                choice.emplace_back(static_cast<int>(ci), l);
            }
        }
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0.0)) throw std::runtime_error("sample_skeleton_general: degenerate weights");
        double pick = rng.uniform() * total;
        std::size_t sel = weights.size() - 1;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (pick < weights[i]) {
                sel = i;
                break;
            }
            pick -= weights[i];
        }
        std::vector<int> sizes = comps[static_cast<std::size_t>(choice[sel].first)].sizes;
        const int l = choice[sel].second;

        // Exchangeable group order, uniform assignment of marks given sizes.
        rng.shuffle(sizes);
        rng.shuffle(marks);
        PendingSplit ev;
        ev.time = when;
        ev.marks_before = marks;
        std::sort(ev.marks_before.begin(), ev.marks_before.end());
        ev.offspring = l;
        std::size_t pos = 0;
        for (int sz : sizes) {
            std::vector<int> g(marks.begin() + static_cast<std::ptrdiff_t>(pos),
                               marks.begin() + static_cast<std::ptrdiff_t>(pos + sz));
            pos += static_cast<std::size_t>(sz);
            ev.groups.push_back(std::move(g));
        }
        events.push_back(ev);
        for (auto& g : ev.groups) self(self, std::move(g), when);
    };

    std::vector<int> all(static_cast<std::size_t>(k));
    std::iota(all.begin(), all.end(), 0);
    split_block(split_block, std::move(all), 0.0);

    std::sort(events.begin(), events.end(),
              [](const PendingSplit& a, const PendingSplit& b) { return a.time < b.time; });

    SpineSkeleton skel;
    skel.k = k;
    skel.T = T;
    skel.segments = std::move(segments);
    skel.chain.push_back(single_block(k));

    // Replay events in time order to reconstruct the chain and split records.
    std::vector<std::vector<int>> blocks(1);
    blocks[0].resize(static_cast<std::size_t>(k));
    std::iota(blocks[0].begin(), blocks[0].end(), 0);
    for (const auto& ev : events) {
        for (int rep = 0; rep < static_cast<int>(ev.groups.size()) - 1; ++rep)
            skel.psis.push_back(ev.time);
        SpineSkeleton::Split sp;
        sp.time = ev.time;
        sp.offspring = ev.offspring;
        for (const auto& b : blocks) sp.sizes_before.push_back(static_cast<int>(b.size()));
        std::size_t which = 0;
        for (std::size_t j = 0; j < blocks.size(); ++j)
            if (blocks[j] == ev.marks_before) which = j;
        sp.block = static_cast<int>(which);
        for (const auto& g : ev.groups) sp.child_sizes.push_back(static_cast<int>(g.size()));
        skel.splits.push_back(std::move(sp));

        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(which));
        for (auto g : ev.groups) {
            std::sort(g.begin(), g.end());
            blocks.push_back(std::move(g));
        }
        std::sort(blocks.begin(), blocks.end(),
                  [](const auto& x, const auto& y) { return x.front() < y.front(); });
        skel.chain.push_back(partition_from_blocks(blocks, k));
    }
    return skel;
}

ImmigrationLedger immigrate(const SpineSkeleton& skel, const OffspringLaw& law, Rng& rng,
                            std::uint64_t population_cap, FaultInjection fault) {
    ImmigrationLedger ledger;
    const double m = law.mean();
    const double r = law.rate();
    const double birth_rate = m * r;
    for (const auto& seg : skel.segments) {
        double t = seg.begin + rng.exponential(birth_rate);
        while (t < seg.end) {
            const int family = fault == FaultInjection::PlainOffspringImmigration
                                   ? law.sample(rng)
                                   : law.sample_size_biased(rng);
            ImmigrationLedger::Birth b;
            b.time = t;
            b.offspring = family;
            for (int c = 0; c < family - 1; ++c)
                b.subtree_pop += simulate_population(law, skel.T - t, rng, population_cap);
            ledger.ordinary_total += b.subtree_pop;
            ledger.ordinary.push_back(std::move(b));
            t += rng.exponential(birth_rate);
        }
    }
    for (const auto& sp : skel.splits) {
        const int extras = sp.offspring - static_cast<int>(sp.child_sizes.size());
        if (extras <= 0) continue;
        ImmigrationLedger::Birth b;
        b.time = sp.time;
        b.offspring = sp.offspring;
        for (int c = 0; c < extras; ++c)
            b.subtree_pop += simulate_population(law, skel.T - sp.time, rng, population_cap);
        ledger.residue_total += b.subtree_pop;
        ledger.residue.push_back(std::move(b));
    }
    return ledger;
}

double campbell_formula(const OffspringLaw& law, std::span<const double> psis, double T, double z) {
    if (!(z > 0.0)) throw std::invalid_argument("campbell_formula: z > 0 required");
    const double m = law.mean();
    const double r = law.rate();
    const double ez = std::exp(-z);
    const double uz = law.u(ez);
    double prod = 1.0;
    auto factor = [&](double psi) {
        const double rem = T - psi;
        const double F = backward_F(law, ez, rem);
        return std::exp(-r * (m - 1.0) * rem) * law.u(F) / uz;
    };
    prod *= factor(0.0);
    for (double psi : psis) prod *= factor(psi);
    return prod;
}

std::string CheckReport::to_json() const {
    char buf[384];
    std::snprintf(buf, sizeof buf,
                  "{\"identity\":\"%s\",\"lhs\":%.10g,\"lhs_ci\":%.4g,\"rhs\":%.10g,"
                  "\"rhs_ci\":%.4g,\"pass\":%s}",
                  identity.c_str(), lhs, lhs_ci, rhs, rhs_ci, pass ? "true" : "false");
    return buf;
}

namespace {

struct MeanVar {
    double mean = 0.0;
    double sd_of_mean = 0.0;
};

MeanVar mean_and_se(const std::vector<double>& xs) {
    MeanVar mv;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) mv.mean += x;
    mv.mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mv.mean) * (x - mv.mean);
    var /= std::max(1.0, n - 1.0);
    mv.sd_of_mean = std::sqrt(var / n);
    return mv;
}

}  // namespace

std::vector<CheckReport> campbell_check(const OffspringLaw& law, int k, double T,
                                        std::span<const double> zs, int n_skeletons,
                                        int n_immigrations, std::uint64_t seed, int threads) {
    std::vector<CheckReport> reports;
    for (int b = 0; b < n_skeletons; ++b) {
        Rng skel_rng = Rng::for_stream(seed, 1000000u + static_cast<std::uint64_t>(b));
        SpineSkeleton skel;
        if (law.is_birth_death()) {
            BDParams p{law.pmf()[0] * law.rate(), law.pmf()[2] * law.rate()};
            skel = sample_skeleton_bd(k, T, p, skel_rng);
        } else {
            MomentCurve moments = moment_ode(law, k, T);
            skel = sample_skeleton_general(k, T, law, moments, skel_rng);
        }
        // Ordinary-population samples conditional on this skeleton.
        auto pops = run_replicates<std::uint64_t>(
            static_cast<std::uint64_t>(n_immigrations), seed + static_cast<std::uint64_t>(b),
            threads, [&](std::uint64_t, Rng& rng) {
                return immigrate(skel, law, rng).ordinary_total;
            });
        for (double z : zs) {
            std::vector<double> vals(pops.size());
            for (std::size_t i = 0; i < pops.size(); ++i)
                vals[i] = std::exp(-z * static_cast<double>(pops[i]));
            const MeanVar mv = mean_and_se(vals);
            CheckReport rep;
            char name[96];
            std::snprintf(name, sizeof name, "campbell[bucket=%d,z=%g]", b, z);
            rep.identity = name;
            rep.lhs = mv.mean;
            rep.lhs_ci = 3.0 * mv.sd_of_mean;
            rep.rhs = campbell_formula(law, skel.psis, T, z);
            rep.rhs_ci = 0.0;
            rep.pass = std::fabs(rep.lhs - rep.rhs) <= rep.lhs_ci + 1e-12;
            reports.push_back(std::move(rep));
        }
    }
    return reports;
}

CheckReport firstprop_check(const BDParams& p, double T, int k, double threshold,
                            std::uint64_t n_forward, std::uint64_t n_spine, std::uint64_t seed,
                            int threads) {
    const OffspringLaw law = p.law();
    // Forward: conditioned simulation, uniform k-sample, tail indicator.
    auto forward_vals = run_replicates<double>(
        n_forward, seed, threads, [&](std::uint64_t, Rng& rng) {
            ConditionedResult cr = simulate_conditioned(law, T, k, rng);
            auto leaves = sample_k_uniform(cr.tree, k, rng);
            SampledGenealogy g = extract_genealogy(cr.tree, leaves, rng);
            for (double s : g.ordered_splits)
                if (s < threshold) return 0.0;
            return 1.0;
        });
    const MeanVar fwd = mean_and_se(forward_vals);

    // Spine: per replicate, f(psis) * integral of w^{k-1} (1-w)^{N-k} dw,
    // scaled by E[N^{(k)}] / P(N >= k) / (k-1)!.
    const double prefactor = bd_moment_over_tail(p, k, T) / factorial(k - 1);
    auto spine_vals = run_replicates<double>(
        n_spine, seed ^ 0x9e3779b9u, threads, [&](std::uint64_t, Rng& rng) {
            SpineSkeleton skel = sample_skeleton_bd(k, T, p, rng);
            for (double s : skel.psis)
                if (s < threshold) return 0.0;
            ImmigrationLedger led = immigrate(skel, law, rng);
            const double n = static_cast<double>(led.population(k));
            auto integrand = [&](double w) {
                return std::pow(w, k - 1) * std::pow(1.0 - w, n - k);
            };
            QuadOptions qo;
            qo.abs_tol = 1e-14;
            qo.rel_tol = 1e-10;
            return integrate(integrand, 0.0, 1.0, qo).value;
        });
    MeanVar sp = mean_and_se(spine_vals);
    sp.mean *= prefactor;
    sp.sd_of_mean *= prefactor;

    CheckReport rep;
    char name[96];
    std::snprintf(name, sizeof name, "firstprop[k=%d,T=%g,s>=%g]", k, T, threshold);
    rep.identity = name;
    rep.lhs = fwd.mean;
    rep.lhs_ci = 3.0 * fwd.sd_of_mean;
    rep.rhs = sp.mean;
    rep.rhs_ci = 3.0 * sp.sd_of_mean;
    rep.pass = std::fabs(rep.lhs - rep.rhs) <=
               std::sqrt(rep.lhs_ci * rep.lhs_ci + rep.rhs_ci * rep.rhs_ci) + 1e-12;
    return rep;
}

namespace {

// (1/(k-1)!) int (e^z - 1)^{k-1} E[e^{-zN}] dz under z = -log(1-w); the
// caller supplies h(w) = (1-w)^{-k} E[(1-w)^N] in a cancellation-free form.
double recip_quadrature(int k, const std::function<double(double)>& h) {
    auto integrand = [&](double w) { return std::pow(w, k - 1) * h(w); };
    QuadOptions qo;
    qo.abs_tol = 1e-12;
    qo.rel_tol = 1e-11;
    qo.max_intervals = 20000;
    return integrate_checked(integrand, 0.0, 1.0, qo) / factorial(k - 1);
}

}  // namespace

CheckReport recip_constant_check(int n, int k, double tol) {
    if (n < k) throw std::invalid_argument("recip_constant_check: n >= k required");
    CheckReport rep;
    char name[64];
    std::snprintf(name, sizeof name, "recip[N=%d,k=%d]", n, k);
    rep.identity = name;
    rep.lhs = 1.0 / descending(n, k);
    rep.rhs = recip_quadrature(k, [n, k](double w) { return std::pow(1.0 - w, n - k); });
    rep.pass = std::fabs(rep.lhs - rep.rhs) <= tol;
    return rep;
}

CheckReport recip_geometric_check(int k, double mean, std::uint64_t n_samples,
                                  std::uint64_t seed) {
    // N = 1 + M with M geometric on {1,2,...}; support {2,3,...} keeps the
    // k = 2 left side finite.
    if (!(mean > 2.0)) throw std::invalid_argument("recip_geometric_check: mean > 2 required");
    const double pgeo = 1.0 / (mean - 1.0);
    Rng rng(seed);
    std::vector<double> vals(n_samples);
    for (auto& v : vals) {
        const std::uint64_t mgeo =
            1 + static_cast<std::uint64_t>(std::log(rng.uniform_pos()) / std::log1p(-pgeo));
        v = 1.0 / descending(static_cast<int>(mgeo) + 1, k);
    }
    if (k != 2)
        throw std::invalid_argument("recip_geometric_check: k = 2 (larger k has infinite moments)");
    const MeanVar mv = mean_and_se(vals);
    // E[(1-w)^N] = (1-w)^2 p / (1 - (1-p)(1-w)); divided by (1-w)^k up front.
    auto laplace = [pgeo](double w) {
        const double x = 1.0 - w;
        return pgeo / (1.0 - (1.0 - pgeo) * x);
    };
    CheckReport rep;
    char name[64];
    std::snprintf(name, sizeof name, "recip[N=1+geom(mean=%g),k=%d]", mean, k);
    rep.identity = name;
    rep.lhs = mv.mean;
    rep.lhs_ci = 3.0 * mv.sd_of_mean;
    rep.rhs = recip_quadrature(k, laplace);
    rep.rhs_ci = 0.0;
    rep.pass = std::fabs(rep.lhs - rep.rhs) <= rep.lhs_ci + 1e-12;
    return rep;
}

}  // namespace gwcoal
