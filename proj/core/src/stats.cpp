#include "gwcoal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "gwcoal/special.hpp"

namespace gwcoal {

namespace {
const char* rule_name(ToleranceRule r) {
    switch (r) {
        case ToleranceRule::ThreeSigma: return "3sigma";
        case ToleranceRule::KSThreshold: return "ks";
        case ToleranceRule::Absolute: return "absolute";
    }
    return "?";
}
}  // namespace

std::string ComparisonReport::to_json() const {
    char buf[384];
    std::snprintf(buf, sizeof buf,
                  "{\"statistic\":\"%s\",\"n\":%llu,\"observed\":%.10g,\"reference\":%.10g,"
                  "\"tolerance\":%.6g,\"rule\":\"%s\",\"pass\":%s}",
                  statistic.c_str(), static_cast<unsigned long long>(sample_size), observed,
                  reference, tolerance, rule_name(rule), pass ? "true" : "false");
    return buf;
}

std::string ComparisonReport::csv_header() {
    return "statistic,n,observed,reference,tolerance,rule,pass";
}

std::string ComparisonReport::to_csv_row() const {
    char buf[384];
    std::snprintf(buf, sizeof buf, "%s,%llu,%.10g,%.10g,%.6g,%s,%d", statistic.c_str(),
                  static_cast<unsigned long long>(sample_size), observed, reference, tolerance,
                  rule_name(rule), pass ? 1 : 0);
    return buf;
}

KSResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                       double alpha) {
    if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
    if (samples.size() < 100) throw std::invalid_argument("ks_one_sample: need n >= 100");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(f - lo, hi - f));
    }
    KSResult r;
    r.d = d;
    r.n = samples.size();
    r.threshold = ks_threshold(alpha, r.n);
    r.pass = d <= r.threshold;
    return r;
}

double ks_two_sample_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

bool wilson_contains(std::uint64_t successes, std::uint64_t n, double reference, double z,
                     double slack) {
    if (n == 0) return false;
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    return reference >= center - half - slack && reference <= center + half + slack;
}

std::vector<ComparisonReport> joint_tail_compare(
    const std::vector<std::vector<double>>& samples,
    const std::function<double(std::span<const double>)>& tail_fn,
    const std::vector<std::vector<double>>& grid, double slack) {
    std::vector<ComparisonReport> out;
    for (const auto& point : grid) {
        std::uint64_t hits = 0;
        for (const auto& s : samples) {
            if (s.size() != point.size())
                throw std::invalid_argument("joint_tail_compare: dimension mismatch");
            bool all = true;
            for (std::size_t c = 0; c < point.size(); ++c)
                if (s[c] < point[c]) {
                    all = false;
                    break;
                }
            hits += all;
        }
        ComparisonReport rep;
        std::string name = "tail(";
        char buf[48];
        for (std::size_t c = 0; c < point.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%s%g", c ? "," : "", point[c]);
            name += buf;
        }
        rep.statistic = name + ")";
        rep.sample_size = samples.size();
        rep.observed = static_cast<double>(hits) / static_cast<double>(samples.size());
        rep.reference = tail_fn(point);
        rep.tolerance = slack;
        rep.rule = ToleranceRule::ThreeSigma;
        rep.pass = wilson_contains(hits, samples.size(), rep.reference, 3.0, slack);
        out.push_back(std::move(rep));
    }
    return out;
}

std::string ChiSquareReport::to_json() const {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "{\"statistic\":\"%s\",\"chi2\":%.6g,\"df\":%g,\"p\":%.6g,\"events\":%llu,"
                  "\"merged\":%llu,\"pass\":%s}",
                  statistic.c_str(), chi2, df, p_value, static_cast<unsigned long long>(n_events),
                  static_cast<unsigned long long>(merged_cells), pass ? "true" : "false");
    return buf;
}

namespace {

struct Cell {
    double expected = 0.0;
    double observed = 0.0;
};

// Pearson chi-square over cells grouped by context; within each context the
// expected proportions are conditional, so each context contributes
// (#cells - 1) degrees of freedom. Cells with expected < 5 are pooled into
// one catch-all cell per context.
ChiSquareReport chi_square_grouped(const std::map<std::string, std::map<std::string, Cell>>& table,
                                   const std::string& name, double alpha,
                                   std::uint64_t n_events) {
    ChiSquareReport rep;
    rep.statistic = name;
    rep.n_events = n_events;
    for (const auto& [ctx, cells] : table) {
        (void)ctx;
        std::vector<Cell> kept;
        Cell pooled;
        bool pooling = false;
        // Pool small-expectation cells together.
        for (const auto& [label, cell] : cells) {
            (void)label;
            if (cell.expected < 5.0) {
                pooled.expected += cell.expected;
                pooled.observed += cell.observed;
                pooling = true;
                ++rep.merged_cells;
            } else {
                kept.push_back(cell);
            }
        }
        if (pooling && pooled.expected > 0.0) kept.push_back(pooled);
        if (kept.size() < 2) continue;
        for (const auto& cell : kept)
            rep.chi2 += (cell.observed - cell.expected) * (cell.observed - cell.expected) /
                        cell.expected;
        rep.df += static_cast<double>(kept.size()) - 1.0;
    }
    rep.p_value = rep.df > 0 ? chi2_sf(rep.chi2, rep.df) : 1.0;
    rep.pass = rep.df == 0.0 || rep.p_value >= alpha;
    return rep;
}

std::string sizes_key(const std::vector<int>& sizes) {
    std::vector<int> sorted(sizes);
    std::sort(sorted.begin(), sorted.end());
    std::string key;
    char buf[16];
    for (int s : sorted) {
        std::snprintf(buf, sizeof buf, "%d,", s);
        key += buf;
    }
    return key;
}

}  // namespace

TopologyReport topology_frequencies(const std::vector<std::vector<SplitEvent>>& chains, int k,
                                    double alpha) {
    if (k < 2 || k > 6) throw std::invalid_argument("topology_frequencies: 2 <= k <= 6 required");
    TopologyReport rep;

    // Block choice: context = multiset of block sizes; category = size of the
    // block that split. P(size a splits) = n_a (a-1) / (k - i - 1).
    std::map<std::string, std::map<std::string, Cell>> choice_table;
    std::map<std::string, std::uint64_t> context_counts;
    // Split sizes: context = (a); category = ordered first-child size, each
    // with probability 1/(a-1). Only binary events enter.
    std::map<std::string, std::map<std::string, Cell>> size_table;
    std::map<int, std::uint64_t> size_context_counts;

    std::uint64_t n_events = 0;
    for (const auto& chain : chains) {
        for (const auto& ev : chain) {
            if (static_cast<int>(ev.child_sizes.size()) != 2) {
                ++rep.multiway_events;
                continue;
            }
            ++n_events;
            const int splitter = ev.sizes_before[static_cast<std::size_t>(ev.block)];
            if (ev.sizes_before.size() > 1) {
                const std::string ctx = sizes_key(ev.sizes_before);
                ++context_counts[ctx];
                char lab[16];
                std::snprintf(lab, sizeof lab, "a=%d", splitter);
                choice_table[ctx][lab].observed += 1.0;
            }
            if (splitter >= 2) {
                char ctx[16];
                std::snprintf(ctx, sizeof ctx, "a=%d", splitter);
                ++size_context_counts[splitter];
                char lab[16];
                std::snprintf(lab, sizeof lab, "l=%d", ev.child_sizes[0]);
                size_table[ctx][lab].observed += 1.0;
            }
        }
    }

    // Fill expected counts.
    for (auto& [ctx, cells] : choice_table) {
        // Recover the size multiset from the key.
        std::vector<int> sizes;
        int cur = 0;
        for (char c : ctx) {
            if (c == ',') {
                sizes.push_back(cur);
                cur = 0;
            } else {
                cur = cur * 10 + (c - '0');
            }
        }
        int total_splittable = 0;
        std::map<int, int> count_of_size;
        for (int a : sizes) {
            total_splittable += a - 1;
            ++count_of_size[a];
        }
        const double n_ctx = static_cast<double>(context_counts[ctx]);
        for (auto& [lab, cell] : cells) {
            const int a = std::atoi(lab.c_str() + 2);
            cell.expected = n_ctx * count_of_size[a] * (a - 1.0) / total_splittable;
        }
        // Categories that never appeared still contribute expected mass.
        for (const auto& [a, cnt] : count_of_size) {
            if (a < 2) continue;
            char lab[16];
            std::snprintf(lab, sizeof lab, "a=%d", a);
            auto& cell = cells[lab];
            if (cell.expected == 0.0)
                cell.expected = n_ctx * cnt * (a - 1.0) / total_splittable;
        }
    }
    for (auto& [ctx, cells] : size_table) {
        const int a = std::atoi(ctx.c_str() + 2);
        const double n_ctx = static_cast<double>(size_context_counts[a]);
        for (int l = 1; l <= a - 1; ++l) {
            char lab[16];
            std::snprintf(lab, sizeof lab, "l=%d", l);
            cells[lab].expected = n_ctx / (a - 1.0);
        }
    }

    rep.block_choice = chi_square_grouped(choice_table, "block-choice", alpha, n_events);
    rep.split_sizes = chi_square_grouped(size_table, "split-sizes", alpha, n_events);
    return rep;
}

}  // namespace gwcoal
