// Empirical/analytic comparison machinery: ECDF-vs-CDF Kolmogorov-Smirnov
// tests, Wilson-banded joint-tail comparison on grids, and chi-square tests
// of the topology rules.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gwcoal/gw_sim.hpp"

namespace gwcoal {

enum class ToleranceRule { ThreeSigma, KSThreshold, Absolute };

struct ComparisonReport {
    std::string statistic;
    std::uint64_t sample_size = 0;
    double observed = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;  // meaning depends on rule
    ToleranceRule rule = ToleranceRule::ThreeSigma;
    bool pass = false;

    std::string to_json() const;
    std::string to_csv_row() const;
    static std::string csv_header();
};

struct KSResult {
    double d = 0.0;
    double threshold = 0.0;
    std::uint64_t n = 0;
    bool pass = false;
};

/// One-sample KS against a supplied CDF; asymptotic critical value at level
/// alpha. Requires n >= 100. Throws on an empty sample.
KSResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                       double alpha = 0.01);

/// Two-sample KS distance (no threshold attached).
double ks_two_sample_distance(std::vector<double> a, std::vector<double> b);

/// Wilson score interval half-test: is `reference` inside the z-sigma Wilson
/// band around successes/n, widened by `slack`?
bool wilson_contains(std::uint64_t successes, std::uint64_t n, double reference, double z,
                     double slack = 0.0);

/// Empirical P(all coordinates >= grid point) vs tail_fn with 3-sigma Wilson
/// bands (+ absolute slack). One report per grid point.
std::vector<ComparisonReport> joint_tail_compare(
    const std::vector<std::vector<double>>& samples,
    const std::function<double(std::span<const double>)>& tail_fn,
    const std::vector<std::vector<double>>& grid, double slack = 0.0);

struct ChiSquareReport {
    std::string statistic;
    double chi2 = 0.0;
    double df = 0.0;
    double p_value = 0.0;
    std::uint64_t n_events = 0;
    std::uint64_t merged_cells = 0;  // cells pooled to keep expected counts >= 5
    bool pass = false;

    std::string to_json() const;
};

struct TopologyReport {
    ChiSquareReport block_choice;   // which block splits: (a_j - 1)/(k - i - 1)
    ChiSquareReport split_sizes;    // ordered child sizes: 1/(a - 1)
    std::uint64_t multiway_events = 0;  // events with > 2 children (excluded)
    bool pass() const { return block_choice.pass && split_sizes.pass; }
};

/// Chi-square of observed split events against the exchangeable topology
/// rules, at significance level alpha.
TopologyReport topology_frequencies(const std::vector<std::vector<SplitEvent>>& chains, int k,
                                    double alpha = 0.01);

}  // namespace gwcoal
