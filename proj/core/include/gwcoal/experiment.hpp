// Reproducible experiment driver behind the command-line tool: validated
// configuration, deterministic CSV emitters for the simulate/spine/limit/
// tables commands, and the named verification-check registry.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcoal/closed_form.hpp"
#include "gwcoal/offspring.hpp"
#include "gwcoal/spine.hpp"

namespace gwcoal {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string regime;  // "bd_noncrit" | "bd_crit" | "near_crit"
    std::optional<OffspringFamily> family;
    double T = 0.0;
    int k = 2;
    std::uint64_t replicates = 1000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;  // 0 = hardware default (or GWC_THREADS)
    std::vector<std::vector<double>> grid;
    std::string out_dir;
    std::string suite = "quick";
    std::vector<std::string> checks;
    std::uint64_t max_attempts = 1'000'000;
    std::uint64_t population_cap = kDefaultPopulationCap;
    FaultInjection fault = FaultInjection::None;
    // Near-critical limit parameters; defaulted from the law when it is the
    // ternary family.
    std::optional<double> mu;
    std::optional<double> r;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);

    const OffspringFamily& require_family() const;
    OffspringLaw law_at_horizon() const;
    CoalescentLaw coalescent_law() const;  // per regime
    double limit_mu() const;
    double limit_r() const;
};

/// Per-replicate unordered split times + topology codes of conditioned
/// forward simulations. Byte-identical for a fixed (config, seed),
/// independent of thread count.
std::string run_simulate_csv(const ExperimentConfig& cfg);

/// Closed-form tails (and densities where defined) on the configured grid.
std::string run_tables_csv(const ExperimentConfig& cfg);

/// Spine-skeleton samples with immigrated population sizes.
std::string run_spine_csv(const ExperimentConfig& cfg);

/// Scaling-limit construction samples.
std::string run_limit_csv(const ExperimentConfig& cfg);

struct VerifySummary {
    std::vector<CheckReport> reports;
    int n_checks = 0;
    int n_failed = 0;
    bool pass = false;

    std::string to_json() const;
};

/// Runs the configured check suite. A check that fails is re-run once with a
/// fresh seed; the suite passes when at least 95% of checks pass.
VerifySummary run_verify(const ExperimentConfig& cfg);

std::vector<std::string> list_checks();

}  // namespace gwcoal
