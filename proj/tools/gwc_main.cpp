// gwc: experiment driver for the coalescent toolkit.
//
// Commands: simulate | spine | limit | tables | verify | selftest.
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 population-cap or attempt exhaustion.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gwcoal/experiment.hpp"
#include "gwcoal/gw_sim.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    std::string out_dir;
    std::string grid;
    bool list = false;
};

gwcoal::ExperimentConfig load_config(const CliOverrides& cli) {
    gwcoal::ExperimentConfig cfg;
    if (!cli.config_path.empty())
        cfg = gwcoal::ExperimentConfig::from_json_file(cli.config_path);
    if (cli.seed_set) {
        cfg.seed = cli.seed;
        cfg.seed_set = true;
    }
    if (cli.threads >= 0) cfg.threads = cli.threads;
    if (cfg.threads == 0) {
        if (const char* env = std::getenv("GWC_THREADS")) cfg.threads = std::atoi(env);
    }
    if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
    if (!cli.grid.empty()) {
        cfg.grid.clear();
        std::string token;
        std::vector<double> values;
        for (char c : cli.grid + ",") {
            if (c == ',') {
                if (!token.empty()) values.push_back(std::stod(token));
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        if (cfg.k == 2) {
            for (double v : values) cfg.grid.push_back({v});
        } else {
            cfg.grid.push_back(values);  // one evaluation point
        }
    }
    return cfg;
}

int emit(const gwcoal::ExperimentConfig& cfg, const std::string& name, const std::string& payload) {
    if (cfg.out_dir.empty()) {
        std::cout << payload;
        return 0;
    }
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 2;
    }
    out << payload;
    std::cout << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coalescent structure of continuous-time branching trees: "
                 "simulators, exact formulas, and verification harness"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    CliOverrides cli;
    app.add_option("--config", cli.config_path, "JSON experiment config")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", cli.seed, "master seed (overrides config)");
    app.add_option("--threads", cli.threads, "worker threads (0 = hardware)");
    app.add_option("--out", cli.out_dir, "output directory (default: stdout)");
    app.add_option("--grid", cli.grid, "comma-separated grid values");

    auto* cmd_simulate = app.add_subcommand("simulate", "conditioned forward simulation to CSV");
    auto* cmd_spine = app.add_subcommand("spine", "spine-skeleton samples to CSV");
    auto* cmd_limit = app.add_subcommand("limit", "scaling-limit construction samples to CSV");
    auto* cmd_tables = app.add_subcommand("tables", "closed-form values on a grid to CSV");
    auto* cmd_verify = app.add_subcommand("verify", "run verification checks, JSON report");
    cmd_verify->add_flag("--list", cli.list, "list available checks and exit");
    auto* cmd_selftest = app.add_subcommand("selftest", "fast verification pass (fixed seed)");

    CLI11_PARSE(app, argc, argv);
    cli.seed_set = seed_opt->count() > 0;

    try {
        gwcoal::ExperimentConfig cfg = load_config(cli);
        if (cmd_simulate->parsed()) return emit(cfg, "simulate.csv", gwcoal::run_simulate_csv(cfg));
        if (cmd_spine->parsed()) return emit(cfg, "spine.csv", gwcoal::run_spine_csv(cfg));
        if (cmd_limit->parsed()) return emit(cfg, "limit.csv", gwcoal::run_limit_csv(cfg));
        if (cmd_tables->parsed()) return emit(cfg, "tables.csv", gwcoal::run_tables_csv(cfg));
        if (cmd_verify->parsed()) {
            if (cli.list) {
                for (const auto& name : gwcoal::list_checks()) std::cout << name << "\n";
                return 0;
            }
            gwcoal::VerifySummary summary = gwcoal::run_verify(cfg);
            const int rc = emit(cfg, "verify.json", summary.to_json() + "\n");
            if (rc != 0) return rc;
            return summary.pass ? 0 : 1;
        }
        if (cmd_selftest->parsed()) {
            if (!cfg.seed_set) {
                cfg.seed = 20240817;
                cfg.seed_set = true;
            }
            cfg.checks = {"offspring_size_bias", "recip",   "partial_fractions",
                          "integrate_out",       "k2_identities", "purple",
                          "density_normalization"};
            gwcoal::VerifySummary summary = gwcoal::run_verify(cfg);
            std::cout << summary.to_json() << "\n";
            return summary.pass ? 0 : 1;
        }
    } catch (const gwcoal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gwcoal::PopulationCapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gwcoal::AttemptsExhaustedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
