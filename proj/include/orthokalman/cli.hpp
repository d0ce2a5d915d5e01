#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or input error,
// 2 engine error (the failing step is reported on the error stream).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "orthokalman/scenario_io.hpp"
#include "orthokalman/scenarios.hpp"

namespace orthokalman::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitEngine = 2;

/// Relative output paths are resolved against this directory when it is set.
inline constexpr const char* kOutputDirEnv = "ORTHOKALMAN_OUTPUT_DIR";

struct CliConfig {
    std::string example;
    std::string scenario_path;
    std::string out;
    std::string scenario_out;
    std::uint64_t seed = 1;
    Index obs_rows = 2;
    std::string mode = "slope";
    bool precise_at_50 = true;
    Index clocks = 3;
    Index packets = 100;
    PerfOptions perf;
    double tolerance = 1e-9;
    bool skip_prefixes = false;
    bool verbose = false;
};

inline Scenario make_example(const CliConfig& cfg) {
    if (cfg.example == "rotation") {
        RotationOptions opt;
        opt.obs_rows = cfg.obs_rows;
        return gen_rotation(cfg.seed, opt);
    }
    if (cfg.example == "variance") {
        VarianceMode mode;
        if (cfg.mode == "slope") {
            mode = VarianceMode::Slope;
        } else if (cfg.mode == "random-walk") {
            mode = VarianceMode::RandomWalk;
        } else {
            throw ScenarioError("unknown variance mode \"" + cfg.mode + "\"");
        }
        return gen_variance(cfg.seed, mode, cfg.precise_at_50);
    }
    if (cfg.example == "add-remove") {
        return gen_add_remove(cfg.seed);
    }
    if (cfg.example == "projectile") {
        return gen_projectile(cfg.seed);
    }
    if (cfg.example == "clock-offsets") {
        ClockOptions opt;
        opt.clocks = cfg.clocks;
        opt.packets = cfg.packets;
        return gen_clock_offsets(cfg.seed, opt);
    }
    throw ScenarioError("unknown example \"" + cfg.example + "\"");
}

namespace detail {

inline std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
            return std::filesystem::path(dir) / p;
        }
    }
    return p;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    const std::filesystem::path p = resolve_output(path);
    std::ofstream file(p, std::ios::binary);
    if (!file) {
        throw ScenarioError("cannot write " + p.string());
    }
    write(file);
    if (!file) {
        throw ScenarioError("error while writing " + p.string());
    }
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CliConfig cfg;
    CLI::App app{"Orthogonal-transformation Kalman filter and smoother", "orthokalman"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", cfg.verbose, "Report progress on the error stream");

    CLI::App* example = app.add_subcommand("example", "Run a bundled example and write its results as CSV");
    example->add_option("name", cfg.example, "rotation | variance | add-remove | projectile | clock-offsets")
        ->required()
        ->check(CLI::IsMember({"rotation", "variance", "add-remove", "projectile", "clock-offsets"}));
    example->add_option("--seed", cfg.seed, "Noise seed");
    example->add_option("--out", cfg.out, "CSV output path (default: standard output)");
    example->add_option("--scenario-out", cfg.scenario_out, "Also write the generated scenario file");
    example->add_option("--obs-rows", cfg.obs_rows, "rotation: rows of G")->check(CLI::Range(1, 6));
    example->add_option("--mode", cfg.mode, "variance: slope | random-walk")
        ->check(CLI::IsMember({"slope", "random-walk"}));
    example->add_flag("--precise-at-50,!--no-precise-at-50", cfg.precise_at_50,
                      "variance: observe step 50 with sigma 0.25");
    example->add_option("--clocks", cfg.clocks, "clock-offsets: number of clocks")
        ->check(CLI::PositiveNumber);
    example->add_option("--packets", cfg.packets, "clock-offsets: number of packets")
        ->check(CLI::PositiveNumber);

    CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario file and write its results as CSV");
    run_cmd->add_option("file", cfg.scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--out", cfg.out, "CSV output path (default: standard output)");

    CLI::App* perf = app.add_subcommand("perftest", "Time filtering of a random orthogonal system");
    perf->add_option("--dim", cfg.perf.dim, "State dimension")->check(CLI::PositiveNumber);
    perf->add_option("--steps", cfg.perf.steps, "Number of steps")->check(CLI::PositiveNumber);
    perf->add_option("--window", cfg.perf.window, "Forget steps older than this many (0: keep all)")
        ->check(CLI::NonNegativeNumber);
    perf->add_option("--group", cfg.perf.group, "Steps per averaged group")->check(CLI::PositiveNumber);
    perf->add_option("--seed", cfg.perf.seed, "Seed of the random system");
    perf->add_flag("--smooth", cfg.perf.smooth, "Smooth after filtering and report the time");
    perf->add_option("--out", cfg.out, "CSV output path (default: standard output)");

    CLI::App* check = app.add_subcommand("oracle-check", "Compare the filter with the dense least-squares solution");
    check->add_option("file", cfg.scenario_path, "Scenario JSON file")->required();
    check->add_option("--tolerance", cfg.tolerance, "Largest accepted relative state discrepancy");
    check->add_flag("--no-prefixes", cfg.skip_prefixes, "Only compare smoothed estimates");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*example) {
            const Scenario s = make_example(cfg);
            if (!cfg.scenario_out.empty()) {
                detail::emit(cfg.scenario_out, out,
                             [&](std::ostream& os) { os << io::dump_scenario(s); });
            }
            const RunResult result = run(s);
            detail::emit(cfg.out, out, [&](std::ostream& os) { io::write_csv(os, result); });
            if (cfg.verbose) {
                err << s.name << ": " << result.steps.size() << " steps\n";
            }
        } else if (*run_cmd) {
            const Scenario s = io::load_scenario(cfg.scenario_path);
            const RunResult result = run(s);
            detail::emit(cfg.out, out, [&](std::ostream& os) { io::write_csv(os, result); });
            if (cfg.verbose) {
                err << s.name << ": " << result.steps.size() << " steps\n";
            }
        } else if (*perf) {
            const PerfResult result = perftest(cfg.perf);
            detail::emit(cfg.out, out, [&](std::ostream& os) {
                io::write_perf_csv(os, result, cfg.perf.group, cfg.perf.steps);
            });
            if (cfg.verbose) {
                err << "retained at most " << result.max_retained << " steps\n";
                if (cfg.perf.smooth) {
                    err << "smoothing took " << result.smooth_seconds << " s\n";
                }
            }
        } else if (*check) {
            const Scenario s = io::load_scenario(cfg.scenario_path);
            const OracleComparison cmp = compare_with_oracle(s, !cfg.skip_prefixes);
            out << "max relative state discrepancy: " << io::format_double(cmp.max_state_error)
                << "\nmax relative covariance discrepancy: "
                << io::format_double(cmp.max_covariance_error)
                << "\nfiltered steps checked: " << cmp.filtered_checked
                << " (skipped " << cmp.filtered_skipped << ")"
                << "\nsmoothed steps checked: " << cmp.smoothed_checked << '\n';
            if (!(cmp.max_state_error <= cfg.tolerance)) {
                err << "error: discrepancy exceeds tolerance " << cfg.tolerance << '\n';
                return kExitEngine;
            }
        }
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const RunError& e) {
        err << "error: " << e.what() << '\n';
        return kExitEngine;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitEngine;
    }
    return kExitOk;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args, out, err);
}

}  // namespace orthokalman::cli
