#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainopt/adpsa.hpp"
#include "chainopt/baselines.hpp"
#include "chainopt/harness.hpp"
#include "chainopt/instance.hpp"
#include "chainopt/io.hpp"

namespace chainopt::cli {

/// Invalid flag combinations, bad values, unusable config files. Exit 2.
struct UsageError : Error {
    using Error::Error;
};

/// Filesystem-level failures (missing/unreadable/unwritable paths). Exit 4.
struct IoError : Error {
    using Error::Error;
};

namespace detail {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitGuardRail = 3;
inline constexpr int kExitIo = 4;

struct Options {
    std::string instance_path;
    std::string config_path;
    std::string out_dir = "chainopt-out";
    std::string algo = "adpsa";
    std::string algos = "adpsa,pso,sa,pseudo";
    std::string reference = "adpsa";
    std::string weights_arg;
    std::int64_t iters = 0;
    double seconds = 0.0;
    bool iters_given = false;
    bool seconds_given = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int trials = 100;
    int runs = 500;
    bool regen_instance = false;

    // gen-specific
    int gen_M = 1000;
    double rho_mean = 100.0, rho_std = 5.0;
    double x_mean = 40000.0, x_std = 4000.0;
    double law_floor = 1.0;
    int m_min = -1, m_max = -1, theta_min = -1, theta_max = -1;

    SwarmParams swarm;
    SaParams sa;
    RunOptions run_opts;
};

inline std::vector<std::string> split_csv_list(const std::string& arg) {
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

inline Weights parse_weights_arg(const std::string& arg) {
    const auto parts = split_csv_list(arg);
    if (parts.size() != 3)
        throw UsageError("--weights expects three comma-separated values, got: " + arg);
    Weights w;
    try {
        w.beta1 = std::stod(parts[0]);
        w.beta2 = std::stod(parts[1]);
        w.beta3 = std::stod(parts[2]);
    } catch (const std::exception&) {
        throw UsageError("--weights values must be numbers, got: " + arg);
    }
    try {
        check(w);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    return w;
}

/// Overlays config-file values (JSON: swarm / sa / harness sections) onto
/// the built-in defaults. CLI flags are applied afterwards and win.
inline void apply_config_file(Options& opt) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + opt.config_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(opt.config_path + ": " + e.what());
    }
    try {
        if (j.contains("swarm")) {
            const auto& s = j.at("swarm");
            if (s.contains("N")) opt.swarm.pop_size = s.at("N").get<int>();
            if (s.contains("n")) opt.swarm.iters = s.at("n").get<std::int64_t>();
            if (s.contains("c1")) opt.swarm.cognitive = s.at("c1").get<double>();
            if (s.contains("c2")) opt.swarm.social = s.at("c2").get<double>();
            if (s.contains("w_max")) opt.swarm.inertia_max = s.at("w_max").get<double>();
            if (s.contains("w_min")) opt.swarm.inertia_min = s.at("w_min").get<double>();
            if (s.contains("c_pm")) opt.swarm.grid_div_m = s.at("c_pm").get<int>();
            if (s.contains("c_ptheta")) opt.swarm.grid_div_theta = s.at("c_ptheta").get<int>();
            if (s.contains("c_vm")) opt.swarm.vel_div_m = s.at("c_vm").get<double>();
            if (s.contains("c_vtheta")) opt.swarm.vel_div_theta = s.at("c_vtheta").get<double>();
            if (s.contains("count_from_global_best"))
                opt.swarm.count_from_global_best = s.at("count_from_global_best").get<bool>();
        }
        if (j.contains("sa")) {
            const auto& s = j.at("sa");
            if (s.contains("cooling")) opt.sa.cooling = s.at("cooling").get<double>();
            if (s.contains("t0")) opt.sa.t0 = s.at("t0").get<double>();
            if (s.contains("t0_samples")) opt.sa.t0_samples = s.at("t0_samples").get<int>();
        }
        if (j.contains("harness")) {
            const auto& h = j.at("harness");
            if (h.contains("threads")) opt.run_opts.threads = h.at("threads").get<int>();
            if (h.contains("pin_wall_clock"))
                opt.run_opts.pin_wall_clock = h.at("pin_wall_clock").get<bool>();
            if (h.contains("regenerate_instance_per_run"))
                opt.run_opts.regenerate_instance_per_run =
                    h.at("regenerate_instance_per_run").get<bool>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(opt.config_path + ": " + e.what());
    }
    try {
        check(opt.swarm);
        check(opt.sa);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
}

inline Budget resolve_budget(const Options& opt, bool required) {
    if (opt.iters_given && opt.seconds_given)
        throw UsageError("set exactly one of --iters and --seconds");
    if (opt.iters_given) {
        if (opt.iters < 1) throw UsageError("--iters must be >= 1");
        return Budget::iters(opt.iters);
    }
    if (opt.seconds_given) {
        if (!(opt.seconds > 0)) throw UsageError("--seconds must be > 0");
        return Budget::wall_clock(opt.seconds);
    }
    if (required) throw UsageError("set exactly one of --iters and --seconds");
    return Budget::iters(1);  // placeholder for budget-free algorithms
}

inline std::uint64_t resolve_seed(Options& opt) {
    if (!opt.seed_given) {
        std::random_device rd;
        opt.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cout << "seed not given; drew seed=" << opt.seed << "\n";
    }
    return opt.seed;
}

inline Instance load_instance_checked(const std::string& path) {
    if (path.empty()) throw UsageError("--instance is required");
    if (!std::filesystem::exists(path)) throw IoError("instance file not found: " + path);
    return load_instance(path);
}

inline void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

inline nlohmann::json swarm_to_json(const SwarmParams& sp) {
    return {{"N", sp.pop_size},        {"n", sp.iters},
            {"c1", sp.cognitive},      {"c2", sp.social},
            {"w_max", sp.inertia_max}, {"w_min", sp.inertia_min},
            {"c_pm", sp.grid_div_m},   {"c_ptheta", sp.grid_div_theta},
            {"c_vm", sp.vel_div_m},    {"c_vtheta", sp.vel_div_theta},
            {"count_from_global_best", sp.count_from_global_best}};
}

inline nlohmann::json sa_to_json(const SaParams& sa) {
    return {{"cooling", sa.cooling}, {"t0", sa.t0}, {"t0_samples", sa.t0_samples}};
}

inline nlohmann::json effective_config_json(const Options& opt, const std::string& command,
                                            const std::string& hash, const Budget& budget,
                                            const Weights& weights,
                                            const std::vector<std::string>& algorithms) {
    nlohmann::json j;
    j["schema"] = kRunConfigSchema;
    j["command"] = command;
    j["instance"] = {{"path", opt.instance_path}, {"hash", hash}};
    j["algorithms"] = algorithms;
    j["budget"] = budget_to_json(budget);
    j["seed"] = opt.seed;
    j["weights"] = weights_to_json(weights);
    j["swarm"] = swarm_to_json(opt.swarm);
    j["sa"] = sa_to_json(opt.sa);
    j["harness"] = {{"threads", opt.run_opts.threads},
                    {"pin_wall_clock", opt.run_opts.pin_wall_clock},
                    {"regenerate_instance_per_run", opt.run_opts.regenerate_instance_per_run}};
    j["deterministic"] = budget.deterministic();
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

inline int cmd_gen(Options& opt) {
    if (opt.out_dir.empty()) throw UsageError("gen requires --out <file>");
    resolve_seed(opt);

    PoolSpec spec;
    spec.M = opt.gen_M;
    spec.rho_law = DistributionSpec{"normal", opt.rho_mean, opt.rho_std, opt.law_floor};
    spec.x_law = DistributionSpec{"normal", opt.x_mean, opt.x_std, opt.law_floor};

    SearchSpace space;
    space.m_min = opt.m_min >= 0 ? opt.m_min : std::min(2, spec.M);
    space.m_max = opt.m_max >= 0 ? opt.m_max : spec.M;
    space.theta_min = opt.theta_min >= 0 ? opt.theta_min : 2;
    space.theta_max = opt.theta_max >= 0 ? opt.theta_max : 1000;

    Weights weights = default_weights();
    if (!opt.weights_arg.empty()) weights = parse_weights_arg(opt.weights_arg);

    Instance inst;
    try {
        inst = make_instance(spec, opt.seed, default_params(), space, weights);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    const auto path = std::filesystem::path(opt.out_dir);
    if (path.has_parent_path()) ensure_out_dir(path.parent_path().string());
    write_file_atomic(path, to_json(inst).dump(2) + "\n");
    std::cout << "wrote instance " << path.string() << " (M=" << spec.M
              << ", hash=" << instance_hash(inst) << ", seed=" << opt.seed << ")\n";
    return kExitOk;
}

inline int cmd_solve(Options& opt) {
    if (!known_algorithm(opt.algo)) throw UsageError("unknown algorithm: " + opt.algo);
    const Budget budget = resolve_budget(opt, opt.algo != "oracle");
    resolve_seed(opt);
    const Instance inst = load_instance_checked(opt.instance_path);
    const Weights weights =
        opt.weights_arg.empty() ? inst.weights : parse_weights_arg(opt.weights_arg);
    const std::string hash = instance_hash(inst);

    const SolverReport report =
        run_algorithm(opt.algo, inst, weights, opt.swarm, opt.sa, budget, opt.seed);

    ensure_out_dir(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);
    const bool timing = !budget.deterministic();
    write_json(dir / "config.json",
               effective_config_json(opt, "solve", hash, budget, weights, {opt.algo}));
    write_json(dir / "report.json", report_to_json(report, timing));
    write_file_atomic(dir / "report.csv", report_csv(report, timing));
    write_file_atomic(dir / "trace.csv", trace_csv(report, timing));
    write_json(dir / "timing.json", timing_json(report));

    std::int64_t selected = 0;
    for (auto bit : report.best.z) selected += bit;
    std::cout << opt.algo << ": best_utility=" << format_double(report.best_utility)
              << " m=" << report.best.m << " theta=" << report.best.theta
              << " selected=" << selected << " iterations=" << report.iterations
              << " elapsed_s=" << format_double(report.elapsed_seconds) << "\n"
              << "outputs in " << dir.string() << "\n";
    return kExitOk;
}

inline int cmd_bench(Options& opt) {
    const auto algorithms = split_csv_list(opt.algos);
    if (algorithms.empty()) throw UsageError("--algos must name at least one algorithm");
    for (const auto& a : algorithms)
        if (!known_algorithm(a)) throw UsageError("unknown algorithm: " + a);
    if (opt.trials < 1) throw UsageError("--trials must be >= 1");
    const Budget budget = resolve_budget(opt, true);
    resolve_seed(opt);
    const Instance inst = load_instance_checked(opt.instance_path);
    const Weights weights =
        opt.weights_arg.empty() ? inst.weights : parse_weights_arg(opt.weights_arg);
    const std::string hash = instance_hash(inst);

    TrialResults results = run_trials(inst, weights, algorithms, budget, opt.trials, opt.seed,
                                      opt.run_opts, opt.swarm, opt.sa);
    results.meta.instance_hash = hash;
    const auto stats = summary_stats(results);

    std::vector<RelDiffCdf> cdfs;
    const bool have_reference =
        std::find(algorithms.begin(), algorithms.end(), opt.reference) != algorithms.end();
    if (have_reference && algorithms.size() > 1)
        cdfs = relative_difference_cdf(results, opt.reference);

    ensure_out_dir(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);
    const bool timing = !budget.deterministic();
    write_json(dir / "config.json",
               effective_config_json(opt, "bench", hash, budget, weights, algorithms));
    write_file_atomic(dir / "trials.csv", trials_csv(results, timing));
    nlohmann::json summary;
    summary["schema"] = kSummarySchema;
    summary["instance_hash"] = hash;
    summary["trials"] = opt.trials;
    summary["budget"] = budget_to_json(budget);
    summary["stats"] = stats_to_json(stats);
    if (!cdfs.empty()) {
        summary["reference"] = opt.reference;
        summary["relative_difference"] = cdf_summary_json(cdfs);
    }
    write_json(dir / "summary.json", summary);
    for (const auto& cdf : cdfs)
        write_file_atomic(dir / ("cdf_" + cdf.algorithm + ".csv"), cdf_csv(cdf));
    write_json(dir / "timing.json", timing_json(results));

    for (const auto& [name, s] : stats)
        std::cout << name << ": mean=" << format_double(s.mean)
                  << " median=" << format_double(s.median)
                  << " variance=" << format_double(s.variance) << " (n=" << s.count << ")\n";
    std::cout << "outputs in " << dir.string() << "\n";
    return kExitOk;
}

inline int cmd_sweep(Options& opt) {
    const auto algorithms = split_csv_list(opt.algos);
    if (algorithms.empty()) throw UsageError("--algos must name at least one algorithm");
    for (const auto& a : algorithms)
        if (!known_algorithm(a)) throw UsageError("unknown algorithm: " + a);
    if (opt.runs < 1) throw UsageError("--runs must be >= 1");
    if (std::find(algorithms.begin(), algorithms.end(), opt.reference) == algorithms.end())
        throw UsageError("--reference must be one of --algos");
    const Budget budget = resolve_budget(opt, true);
    resolve_seed(opt);
    opt.run_opts.regenerate_instance_per_run =
        opt.run_opts.regenerate_instance_per_run || opt.regen_instance;
    const Instance inst = load_instance_checked(opt.instance_path);
    const std::string hash = instance_hash(inst);

    SweepResults sweep;
    try {
        sweep = run_weight_sweep(inst, algorithms, opt.reference, budget, opt.runs, opt.seed,
                                 opt.run_opts, opt.swarm, opt.sa);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    ensure_out_dir(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);
    write_json(dir / "config.json",
               effective_config_json(opt, "sweep", hash, budget, inst.weights, algorithms));
    write_file_atomic(dir / "sweep_runs.csv", sweep_runs_csv(sweep));
    nlohmann::json summary;
    summary["schema"] = kSummarySchema;
    summary["instance_hash"] = hash;
    summary["runs"] = opt.runs;
    summary["budget"] = budget_to_json(budget);
    summary["reference"] = opt.reference;
    summary["relative_difference"] = cdf_summary_json(sweep.cdfs);
    write_json(dir / "summary.json", summary);
    for (const auto& cdf : sweep.cdfs)
        write_file_atomic(dir / ("cdf_" + cdf.algorithm + ".csv"), cdf_csv(cdf));
    write_json(dir / "timing.json", timing_json(sweep.trials));

    for (const auto& cdf : sweep.cdfs)
        std::cout << opt.reference << " >= " << cdf.algorithm << " in "
                  << format_double(100.0 * cdf.fraction_geq_zero) << "% of " << cdf.pairs
                  << " runs\n";
    std::cout << "outputs in " << dir.string() << "\n";
    return kExitOk;
}

inline int dispatch(const std::string& command, Options& opt) {
    try {
        apply_config_file(opt);
        if (command == "gen") return cmd_gen(opt);
        if (command == "solve") return cmd_solve(opt);
        if (command == "bench") return cmd_bench(opt);
        if (command == "sweep") return cmd_sweep(opt);
        throw UsageError("unknown command: " + command);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InstanceTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGuardRail;
    } catch (const DegenerateLaw& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGuardRail;
    } catch (const SchemaVersionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace detail

/// Parses and executes one CLI invocation. Never calls exit(); returns the
/// process exit status (0 ok, 2 usage/config, 3 guard rail, 4 IO).
inline int run(std::vector<std::string> args) {
    CLI::App app{"verifier-committee configuration solver and benchmark harness"};
    app.require_subcommand(1);

    detail::Options opt;

    auto add_common = [&opt](CLI::App* cmd, bool with_weights = true) {
        cmd->add_option("--instance", opt.instance_path, "instance JSON file");
        cmd->add_option("--config", opt.config_path, "JSON file with swarm/sa/harness overrides");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--iters", opt.iters, "iteration budget")
            ->each([&opt](const std::string&) { opt.iters_given = true; });
        cmd->add_option("--seconds", opt.seconds, "wall-clock budget per run, seconds")
            ->each([&opt](const std::string&) { opt.seconds_given = true; });
        cmd->add_option("--seed", opt.seed, "64-bit master seed (default: drawn and logged)")
            ->each([&opt](const std::string&) { opt.seed_given = true; });
        if (with_weights)
            cmd->add_option("--weights", opt.weights_arg, "override weights as b1,b2,b3");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a problem instance");
    gen->add_option("--out", opt.out_dir, "output instance file")->required();
    gen->add_option("--seed", opt.seed, "generation seed")->each([&opt](const std::string&) {
        opt.seed_given = true;
    });
    gen->add_option("--M", opt.gen_M, "pool size");
    gen->add_option("--rho-mean", opt.rho_mean, "unit-cost law mean");
    gen->add_option("--rho-std", opt.rho_std, "unit-cost law standard deviation");
    gen->add_option("--x-mean", opt.x_mean, "capacity law mean");
    gen->add_option("--x-std", opt.x_std, "capacity law standard deviation");
    gen->add_option("--floor", opt.law_floor, "truncation floor for both laws");
    gen->add_option("--m-min", opt.m_min, "lower bound on selected verifiers");
    gen->add_option("--m-max", opt.m_max, "upper bound on selected verifiers");
    gen->add_option("--theta-min", opt.theta_min, "lower bound on transactions per block");
    gen->add_option("--theta-max", opt.theta_max, "upper bound on transactions per block");
    gen->add_option("--weights", opt.weights_arg, "embedded weights as b1,b2,b3");

    CLI::App* solve = app.add_subcommand("solve", "run one solver on an instance");
    add_common(solve);
    solve->add_option("--algo", opt.algo, "adpsa | pso | sa | pseudo | oracle");

    CLI::App* bench = app.add_subcommand("bench", "paired-seed multi-algorithm comparison");
    add_common(bench);
    bench->add_option("--algos", opt.algos, "comma-separated algorithm list");
    bench->add_option("--trials", opt.trials, "number of paired trials");
    bench->add_option("--reference", opt.reference, "reference algorithm for relative differences");

    CLI::App* sweep = app.add_subcommand("sweep", "paired runs with random weights per run");
    add_common(sweep, /*with_weights=*/false);
    sweep->add_option("--algos", opt.algos, "comma-separated algorithm list");
    sweep->add_option("--runs", opt.runs, "number of paired runs");
    sweep->add_option("--reference", opt.reference, "reference algorithm for relative differences");
    sweep->add_flag("--regen-instance", opt.regen_instance,
                    "regenerate the pool per run from the embedded generator spec");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return detail::kExitUsage;
    }

    if (gen->parsed()) return detail::dispatch("gen", opt);
    if (solve->parsed()) return detail::dispatch("solve", opt);
    if (bench->parsed()) return detail::dispatch("bench", opt);
    if (sweep->parsed()) return detail::dispatch("sweep", opt);
    std::cerr << app.help();
    return detail::kExitUsage;
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? argc - 1 : 0);
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

} // namespace chainopt::cli
