#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "chainopt/adpsa.hpp"
#include "chainopt/baselines.hpp"
#include "chainopt/instance.hpp"
#include "chainopt/rng.hpp"
#include "chainopt/solver.hpp"

namespace chainopt {

inline const std::vector<std::string> kAlgorithms = {"adpsa", "pso", "sa", "pseudo", "oracle"};

inline bool known_algorithm(const std::string& name) {
    return std::find(kAlgorithms.begin(), kAlgorithms.end(), name) != kAlgorithms.end();
}

/// Runs one named solver. The oracle ignores budget and seed.
inline SolverReport run_algorithm(const std::string& name, const Instance& inst,
                                  const Weights& weights, const SwarmParams& swarm,
                                  const SaParams& sa, const Budget& budget,
                                  std::uint64_t seed) {
    if (name == "adpsa") return run_adpsa(inst, weights, swarm, budget, seed);
    if (name == "pso") return run_pso(inst, weights, swarm, budget, seed);
    if (name == "sa") return run_sa(inst, weights, sa, budget, seed);
    if (name == "pseudo") return run_pseudo_exhaustive(inst, weights, budget, seed);
    if (name == "oracle") return brute_force_oracle(inst, weights);
    throw Error("unknown algorithm: " + name);
}

/// Worker-pool and pairing options for batched experiments.
struct RunOptions {
    /// Worker threads; 0 resolves to CHAINOPT_THREADS or hardware concurrency.
    int threads = 0;
    /// Run wall-clock-budget trials one at a time so runs do not share cores.
    bool pin_wall_clock = true;
    /// Regenerate the pool per sweep run from the embedded generator spec
    /// (the default varies only the weights).
    bool regenerate_instance_per_run = false;
};

namespace detail {

inline int resolve_threads(const RunOptions& opts, const Budget& budget, int jobs) {
    if (budget.kind == Budget::Kind::seconds && opts.pin_wall_clock) return 1;
    int threads = opts.threads;
    if (threads < 1) {
        if (const char* env = std::getenv("CHAINOPT_THREADS")) {
            char* end = nullptr;
            const long parsed = std::strtol(env, &end, 10);
            if (end != env && *end == '\0' && parsed >= 1) threads = static_cast<int>(parsed);
        }
    }
    if (threads < 1) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    return std::min(threads, std::max(jobs, 1));
}

/// Runs `jobs` independent tasks on a small worker pool. Tasks write their
/// results by index, so the output is independent of scheduling.
template <typename Fn>
void parallel_for(int jobs, int threads, Fn&& fn) {
    if (threads <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= jobs) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace detail

/// One solver run inside a batch. Failed runs keep their error text and are
/// excluded from statistics.
struct TrialRow {
    std::string algorithm;
    int trial = 0;
    std::uint64_t seed = 0;
    double best_utility = 0.0;
    double elapsed_seconds = 0.0;
    std::int64_t iterations = 0;
    int m = 0;
    int theta = 0;
    bool failed = false;
    std::string error;
};

struct TrialMeta {
    std::vector<std::string> algorithms;
    int trials = 0;
    std::uint64_t master_seed = 0;
    Budget budget;
    Weights weights;
    std::string instance_hash;
};

struct TrialResults {
    TrialMeta meta;
    std::vector<TrialRow> rows;  ///< trial-major: all algorithms of trial 0, then trial 1, ...
};

/// Paired-seed comparison batch: trial t of every algorithm runs with seed
/// split_seed(master_seed, t) on the same instance and weights. Per-trial
/// failures are recorded without aborting the batch.
inline TrialResults run_trials(const Instance& inst, const Weights& weights,
                               const std::vector<std::string>& algorithms,
                               const Budget& budget, int trials, std::uint64_t master_seed,
                               const RunOptions& opts = {},
                               const SwarmParams& swarm = {}, const SaParams& sa = {}) {
    if (algorithms.empty()) throw Error("run_trials needs at least one algorithm");
    if (trials < 1) throw Error("run_trials needs trials >= 1");
    for (const auto& name : algorithms)
        if (!known_algorithm(name)) throw Error("unknown algorithm: " + name);

    TrialResults results;
    results.meta.algorithms = algorithms;
    results.meta.trials = trials;
    results.meta.master_seed = master_seed;
    results.meta.budget = budget;
    results.meta.weights = weights;

    const int n_algos = static_cast<int>(algorithms.size());
    results.rows.resize(static_cast<std::size_t>(trials) * n_algos);

    const int threads = detail::resolve_threads(opts, budget, trials);
    detail::parallel_for(trials, threads, [&](int t) {
        const std::uint64_t seed = split_seed(master_seed, static_cast<std::uint64_t>(t));
        for (int a = 0; a < n_algos; ++a) {
            TrialRow& row = results.rows[static_cast<std::size_t>(t) * n_algos + a];
            row.algorithm = algorithms[a];
            row.trial = t;
            row.seed = seed;
            try {
                const SolverReport r =
                    run_algorithm(algorithms[a], inst, weights, swarm, sa, budget, seed);
                row.best_utility = r.best_utility;
                row.elapsed_seconds = r.elapsed_seconds;
                row.iterations = r.iterations;
                row.m = r.best.m;
                row.theta = r.best.theta;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    });
    return results;
}

// ---------------------------------------------------------------------------
// Summary statistics.

struct SummaryStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double mean = 0;
    double variance = 0;  ///< unbiased sample variance; 0 for a single value
    int count = 0;
};

namespace detail {

/// Quantile by linear interpolation between order statistics at rank
/// (n - 1) * p (the common "type 7" rule). `sorted` must be ascending.
inline double quantile_linear(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    s.count = static_cast<int>(values.size());
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_linear(values, 0.25);
    s.median = quantile_linear(values, 0.5);
    s.q3 = quantile_linear(values, 0.75);
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.variance = ss / static_cast<double>(values.size() - 1);
    }
    return s;
}

} // namespace detail

/// Per-algorithm five-number summary, mean and sample variance of the best
/// utilities, in the batch's algorithm order. Failed trials are skipped;
/// an algorithm with no successful trials raises EmptyResults.
inline std::vector<std::pair<std::string, SummaryStats>> summary_stats(const TrialResults& results) {
    if (results.rows.empty()) throw EmptyResults("no trial rows to summarize");
    std::vector<std::pair<std::string, SummaryStats>> out;
    for (const auto& name : results.meta.algorithms) {
        std::vector<double> values;
        for (const auto& row : results.rows)
            if (!row.failed && row.algorithm == name) values.push_back(row.best_utility);
        if (values.empty())
            throw EmptyResults("algorithm " + name + " has no successful trials");
        out.emplace_back(name, detail::summarize(std::move(values)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Relative-difference CDF.

struct CdfPoint {
    double x = 0;
    double F = 0;
};

/// Empirical CDF of (U_ref - U_algo) / U_algo over paired trials.
struct RelDiffCdf {
    std::string algorithm;
    std::vector<CdfPoint> points;           ///< sorted ascending, F = rank / n
    double fraction_geq_zero = 0.0;         ///< share of paired trials with diff >= 0
    int pairs = 0;
    int division_by_zero_excluded = 0;      ///< pairs dropped for U_algo == 0
};

/// Per comparison algorithm, the empirical CDF of the relative difference
/// of the reference algorithm's utility to it, over paired trials. Pairs
/// with a zero comparison utility are flagged and excluded with a count;
/// pairs with a failed run on either side are skipped.
inline std::vector<RelDiffCdf> relative_difference_cdf(const TrialResults& results,
                                                       const std::string& reference) {
    const auto& algos = results.meta.algorithms;
    const auto ref_it = std::find(algos.begin(), algos.end(), reference);
    if (ref_it == algos.end())
        throw Error("reference algorithm " + reference + " not present in results");
    const int n_algos = static_cast<int>(algos.size());
    const int ref_index = static_cast<int>(ref_it - algos.begin());

    std::vector<RelDiffCdf> out;
    for (int a = 0; a < n_algos; ++a) {
        if (a == ref_index) continue;
        RelDiffCdf cdf;
        cdf.algorithm = algos[a];
        std::vector<double> diffs;
        for (int t = 0; t < results.meta.trials; ++t) {
            const TrialRow& ref_row = results.rows[static_cast<std::size_t>(t) * n_algos + ref_index];
            const TrialRow& cmp_row = results.rows[static_cast<std::size_t>(t) * n_algos + a];
            if (ref_row.failed || cmp_row.failed) continue;
            if (cmp_row.best_utility == 0.0) {
                ++cdf.division_by_zero_excluded;
                continue;
            }
            diffs.push_back((ref_row.best_utility - cmp_row.best_utility) / cmp_row.best_utility);
        }
        std::sort(diffs.begin(), diffs.end());
        cdf.pairs = static_cast<int>(diffs.size());
        int geq_zero = 0;
        for (std::size_t i = 0; i < diffs.size(); ++i) {
            cdf.points.push_back(
                {diffs[i], static_cast<double>(i + 1) / static_cast<double>(diffs.size())});
            if (diffs[i] >= 0.0) ++geq_zero;
        }
        if (!diffs.empty())
            cdf.fraction_geq_zero = static_cast<double>(geq_zero) / static_cast<double>(diffs.size());
        out.push_back(std::move(cdf));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random weights.

/// Uniform sample on the 2-simplex: three standard exponentials normalized
/// by their sum (symmetric Dirichlet with concentration 1).
inline Weights random_weights(Rng& rng) {
    for (;;) {
        const double e1 = -std::log(1.0 - rng.uniform01());
        const double e2 = -std::log(1.0 - rng.uniform01());
        const double e3 = -std::log(1.0 - rng.uniform01());
        const double sum = e1 + e2 + e3;
        if (sum > 0.0) return Weights{e1 / sum, e2 / sum, e3 / sum};
    }
}

// ---------------------------------------------------------------------------
// Random-weight sweep.

struct SweepRun {
    int run = 0;
    std::uint64_t seed = 0;
    Weights weights;
};

struct SweepResults {
    std::vector<SweepRun> runs;
    TrialResults trials;           ///< trial index == run index
    std::vector<RelDiffCdf> cdfs;  ///< relative difference of the reference to each baseline
    std::string reference;
};

/// Paired runs with fresh simplex-uniform weights per run. Run r of every
/// algorithm uses seed split_seed(master_seed, r); the weights stream is
/// derived from the master seed independently of the solver seeds.
inline SweepResults run_weight_sweep(const Instance& inst,
                                     const std::vector<std::string>& algorithms,
                                     const std::string& reference, const Budget& budget,
                                     int runs, std::uint64_t master_seed,
                                     const RunOptions& opts = {},
                                     const SwarmParams& swarm = {}, const SaParams& sa = {}) {
    if (algorithms.empty()) throw Error("sweep needs at least one algorithm");
    if (runs < 1) throw Error("sweep needs runs >= 1");
    for (const auto& name : algorithms)
        if (!known_algorithm(name)) throw Error("unknown algorithm: " + name);
    if (std::find(algorithms.begin(), algorithms.end(), reference) == algorithms.end())
        throw Error("reference algorithm " + reference + " not in the algorithm list");
    if (opts.regenerate_instance_per_run && !inst.generator)
        throw Error("cannot regenerate instances: no generator info embedded");

    constexpr std::uint64_t kWeightsStream = 0x77656967687473ULL;  // weight-draw substream tag
    SweepResults sweep;
    sweep.reference = reference;
    sweep.runs.resize(runs);
    sweep.trials.meta.algorithms = algorithms;
    sweep.trials.meta.trials = runs;
    sweep.trials.meta.master_seed = master_seed;
    sweep.trials.meta.budget = budget;
    sweep.trials.meta.weights = inst.weights;

    const int n_algos = static_cast<int>(algorithms.size());
    sweep.trials.rows.resize(static_cast<std::size_t>(runs) * n_algos);

    const int threads = detail::resolve_threads(opts, budget, runs);
    detail::parallel_for(runs, threads, [&](int r) {
        const std::uint64_t seed = split_seed(master_seed, static_cast<std::uint64_t>(r));
        Rng weights_rng(split_seed(master_seed ^ kWeightsStream, static_cast<std::uint64_t>(r)));
        const Weights weights = random_weights(weights_rng);
        sweep.runs[r] = SweepRun{r, seed, weights};

        const Instance* instance = &inst;
        Instance regenerated;
        if (opts.regenerate_instance_per_run) {
            const auto& gen = *inst.generator;
            regenerated = make_instance(gen.pool_spec, split_seed(gen.seed, static_cast<std::uint64_t>(r)),
                                        inst.params, inst.space, inst.weights);
            instance = &regenerated;
        }

        for (int a = 0; a < n_algos; ++a) {
            TrialRow& row = sweep.trials.rows[static_cast<std::size_t>(r) * n_algos + a];
            row.algorithm = algorithms[a];
            row.trial = r;
            row.seed = seed;
            try {
                const SolverReport rep =
                    run_algorithm(algorithms[a], *instance, weights, swarm, sa, budget, seed);
                row.best_utility = rep.best_utility;
                row.elapsed_seconds = rep.elapsed_seconds;
                row.iterations = rep.iterations;
                row.m = rep.best.m;
                row.theta = rep.best.theta;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    });

    sweep.cdfs = relative_difference_cdf(sweep.trials, reference);
    return sweep;
}

} // namespace chainopt
