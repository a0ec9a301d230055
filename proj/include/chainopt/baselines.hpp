#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "chainopt/adpsa.hpp"
#include "chainopt/instance.hpp"
#include "chainopt/model.hpp"
#include "chainopt/rng.hpp"
#include "chainopt/solver.hpp"

namespace chainopt {

/// Constant inertia used by the original-PSO baseline.
inline constexpr double kPsoInertia = 0.72;

/// Simulated-annealing schedule. t0 <= 0 means "estimate from the utility
/// spread of `t0_samples` random feasible configurations".
struct SaParams {
    double cooling = 0.95;
    double t0 = 0.0;
    int t0_samples = 100;
};

inline void check(const SaParams& sa) {
    if (!(sa.cooling > 0.0 && sa.cooling < 1.0))
        throw ParseError("sa.cooling must lie in (0, 1)");
    if (sa.t0_samples < 2) throw ParseError("sa.t0_samples must be >= 2");
}

/// Metropolis acceptance probability for a utility change `delta_u` at
/// temperature `temperature` (maximization: improvements always accepted).
inline double metropolis_acceptance(double delta_u, double temperature) {
    if (delta_u >= 0.0) return 1.0;
    if (temperature <= 0.0) return 0.0;
    return std::exp(delta_u / temperature);
}

namespace detail {

/// Strict total order used for exact-tie resolution: (m, theta, z).
inline bool config_lex_less(const Configuration& a, const Configuration& b) {
    if (a.m != b.m) return a.m < b.m;
    if (a.theta != b.theta) return a.theta < b.theta;
    return std::lexicographical_compare(a.z.begin(), a.z.end(), b.z.begin(), b.z.end());
}

inline Configuration random_configuration(const SearchSpace& space, SelectionSampler& sampler,
                                          Rng& rng) {
    Configuration c;
    c.m = static_cast<int>(rng.uniform_int(space.m_min, space.m_max));
    c.theta = static_cast<int>(rng.uniform_int(space.theta_min, space.theta_max));
    sampler.resample(c.z, c.m, rng);
    return c;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Original PSO. Same loop shape as the adaptive solver, but with uniformly
// random initialization, constant inertia, and the selection vector relaxed
// to continuous [0,1] coordinates that are rounded at evaluation time and
// repaired to sum(z) == m by flipping the coordinates nearest 0.5.

namespace detail {

struct PsoParticle {
    Configuration position;        // discrete, as evaluated
    std::vector<double> z_coord;   // continuous selection coordinates
    double vel_m = 0.0;
    double vel_theta = 0.0;
    std::vector<double> vel_z;
    double utility = 0.0;
    Configuration best;
    std::vector<double> best_z_coord;
    double best_utility = 0.0;
};

/// Rounds the continuous selection coordinates (>= 0.5 selects) and then
/// flips the coordinates nearest 0.5 — ties to lower index — until exactly
/// `m` are selected.
inline void discretize_selection(PsoParticle& p, std::vector<int>& scratch) {
    const int M = static_cast<int>(p.z_coord.size());
    p.position.z.assign(M, 0);
    int ones = 0;
    for (int i = 0; i < M; ++i) {
        if (p.z_coord[i] >= 0.5) {
            p.position.z[i] = 1;
            ++ones;
        }
    }
    const int target = p.position.m;
    if (ones > target) {
        scratch.clear();
        for (int i = 0; i < M; ++i)
            if (p.position.z[i]) scratch.push_back(i);
        const int flips = ones - target;
        std::nth_element(scratch.begin(), scratch.begin() + (flips - 1), scratch.end(),
                         [&p](int a, int b) {
                             if (p.z_coord[a] != p.z_coord[b]) return p.z_coord[a] < p.z_coord[b];
                             return a < b;
                         });
        for (int k = 0; k < flips; ++k) p.position.z[scratch[k]] = 0;
    } else if (ones < target) {
        scratch.clear();
        for (int i = 0; i < M; ++i)
            if (!p.position.z[i]) scratch.push_back(i);
        const int flips = target - ones;
        std::nth_element(scratch.begin(), scratch.begin() + (flips - 1), scratch.end(),
                         [&p](int a, int b) {
                             if (p.z_coord[a] != p.z_coord[b]) return p.z_coord[a] > p.z_coord[b];
                             return a < b;
                         });
        for (int k = 0; k < flips; ++k) p.position.z[scratch[k]] = 1;
    }
}

} // namespace detail

/// Original-PSO baseline. Random draws per particle at initialization, in
/// order: m, theta, z coordinates, velocity m, velocity theta, z
/// velocities (all uniform; velocities signed around zero with magnitude
/// range/c_v). Each iteration then consumes one (r, s) pair per particle.
inline SolverReport run_pso(const Instance& inst, const Weights& weights,
                            const SwarmParams& sp, const Budget& budget,
                            std::uint64_t seed) {
    check(sp);
    const Evaluator eval(inst.params, inst.pool, inst.space, weights);
    const SearchSpace& space = inst.space;
    const int M = inst.pool.size();

    detail::StopWatch watch;
    Rng rng(seed);
    std::vector<detail::PsoParticle> swarm(sp.pop_size);
    std::vector<int> scratch;

    const double range_m = static_cast<double>(space.m_max - space.m_min);
    const double range_theta = static_cast<double>(space.theta_max - space.theta_min);
    auto signed_uniform = [&rng](double magnitude) {
        return (2.0 * rng.uniform01() - 1.0) * magnitude;
    };

    Configuration global_best;
    std::vector<double> global_best_z_coord;
    double global_best_utility = 0.0;

    for (int j = 0; j < sp.pop_size; ++j) {
        detail::PsoParticle& p = swarm[j];
        p.position.m = static_cast<int>(rng.uniform_int(space.m_min, space.m_max));
        p.position.theta = static_cast<int>(rng.uniform_int(space.theta_min, space.theta_max));
        p.z_coord.resize(M);
        for (double& c : p.z_coord) c = rng.uniform01();
        p.vel_m = signed_uniform(range_m / sp.vel_div_m);
        p.vel_theta = signed_uniform(range_theta / sp.vel_div_theta);
        p.vel_z.resize(M);
        for (double& v : p.vel_z) v = signed_uniform(1.0 / sp.vel_div_m);

        detail::discretize_selection(p, scratch);
        p.utility = eval.utility(p.position);
        p.best = p.position;
        p.best_z_coord = p.z_coord;
        p.best_utility = p.utility;
        if (j == 0 || p.best_utility > global_best_utility) {
            global_best = p.best;
            global_best_z_coord = p.best_z_coord;
            global_best_utility = p.best_utility;
        }
    }

    SolverReport report;
    report.algorithm = "pso";
    report.seed = seed;
    report.trace.push_back({0, global_best_utility, watch.elapsed_ms()});

    const double half_m = range_m / 2.0;
    const double half_theta = range_theta / 2.0;
    std::int64_t iteration = 0;
    while (detail::budget_allows(budget, iteration + 1, watch)) {
        ++iteration;
        // Phase 1: velocities and positions against the frozen global best.
        for (detail::PsoParticle& p : swarm) {
            const double r = rng.uniform01();
            const double s = rng.uniform01();
            p.vel_m = detail::clamp_velocity(
                update_velocity(p.vel_m, kPsoInertia, sp.cognitive, r,
                                static_cast<double>(p.best.m - p.position.m), sp.social, s,
                                static_cast<double>(global_best.m - p.position.m)),
                half_m);
            p.vel_theta = detail::clamp_velocity(
                update_velocity(p.vel_theta, kPsoInertia, sp.cognitive, r,
                                static_cast<double>(p.best.theta - p.position.theta), sp.social,
                                s, static_cast<double>(global_best.theta - p.position.theta)),
                half_theta);
            p.position.m = detail::round_clamp(static_cast<double>(p.position.m) + p.vel_m,
                                               space.m_min, space.m_max);
            p.position.theta =
                detail::round_clamp(static_cast<double>(p.position.theta) + p.vel_theta,
                                    space.theta_min, space.theta_max);
            for (int i = 0; i < M; ++i) {
                p.vel_z[i] = detail::clamp_velocity(
                    update_velocity(p.vel_z[i], kPsoInertia, sp.cognitive, r,
                                    p.best_z_coord[i] - p.z_coord[i], sp.social, s,
                                    global_best_z_coord[i] - p.z_coord[i]),
                    0.5);
                p.z_coord[i] = std::clamp(p.z_coord[i] + p.vel_z[i], 0.0, 1.0);
            }
        }
        // Phase 2: discretize, evaluate, fold bests in particle order.
        for (detail::PsoParticle& p : swarm) {
            detail::discretize_selection(p, scratch);
            p.utility = eval.utility(p.position);
            if (p.utility > p.best_utility) {
                p.best = p.position;
                p.best_z_coord = p.z_coord;
                p.best_utility = p.utility;
            }
            if (p.best_utility > global_best_utility) {
                global_best = p.best;
                global_best_z_coord = p.best_z_coord;
                global_best_utility = p.best_utility;
            }
        }
        report.trace.push_back({iteration, global_best_utility, watch.elapsed_ms()});
    }

    report.best = global_best;
    report.best_utility = global_best_utility;
    report.iterations = iteration;
    report.elapsed_seconds = watch.elapsed_seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Simulated annealing. Single chain over feasible configurations with
// geometric cooling T_k = T0 * cooling^k and Metropolis acceptance.

/// Neighbor moves, each with probability 1/3:
///   - m +/- 1 (clamped), selection fully resampled at the new count;
///   - theta stepped by a uniform nonzero offset in [-d, d], d = ceil(range/20);
///   - one selected verifier swapped with one unselected verifier.
/// When t0 is not given it is set to the sample standard deviation of the
/// utility over `t0_samples` random feasible configurations, drawn before
/// the chain starts.
inline SolverReport run_sa(const Instance& inst, const Weights& weights, const SaParams& sa,
                           const Budget& budget, std::uint64_t seed) {
    check(sa);
    const Evaluator eval(inst.params, inst.pool, inst.space, weights);
    const SearchSpace& space = inst.space;
    const int M = inst.pool.size();

    detail::StopWatch watch;
    Rng rng(seed);
    SelectionSampler sampler(M);

    double t0 = sa.t0;
    if (!(t0 > 0.0)) {
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < sa.t0_samples; ++i) {
            const double u = eval.utility(detail::random_configuration(space, sampler, rng));
            sum += u;
            sum_sq += u * u;
        }
        const double n = static_cast<double>(sa.t0_samples);
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        t0 = std::sqrt(var);
    }

    Configuration current = detail::random_configuration(space, sampler, rng);
    double current_utility = eval.utility(current);

    SolverReport report;
    report.algorithm = "sa";
    report.seed = seed;
    report.best = current;
    report.best_utility = current_utility;
    report.trace.push_back({0, report.best_utility, watch.elapsed_ms()});

    const int theta_step =
        static_cast<int>(std::ceil(static_cast<double>(space.theta_max - space.theta_min) / 20.0));
    Configuration neighbor;
    std::int64_t iteration = 0;
    while (detail::budget_allows(budget, iteration + 1, watch)) {
        ++iteration;
        neighbor = current;
        const std::uint64_t move = rng.bounded(3);
        if (move == 0) {
            const int delta = rng.bounded(2) == 0 ? -1 : 1;
            neighbor.m = std::clamp(neighbor.m + delta, space.m_min, space.m_max);
            sampler.resample(neighbor.z, neighbor.m, rng);
        } else if (move == 1) {
            if (theta_step > 0) {
                const int magnitude = 1 + static_cast<int>(rng.bounded(theta_step));
                const int delta = rng.bounded(2) == 0 ? -magnitude : magnitude;
                neighbor.theta = std::clamp(neighbor.theta + delta, space.theta_min, space.theta_max);
            }
        } else if (neighbor.m < M) {
            // Swap the a-th selected verifier with the b-th unselected one.
            const int a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(neighbor.m)));
            const int b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(M - neighbor.m)));
            int seen_ones = 0, seen_zeros = 0;
            for (int i = 0; i < M; ++i) {
                if (neighbor.z[i]) {
                    if (seen_ones++ == a) neighbor.z[i] = 0;
                } else {
                    if (seen_zeros++ == b) neighbor.z[i] = 1;
                }
            }
        }

        const double neighbor_utility = eval.utility(neighbor);
        const double temperature = t0 * std::pow(sa.cooling, static_cast<double>(iteration));
        const double accept = metropolis_acceptance(neighbor_utility - current_utility, temperature);
        if (accept >= 1.0 || rng.uniform01() < accept) {
            current = neighbor;
            current_utility = neighbor_utility;
            if (current_utility > report.best_utility) {
                report.best = current;
                report.best_utility = current_utility;
            }
        }
        report.trace.push_back({iteration, report.best_utility, watch.elapsed_ms()});
    }

    report.iterations = iteration;
    report.elapsed_seconds = watch.elapsed_seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Pseudo-exhaustive search.

namespace detail {

/// Phase-1 scoring proxy: pretends the m fastest verifiers were selected.
/// Used only to rank (m, theta) cells during the scan; the reported utility
/// never comes from this proxy.
struct FastestSubsetProxy {
    // capacity of the slowest verifier among the k fastest, k = 1..M
    std::vector<double> min_capacity;
    // sum of rho_i * x_i over the k fastest, k = 0..M
    std::vector<double> cost_prefix;

    explicit FastestSubsetProxy(const VerifierPool& pool) {
        const int M = pool.size();
        std::vector<int> order(M);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&pool](int a, int b) {
            if (pool.capacities[a] != pool.capacities[b])
                return pool.capacities[a] > pool.capacities[b];
            return a < b;
        });
        min_capacity.resize(M);
        cost_prefix.resize(M + 1, 0.0);
        for (int k = 0; k < M; ++k) {
            min_capacity[k] = pool.capacities[order[k]];
            cost_prefix[k + 1] =
                cost_prefix[k] + pool.unit_costs[order[k]] * pool.capacities[order[k]];
        }
    }
};

} // namespace detail

/// Two-phase baseline: phase 1 exhaustively scans the (m, theta) grid with
/// the fastest-subset proxy; phase 2 draws one random feasible selection
/// for the winning cell and reports its true utility. The scan is the
/// method's fixed work and is not truncated by iteration budgets; a
/// wall-clock budget stops it early with the best cell so far.
inline SolverReport run_pseudo_exhaustive(const Instance& inst, const Weights& weights,
                                          const Budget& budget, std::uint64_t seed) {
    const Evaluator eval(inst.params, inst.pool, inst.space, weights);
    const SearchSpace& space = inst.space;

    detail::StopWatch watch;
    Rng rng(seed);
    const detail::FastestSubsetProxy proxy(inst.pool);

    int best_m = space.m_min;
    int best_theta = space.theta_min;
    double best_proxy = -std::numeric_limits<double>::infinity();
    std::int64_t cells = 0;
    bool out_of_time = false;
    for (int m = space.m_min; m <= space.m_max && !out_of_time; ++m) {
        Metrics v;
        v.security = detail::security_value(static_cast<double>(m), inst.params);
        const double min_capacity = proxy.min_capacity[m - 1];
        const double cost_sum = proxy.cost_prefix[m];
        for (int theta = space.theta_min; theta <= space.theta_max; ++theta) {
            v.latency = detail::latency_value(static_cast<double>(theta),
                                              static_cast<double>(m), min_capacity, inst.params);
            v.cost = detail::cost_value(cost_sum, static_cast<double>(theta));
            const double u = detail::utility_value(v, weights, eval.norms());
            ++cells;
            if (u > best_proxy) {
                best_proxy = u;
                best_m = m;
                best_theta = theta;
            }
        }
        if (budget.kind == Budget::Kind::seconds && watch.elapsed_seconds() >= budget.seconds)
            out_of_time = true;
    }

    SolverReport report;
    report.algorithm = "pseudo";
    report.seed = seed;
    report.best.m = best_m;
    report.best.theta = best_theta;
    SelectionSampler sampler(inst.pool.size());
    sampler.resample(report.best.z, best_m, rng);
    report.best_utility = eval.utility(report.best);
    report.iterations = cells;
    report.elapsed_seconds = watch.elapsed_seconds();
    report.trace.push_back({0, report.best_utility, watch.elapsed_ms()});
    return report;
}

// ---------------------------------------------------------------------------
// Exact oracle.

/// Guard rails for the exhaustive oracle.
inline constexpr int kOracleMaxPoolSize = 20;
inline constexpr std::int64_t kOracleMaxThetaRange = 10000;

/// Enumerates every selection vector with m_min <= sum(z) <= m_max and
/// every theta, and returns the exact utility maximizer. Exact float ties
/// resolve to the lexicographically smallest (m, theta, z). Exponential in
/// the pool size; refuses instances beyond the guard rails.
inline SolverReport brute_force_oracle(const Instance& inst, const Weights& weights) {
    const SearchSpace& space = inst.space;
    const int M = inst.pool.size();
    if (M > kOracleMaxPoolSize)
        throw InstanceTooLarge("oracle supports pool sizes up to 20, got " + std::to_string(M));
    const std::int64_t theta_range =
        static_cast<std::int64_t>(space.theta_max) - space.theta_min + 1;
    if (theta_range > kOracleMaxThetaRange)
        throw InstanceTooLarge("oracle supports theta ranges up to 10000, got " +
                               std::to_string(theta_range));

    const Evaluator eval(inst.params, inst.pool, inst.space, weights);
    detail::StopWatch watch;

    SolverReport report;
    report.algorithm = "oracle";
    report.seed = 0;
    double best_utility = -std::numeric_limits<double>::infinity();
    Configuration best;
    Configuration candidate;
    candidate.z.resize(M);
    std::int64_t evaluated = 0;

    const std::uint32_t mask_end = static_cast<std::uint32_t>(1u << M);
    for (std::uint32_t mask = 0; mask < mask_end; ++mask) {
        const int ones = std::popcount(mask);
        if (ones < space.m_min || ones > space.m_max) continue;
        candidate.m = ones;
        // Same scan order and operations as Evaluator::metrics, so the
        // utilities below are bit-identical to what any solver reports.
        double min_capacity = std::numeric_limits<double>::infinity();
        double cost_sum = 0.0;
        for (int i = 0; i < M; ++i) {
            candidate.z[i] = (mask >> i) & 1u;
            if (candidate.z[i]) {
                min_capacity = std::min(min_capacity, inst.pool.capacities[i]);
                cost_sum += inst.pool.unit_costs[i] * inst.pool.capacities[i];
            }
        }
        Metrics v;
        v.security = detail::security_value(static_cast<double>(ones), inst.params);
        for (int theta = space.theta_min; theta <= space.theta_max; ++theta) {
            candidate.theta = theta;
            v.latency = detail::latency_value(static_cast<double>(theta),
                                              static_cast<double>(ones), min_capacity, inst.params);
            v.cost = detail::cost_value(cost_sum, static_cast<double>(theta));
            const double u = detail::utility_value(v, weights, eval.norms());
            ++evaluated;
            if (u > best_utility ||
                (u == best_utility && detail::config_lex_less(candidate, best))) {
                best_utility = u;
                best = candidate;
            }
        }
    }

    report.best = best;
    report.best_utility = best_utility;
    report.iterations = evaluated;
    report.elapsed_seconds = watch.elapsed_seconds();
    report.trace.push_back({0, best_utility, watch.elapsed_ms()});
    return report;
}

} // namespace chainopt
