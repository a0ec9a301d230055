#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "chainopt/instance.hpp"
#include "chainopt/model.hpp"
#include "chainopt/rng.hpp"
#include "chainopt/solver.hpp"

namespace chainopt {

/// Tuning knobs of the adaptive discrete swarm. Field comments give the
/// config-file keys.
struct SwarmParams {
    int pop_size = 50;             ///< N: particles
    std::int64_t iters = 1000;     ///< n: iteration horizon of the inertia schedule
    double cognitive = 2.0;        ///< c1: pull toward the personal best
    double social = 2.0;           ///< c2: pull toward the global best
    double inertia_max = 0.9;      ///< w_max
    double inertia_min = 0.4;      ///< w_min
    int grid_div_m = 0;            ///< c_pm: position-grid divisor; 0 = ceil(sqrt(N))
    int grid_div_theta = 0;        ///< c_ptheta: position-grid divisor; 0 = ceil(sqrt(N))
    double vel_div_m = 10.0;       ///< c_vm: initial-velocity scale divisor
    double vel_div_theta = 10.0;   ///< c_vtheta: initial-velocity scale divisor
    /// Compatibility switch: draw the selection count from the global
    /// best's m instead of the particle's own m. Off by default; when on,
    /// particles may carry sum(z) != m and only the returned best is
    /// guaranteed consistent if its own m matches.
    bool count_from_global_best = false;
};

inline void check(const SwarmParams& sp) {
    if (sp.pop_size < 1) throw ParseError("swarm.N must be >= 1");
    if (sp.iters < 1) throw ParseError("swarm.n must be >= 1");
    if (sp.cognitive < 0 || sp.social < 0) throw ParseError("swarm.c1 and c2 must be >= 0");
    if (!(0.0 <= sp.inertia_min && sp.inertia_min <= sp.inertia_max))
        throw ParseError("swarm: need 0 <= w_min <= w_max");
    if (sp.grid_div_m < 0 || sp.grid_div_theta < 0)
        throw ParseError("swarm: grid divisors must be >= 1 (or 0 for automatic)");
    if (sp.vel_div_m < 1 || sp.vel_div_theta < 1)
        throw ParseError("swarm: velocity divisors must be >= 1");
}

struct Particle {
    Configuration position;
    double vel_m = 0.0;
    double vel_theta = 0.0;
    double utility = 0.0;       ///< fitness of `position`
    Configuration best;         ///< best position this particle ever held
    double best_utility = 0.0;
};

struct SwarmState {
    std::vector<Particle> particles;
    Configuration global_best;
    double global_best_utility = 0.0;
    std::int64_t iteration = 0;
};

/// Linearly decaying inertia weight: w_max at iteration 0 down to w_min at
/// iteration n, held at w_min past the horizon (wall-clock runs may overrun).
inline double inertia(std::int64_t i, const SwarmParams& sp) {
    if (i >= sp.iters) return sp.inertia_min;
    return sp.inertia_max -
           static_cast<double>(i) * (sp.inertia_max - sp.inertia_min) /
               static_cast<double>(sp.iters);
}

/// One velocity component update: inertia plus cognitive and social pulls.
inline double update_velocity(double v_prev, double w, double c1, double r,
                              double personal_delta, double c2, double s,
                              double global_delta) {
    return w * v_prev + c1 * r * personal_delta + c2 * s * global_delta;
}

namespace detail {

inline int effective_grid_div(int configured, int pop_size) {
    if (configured >= 1) return configured;
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pop_size))));
}

/// Grid coordinates for one dimension: nearest integers of i*range/div for
/// i = 1..div, offset by the lower bound, clamped, adjacent duplicates
/// collapsed (the construction yields a non-decreasing list).
inline std::vector<int> grid_values(int lo, int hi, int div) {
    std::vector<int> values;
    const double range = static_cast<double>(hi - lo);
    for (int i = 1; i <= div; ++i) {
        const double raw = static_cast<double>(i) * range / static_cast<double>(div);
        int v = lo + static_cast<int>(std::llround(raw));
        v = std::clamp(v, lo, hi);
        if (values.empty() || values.back() != v) values.push_back(v);
    }
    return values;
}

inline int round_clamp(double value, int lo, int hi) {
    const long long rounded = std::llround(value);
    if (rounded < lo) return lo;
    if (rounded > hi) return hi;
    return static_cast<int>(rounded);
}

inline double clamp_velocity(double v, double half_range) {
    return std::clamp(v, -half_range, half_range);
}

} // namespace detail

/// Builds the initial swarm: (m, theta) positions on the cross-product grid
/// of per-dimension value lists (row-major, m outer), spilling uniformly at
/// random once the distinct grid cells run out; selection vectors with
/// exactly m ones placed uniformly; nonnegative initial velocities of
/// magnitude range/c_v. Personal bests start at the initial positions and
/// the global best is their utility argmax (ties keep the earliest).
///
/// Random draws per particle, in order: position (2 draws, spill particles
/// only), selection resample, velocity (2 draws).
inline SwarmState init_swarm(const SearchSpace& space, const VerifierPool& pool,
                             const SwarmParams& sp, const Evaluator& eval, Rng& rng) {
    const int div_m = detail::effective_grid_div(sp.grid_div_m, sp.pop_size);
    const int div_theta = detail::effective_grid_div(sp.grid_div_theta, sp.pop_size);
    const std::vector<int> m_values = detail::grid_values(space.m_min, space.m_max, div_m);
    const std::vector<int> theta_values =
        detail::grid_values(space.theta_min, space.theta_max, div_theta);
    const std::size_t cells = m_values.size() * theta_values.size();

    SelectionSampler sampler(pool.size());
    SwarmState state;
    state.particles.resize(sp.pop_size);
    const double range_m = static_cast<double>(space.m_max - space.m_min);
    const double range_theta = static_cast<double>(space.theta_max - space.theta_min);

    for (int j = 0; j < sp.pop_size; ++j) {
        Particle& p = state.particles[j];
        if (static_cast<std::size_t>(j) < cells) {
            p.position.m = m_values[j / theta_values.size()];
            p.position.theta = theta_values[j % theta_values.size()];
        } else {
            p.position.m = static_cast<int>(rng.uniform_int(space.m_min, space.m_max));
            p.position.theta =
                static_cast<int>(rng.uniform_int(space.theta_min, space.theta_max));
        }
        sampler.resample(p.position.z, p.position.m, rng);
        p.vel_m = rng.uniform01() * range_m / sp.vel_div_m;
        p.vel_theta = rng.uniform01() * range_theta / sp.vel_div_theta;

        p.utility = eval.utility(p.position);
        p.best = p.position;
        p.best_utility = p.utility;
        if (j == 0 || p.best_utility > state.global_best_utility) {
            state.global_best = p.best;
            state.global_best_utility = p.best_utility;
        }
    }
    return state;
}

/// Velocity and position update for the two integer dimensions of one
/// particle: shared draw pair (r, s), nearest-integer rounding, clamping
/// into bounds, and velocity capped at half the dimension range.
inline void update_continuous(Particle& p, const Configuration& global_best,
                              std::int64_t iteration, const SwarmParams& sp,
                              const SearchSpace& space, Rng& rng) {
    const double w = inertia(iteration, sp);
    const double r = rng.uniform01();
    const double s = rng.uniform01();

    const double half_m = static_cast<double>(space.m_max - space.m_min) / 2.0;
    const double half_theta = static_cast<double>(space.theta_max - space.theta_min) / 2.0;

    p.vel_m = detail::clamp_velocity(
        update_velocity(p.vel_m, w, sp.cognitive, r,
                        static_cast<double>(p.best.m - p.position.m), sp.social, s,
                        static_cast<double>(global_best.m - p.position.m)),
        half_m);
    p.vel_theta = detail::clamp_velocity(
        update_velocity(p.vel_theta, w, sp.cognitive, r,
                        static_cast<double>(p.best.theta - p.position.theta), sp.social, s,
                        static_cast<double>(global_best.theta - p.position.theta)),
        half_theta);

    p.position.m = detail::round_clamp(static_cast<double>(p.position.m) + p.vel_m,
                                       space.m_min, space.m_max);
    p.position.theta = detail::round_clamp(static_cast<double>(p.position.theta) + p.vel_theta,
                                           space.theta_min, space.theta_max);
}

/// Redraws the selection vector: sum(z) distinct verifiers chosen uniformly
/// without replacement. The count is the particle's own updated m (or the
/// global best's m under the compatibility switch).
inline void resample_binaries(Particle& p, int count, SelectionSampler& sampler, Rng& rng) {
    sampler.resample(p.position.z, count, rng);
}

/// One full swarm iteration. Phase 1 updates every particle's velocities
/// and (m, theta) against the global best frozen at iteration start; phase
/// 2 resamples selections, evaluates, and folds personal/global bests in
/// particle order (strict improvement required, ties keep the incumbent).
/// Random draws: phase 1 consumes (r, s) per particle in order, then phase
/// 2 consumes the selection draws per particle in order.
inline void adpsa_iteration(SwarmState& state, const SearchSpace& space,
                            const SwarmParams& sp, const Evaluator& eval,
                            SelectionSampler& sampler, Rng& rng) {
    ++state.iteration;
    const Configuration frozen_best = state.global_best;
    for (Particle& p : state.particles)
        update_continuous(p, frozen_best, state.iteration, sp, space, rng);

    for (Particle& p : state.particles) {
        const int count = sp.count_from_global_best ? frozen_best.m : p.position.m;
        resample_binaries(p, count, sampler, rng);
        p.utility = eval.utility(p.position);
        if (p.utility > p.best_utility) {
            p.best = p.position;
            p.best_utility = p.utility;
        }
        if (p.best_utility > state.global_best_utility) {
            state.global_best = p.best;
            state.global_best_utility = p.best_utility;
        }
    }
}

/// Runs the full algorithm under an iteration or wall-clock budget and
/// returns the best configuration, its utility, and the per-iteration
/// best-so-far trace. Under an iteration budget the inertia schedule
/// horizon is the budget itself; under wall clock it is sp.iters.
inline SolverReport run_adpsa(const Instance& inst, const Weights& weights,
                              const SwarmParams& sp, const Budget& budget,
                              std::uint64_t seed) {
    check(sp);
    const Evaluator eval(inst.params, inst.pool, inst.space, weights);
    SwarmParams effective = sp;
    if (budget.kind == Budget::Kind::iterations)
        effective.iters = std::max<std::int64_t>(budget.iterations, 1);

    detail::StopWatch watch;
    Rng rng(seed);
    SelectionSampler sampler(inst.pool.size());
    SwarmState state = init_swarm(inst.space, inst.pool, effective, eval, rng);

    SolverReport report;
    report.algorithm = "adpsa";
    report.seed = seed;
    report.trace.push_back({0, state.global_best_utility, watch.elapsed_ms()});
    while (detail::budget_allows(budget, state.iteration + 1, watch)) {
        adpsa_iteration(state, inst.space, effective, eval, sampler, rng);
        report.trace.push_back({state.iteration, state.global_best_utility, watch.elapsed_ms()});
    }
    report.best = state.global_best;
    report.best_utility = state.global_best_utility;
    report.iterations = state.iteration;
    report.elapsed_seconds = watch.elapsed_seconds();
    return report;
}

} // namespace chainopt
