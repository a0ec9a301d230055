#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "chainopt/adpsa.hpp"
#include "chainopt/baselines.hpp"
#include "test_support.hpp"

using namespace chainopt;
using Catch::Matchers::WithinAbs;

namespace {

int selection_count(const Configuration& c) {
    int ones = 0;
    for (auto bit : c.z) ones += bit;
    return ones;
}

bool same_state(const SwarmState& a, const SwarmState& b) {
    if (a.global_best_utility != b.global_best_utility) return false;
    if (!(a.global_best == b.global_best)) return false;
    if (a.particles.size() != b.particles.size()) return false;
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        if (!(a.particles[i].position == b.particles[i].position)) return false;
        if (a.particles[i].vel_m != b.particles[i].vel_m) return false;
        if (a.particles[i].vel_theta != b.particles[i].vel_theta) return false;
        if (a.particles[i].best_utility != b.particles[i].best_utility) return false;
    }
    return true;
}

} // namespace

TEST_CASE("inertia decays linearly from w_max to w_min", "[adpsa]") {
    SwarmParams sp;
    sp.iters = 100;
    REQUIRE(inertia(0, sp) == 0.9);
    REQUIRE(inertia(100, sp) == 0.4);
    REQUIRE_THAT(inertia(50, sp), WithinAbs(0.65, 1e-15));
    REQUIRE(inertia(250, sp) == 0.4);  // past the horizon
}

TEST_CASE("velocity update combines inertia with both pulls", "[adpsa]") {
    // 0.5*4 + 2*0.5*3 + 2*0.5*5 = 10
    REQUIRE(update_velocity(4.0, 0.5, 2.0, 0.5, 3.0, 2.0, 0.5, 5.0) == 10.0);
    REQUIRE(update_velocity(0.0, 0.9, 2.0, 0.3, 0.0, 2.0, 0.7, 0.0) == 0.0);
}

TEST_CASE("update_continuous holds the fixed point and clamps at bounds", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 2);
    const SearchSpace space{2, 8, 2, 20};
    SwarmParams sp;

    SECTION("zero velocity at the shared optimum keeps the position") {
        Particle p;
        p.position = test_support::make_config(5, 10, {1, 1, 1, 1, 1, 0, 0, 0});
        p.best = p.position;
        p.vel_m = 0.0;
        p.vel_theta = 0.0;
        Rng rng(4);
        update_continuous(p, p.best, 1, sp, space, rng);
        REQUIRE(p.position.m == 5);
        REQUIRE(p.position.theta == 10);
        REQUIRE(p.vel_m == 0.0);
        REQUIRE(p.vel_theta == 0.0);
    }

    SECTION("updates beyond the bounds clamp to the bounds") {
        Particle p;
        p.position = test_support::make_config(7, 19, {1, 1, 1, 1, 1, 1, 1, 0});
        p.best = p.position;
        p.vel_m = 100.0;  // velocity clamp brings this to range/2, position to m_max
        p.vel_theta = 100.0;
        Configuration gbest = p.position;
        Rng rng(4);
        update_continuous(p, gbest, 1, sp, space, rng);
        REQUIRE(p.position.m == 8);
        REQUIRE(p.position.theta == 20);
        REQUIRE(p.vel_m <= (8 - 2) / 2.0);
        REQUIRE(p.vel_theta <= (20 - 2) / 2.0);
    }
}

TEST_CASE("init_swarm lays positions on the documented grid", "[adpsa]") {
    const Instance inst =
        make_instance(default_pool_spec(1000), 5, default_params(),
                      SearchSpace{2, 1000, 2, 1000}, default_weights());
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);

    SwarmParams sp;
    sp.pop_size = 49;
    sp.grid_div_m = 7;
    sp.grid_div_theta = 7;
    Rng rng(9);
    const SwarmState state = init_swarm(inst.space, inst.pool, sp, eval, rng);

    const std::vector<int> expected = {145, 287, 430, 572, 715, 857, 1000};
    REQUIRE(state.particles.size() == 49);
    for (int j = 0; j < 49; ++j) {
        const Particle& p = state.particles[j];
        REQUIRE(p.position.m == expected[j / 7]);
        REQUIRE(p.position.theta == expected[j % 7]);
        REQUIRE(selection_count(p.position) == p.position.m);
        REQUIRE(p.vel_m >= 0.0);
        REQUIRE(p.vel_m <= 998.0 / 10.0);
        REQUIRE(p.vel_theta >= 0.0);
        REQUIRE(p.vel_theta <= 998.0 / 10.0);
        REQUIRE(p.best == p.position);
    }

    // global best is the utility argmax over personal bests
    double max_utility = state.particles[0].best_utility;
    for (const Particle& p : state.particles)
        max_utility = std::max(max_utility, p.best_utility);
    REQUIRE(state.global_best_utility == max_utility);
}

TEST_CASE("init_swarm with one particle sits on a single grid point", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 3);
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    SwarmParams sp;
    sp.pop_size = 1;
    Rng rng(1);
    const SwarmState state = init_swarm(inst.space, inst.pool, sp, eval, rng);
    REQUIRE(state.particles.size() == 1);
    REQUIRE(state.particles[0].position.m == inst.space.m_max);
    REQUIRE(state.particles[0].position.theta == inst.space.theta_max);
    REQUIRE(selection_count(state.particles[0].position) == inst.space.m_max);
    REQUIRE(state.global_best_utility == state.particles[0].best_utility);
}

TEST_CASE("init_swarm is deterministic per seed", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 4);
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    SwarmParams sp;
    Rng r1(77), r2(77);
    REQUIRE(same_state(init_swarm(inst.space, inst.pool, sp, eval, r1),
                       init_swarm(inst.space, inst.pool, sp, eval, r2)));
}

TEST_CASE("selection resampling", "[adpsa]") {
    SECTION("m = M forces full selection") {
        SelectionSampler sampler(6);
        Rng rng(1);
        std::vector<std::uint8_t> z;
        sampler.resample(z, 6, rng);
        REQUIRE(z == std::vector<std::uint8_t>(6, 1));
    }

    SECTION("m = 1 is uniform over the pool (chi-squared)") {
        SelectionSampler sampler(10);
        Rng rng(123);
        std::vector<int> counts(10, 0);
        std::vector<std::uint8_t> z;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            sampler.resample(z, 1, rng);
            for (int k = 0; k < 10; ++k)
                if (z[k]) ++counts[k];
        }
        double chi2 = 0.0;
        const double expected = draws / 10.0;
        for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
        REQUIRE(chi2 < 27.877);  // 9 dof, p = 0.001
    }

    SECTION("fixed seed gives identical selections") {
        SelectionSampler s1(12), s2(12);
        Rng r1(9), r2(9);
        std::vector<std::uint8_t> z1, z2;
        for (int i = 0; i < 100; ++i) {
            s1.resample(z1, 5, r1);
            s2.resample(z2, 5, r2);
            REQUIRE(z1 == z2);
        }
    }
}

TEST_CASE("every particle stays feasible through iterations", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 6);
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    SwarmParams sp;
    sp.pop_size = 20;
    sp.iters = 60;
    Rng rng(15);
    SelectionSampler sampler(inst.pool.size());
    SwarmState state = init_swarm(inst.space, inst.pool, sp, eval, rng);
    for (const Particle& p : state.particles)
        REQUIRE(validate(p.position, inst.space, inst.pool).feasible());
    for (int it = 0; it < 60; ++it) {
        adpsa_iteration(state, inst.space, sp, eval, sampler, rng);
        for (const Particle& p : state.particles)
            REQUIRE(validate(p.position, inst.space, inst.pool).feasible());
        REQUIRE(validate(state.global_best, inst.space, inst.pool).feasible());
    }
}

TEST_CASE("zero coefficients freeze the integer positions after one step", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 8);
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    SwarmParams sp;
    sp.pop_size = 10;
    sp.cognitive = 0.0;
    sp.social = 0.0;
    sp.inertia_max = 0.0;
    sp.inertia_min = 0.0;
    Rng rng(3);
    SelectionSampler sampler(inst.pool.size());
    SwarmState state = init_swarm(inst.space, inst.pool, sp, eval, rng);

    adpsa_iteration(state, inst.space, sp, eval, sampler, rng);
    std::vector<std::pair<int, int>> frozen;
    for (const Particle& p : state.particles) {
        REQUIRE(p.vel_m == 0.0);
        REQUIRE(p.vel_theta == 0.0);
        frozen.emplace_back(p.position.m, p.position.theta);
    }

    bool any_selection_changed = false;
    for (int it = 0; it < 5; ++it) {
        std::vector<Configuration> before;
        for (const Particle& p : state.particles) before.push_back(p.position);
        adpsa_iteration(state, inst.space, sp, eval, sampler, rng);
        for (std::size_t j = 0; j < state.particles.size(); ++j) {
            REQUIRE(state.particles[j].position.m == frozen[j].first);
            REQUIRE(state.particles[j].position.theta == frozen[j].second);
            REQUIRE(selection_count(state.particles[j].position) ==
                    state.particles[j].position.m);
            if (state.particles[j].position.z != before[j].z) any_selection_changed = true;
        }
    }
    REQUIRE(any_selection_changed);  // binary vectors keep resampling
}

TEST_CASE("the compatibility switch draws the count from the global best", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 9);
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    SwarmParams sp;
    sp.pop_size = 12;
    sp.count_from_global_best = true;
    Rng rng(21);
    SelectionSampler sampler(inst.pool.size());
    SwarmState state = init_swarm(inst.space, inst.pool, sp, eval, rng);
    const int frozen_m = state.global_best.m;
    adpsa_iteration(state, inst.space, sp, eval, sampler, rng);
    for (const Particle& p : state.particles)
        REQUIRE(selection_count(p.position) == frozen_m);
}

TEST_CASE("run_adpsa is deterministic and monotone", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 10);

    SECTION("same seed, bit-identical outcome") {
        const SolverReport a = run_adpsa(inst, inst.weights, {}, Budget::iters(80), 42);
        const SolverReport b = run_adpsa(inst, inst.weights, {}, Budget::iters(80), 42);
        REQUIRE(a.best == b.best);
        REQUIRE(a.best_utility == b.best_utility);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t i = 0; i < a.trace.size(); ++i) {
            REQUIRE(a.trace[i].iteration == b.trace[i].iteration);
            REQUIRE(a.trace[i].best_utility == b.trace[i].best_utility);
        }
    }

    SECTION("trace is non-decreasing for any seed") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const SolverReport r = run_adpsa(inst, inst.weights, {}, Budget::iters(60), seed);
            for (std::size_t i = 1; i < r.trace.size(); ++i)
                REQUIRE(r.trace[i].best_utility >= r.trace[i - 1].best_utility);
            REQUIRE(r.best_utility == r.trace.back().best_utility);
            REQUIRE(validate(r.best, inst.space, inst.pool).feasible());
        }
    }
}

TEST_CASE("a single-point feasible space is solved immediately", "[adpsa]") {
    // m forced to M makes the selection unique as well
    Instance inst = test_support::toy_instance(3, 11);
    inst.space = SearchSpace{3, 3, 5, 5};
    const SolverReport r = run_adpsa(inst, inst.weights, {}, Budget::iters(3), 1);
    REQUIRE(r.best.m == 3);
    REQUIRE(r.best.theta == 5);
    REQUIRE(r.best.z == std::vector<std::uint8_t>({1, 1, 1}));
    const Evaluator eval(inst.params, inst.pool, inst.space, inst.weights);
    REQUIRE(r.best_utility == eval.utility(r.best));
    REQUIRE(r.trace.front().best_utility == r.best_utility);
}

TEST_CASE("adpsa reaches the exact optimum on a small instance", "[adpsa][search]") {
    const Instance inst = test_support::toy_instance(8, 12);
    const SolverReport oracle = brute_force_oracle(inst, inst.weights);
    SwarmParams sp;
    sp.pop_size = 50;
    int hits = 0;
    for (int run = 0; run < 100; ++run) {
        const SolverReport r =
            run_adpsa(inst, inst.weights, sp, Budget::iters(200), split_seed(555, run));
        REQUIRE(r.best_utility <= oracle.best_utility);
        if (r.best_utility >= oracle.best_utility - 1e-9) ++hits;
    }
    REQUIRE(hits >= 95);
}

TEST_CASE("wall-clock budget returns the best so far", "[adpsa]") {
    const Instance inst = test_support::toy_instance(8, 13);
    const SolverReport r = run_adpsa(inst, inst.weights, {}, Budget::wall_clock(0.05), 3);
    REQUIRE(r.iterations >= 1);
    REQUIRE(validate(r.best, inst.space, inst.pool).feasible());
    REQUIRE(r.best_utility == r.trace.back().best_utility);
}
