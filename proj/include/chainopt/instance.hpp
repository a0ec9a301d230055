#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "chainopt/errors.hpp"
#include "chainopt/model.hpp"
#include "chainopt/rng.hpp"

namespace chainopt {

inline constexpr const char* kInstanceSchema = "chainopt-instance/1";

/// Sampling law for one pool attribute. family is "normal" (rejection-
/// truncated below at `floor`) or "point" (point mass at `location`).
struct DistributionSpec {
    std::string family = "normal";
    double location = 0.0;
    double scale = 0.0;
    double floor = 1.0;
};

/// Recipe for a random verifier pool.
struct PoolSpec {
    int M = 1;
    DistributionSpec rho_law;  ///< unit costs
    DistributionSpec x_law;    ///< capacities
};

/// Seed and spec a generated instance was built from, embedded in the
/// instance file so published results can be regenerated from it alone.
struct GeneratorInfo {
    std::uint64_t seed = 0;
    PoolSpec pool_spec;
};

/// A full problem instance. Immutable once constructed.
struct Instance {
    SystemParams params;
    VerifierPool pool;
    SearchSpace space;
    Weights weights;
    std::optional<GeneratorInfo> generator;
};

inline void check(const Instance& inst) {
    check(inst.params);
    check(inst.pool);
    check(inst.space, inst.pool.size());
    check(inst.weights);
}

// ---------------------------------------------------------------------------
// Defaults mirroring the benchmark parameter set the experiments use.
// Rates and sizes are kilobits (megabit figures converted at 1 Mb = 1000 kb).

inline SystemParams default_params() {
    SystemParams p;
    p.v_d = 1200.0;
    p.v_u = 1300.0;
    p.R = 2.0;
    p.P = 500.0;
    p.K = 59292098.2754;
    p.phi = 0.5;
    p.alpha = 5.0;
    p.kappa = 1.0;
    return p;
}

inline SearchSpace default_space() { return SearchSpace{2, 1000, 2, 1000}; }

inline Weights default_weights() { return Weights{0.4, 0.2, 0.4}; }

/// Unit costs around 100 $/unit, capacities around 40000 units.
inline PoolSpec default_pool_spec(int M = 1000) {
    PoolSpec spec;
    spec.M = M;
    spec.rho_law = DistributionSpec{"normal", 100.0, 5.0, 1.0};
    spec.x_law = DistributionSpec{"normal", 40000.0, 4000.0, 1.0};
    return spec;
}

// ---------------------------------------------------------------------------
// Pool generation.

namespace detail {

// Marsaglia polar method would consume a variable number of draws; the
// Box-Muller form below consumes exactly two per sample, which keeps the
// draw count (and thus downstream determinism) easy to reason about.
inline double standard_normal(Rng& rng) {
    const double u1 = 1.0 - rng.uniform01();  // (0, 1]
    const double u2 = rng.uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline double sample_law(const DistributionSpec& law, Rng& rng) {
    if (law.family == "point") {
        if (!(law.location > 0.0))
            throw DegenerateLaw("point law located at a non-positive value");
        return law.location;
    }
    if (law.family != "normal")
        throw ParseError("unknown distribution family: " + law.family);
    // Rejection below the floor. Giving up after 100 rejected draws per
    // sample corresponds to an acceptance rate under about 1%.
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double v = law.location + law.scale * standard_normal(rng);
        if (v >= law.floor && v > 0.0) return v;
    }
    std::ostringstream msg;
    msg << "law " << law.family << "(" << law.location << ", " << law.scale
        << ") rejects >99% of draws at floor " << law.floor;
    throw DegenerateLaw(msg.str());
}

} // namespace detail

/// Draws M independent (rho_i, x_i) pairs from the declared laws.
/// Draw order: for each verifier, rho first, then x.
inline VerifierPool generate_pool(const PoolSpec& spec, Rng& rng) {
    if (spec.M < 1) throw ParseError("pool_spec.M must be >= 1");
    VerifierPool pool;
    pool.unit_costs.reserve(spec.M);
    pool.capacities.reserve(spec.M);
    for (int i = 0; i < spec.M; ++i) {
        pool.unit_costs.push_back(detail::sample_law(spec.rho_law, rng));
        pool.capacities.push_back(detail::sample_law(spec.x_law, rng));
    }
    return pool;
}

/// Builds a complete instance from a pool spec plus the default constants,
/// recording the generation seed and spec.
inline Instance make_instance(const PoolSpec& spec, std::uint64_t seed,
                              SystemParams params = default_params(),
                              SearchSpace space = default_space(),
                              Weights weights = default_weights()) {
    Rng rng(seed);
    Instance inst;
    inst.params = params;
    inst.pool = generate_pool(spec, rng);
    inst.space = space;
    inst.weights = weights;
    inst.generator = GeneratorInfo{seed, spec};
    check(inst);
    return inst;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization. Field names match the type definitions; doubles
// round-trip bit-exactly (shortest-representation output, exact parse).

namespace detail {

template <typename T>
T get_field(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw ParseError(where + "." + key + " is missing");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(where + "." + key + " has the wrong type");
    }
}

inline nlohmann::json law_to_json(const DistributionSpec& law) {
    return {{"family", law.family},
            {"location", law.location},
            {"scale", law.scale},
            {"floor", law.floor}};
}

inline DistributionSpec law_from_json(const nlohmann::json& j, const std::string& where) {
    DistributionSpec law;
    law.family = get_field<std::string>(j, "family", where);
    law.location = get_field<double>(j, "location", where);
    law.scale = get_field<double>(j, "scale", where);
    law.floor = get_field<double>(j, "floor", where);
    return law;
}

} // namespace detail

inline nlohmann::json to_json(const Instance& inst) {
    nlohmann::json j;
    j["schema"] = kInstanceSchema;
    j["params"] = {{"v_d", inst.params.v_d}, {"v_u", inst.params.v_u},
                   {"R", inst.params.R},     {"P", inst.params.P},
                   {"K", inst.params.K},     {"phi", inst.params.phi},
                   {"alpha", inst.params.alpha}, {"kappa", inst.params.kappa}};
    j["pool"] = {{"capacities", inst.pool.capacities},
                 {"unit_costs", inst.pool.unit_costs}};
    j["space"] = {{"m_min", inst.space.m_min},
                  {"m_max", inst.space.m_max},
                  {"theta_min", inst.space.theta_min},
                  {"theta_max", inst.space.theta_max}};
    j["weights"] = {{"beta1", inst.weights.beta1},
                    {"beta2", inst.weights.beta2},
                    {"beta3", inst.weights.beta3}};
    if (inst.generator) {
        j["generator"] = {{"seed", inst.generator->seed},
                          {"pool_spec",
                           {{"M", inst.generator->pool_spec.M},
                            {"rho_law", detail::law_to_json(inst.generator->pool_spec.rho_law)},
                            {"x_law", detail::law_to_json(inst.generator->pool_spec.x_law)}}}};
    }
    return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
    using detail::get_field;
    if (!j.is_object()) throw ParseError("instance document is not a JSON object");
    if (!j.contains("schema"))
        throw SchemaVersionMismatch("instance file lacks a schema field");
    if (j.at("schema") != kInstanceSchema)
        throw SchemaVersionMismatch("unsupported instance schema: " + j.at("schema").dump());

    auto section = [&j](const char* name) -> const nlohmann::json& {
        if (!j.contains(name) || !j.at(name).is_object())
            throw ParseError(std::string(name) + " section is missing");
        return j.at(name);
    };

    Instance inst;
    const auto& params = section("params");
    inst.params.v_d = get_field<double>(params, "v_d", "params");
    inst.params.v_u = get_field<double>(params, "v_u", "params");
    inst.params.R = get_field<double>(params, "R", "params");
    inst.params.P = get_field<double>(params, "P", "params");
    inst.params.K = get_field<double>(params, "K", "params");
    inst.params.phi = get_field<double>(params, "phi", "params");
    inst.params.alpha = get_field<double>(params, "alpha", "params");
    inst.params.kappa = get_field<double>(params, "kappa", "params");

    const auto& pool = section("pool");
    inst.pool.capacities = get_field<std::vector<double>>(pool, "capacities", "pool");
    inst.pool.unit_costs = get_field<std::vector<double>>(pool, "unit_costs", "pool");

    const auto& space = section("space");
    inst.space.m_min = get_field<int>(space, "m_min", "space");
    inst.space.m_max = get_field<int>(space, "m_max", "space");
    inst.space.theta_min = get_field<int>(space, "theta_min", "space");
    inst.space.theta_max = get_field<int>(space, "theta_max", "space");

    const auto& weights = section("weights");
    inst.weights.beta1 = get_field<double>(weights, "beta1", "weights");
    inst.weights.beta2 = get_field<double>(weights, "beta2", "weights");
    inst.weights.beta3 = get_field<double>(weights, "beta3", "weights");

    if (j.contains("generator")) {
        const auto& gen = j.at("generator");
        GeneratorInfo info;
        info.seed = get_field<std::uint64_t>(gen, "seed", "generator");
        if (!gen.contains("pool_spec") || !gen.at("pool_spec").is_object())
            throw ParseError("generator.pool_spec is missing");
        const auto& spec = gen.at("pool_spec");
        info.pool_spec.M = get_field<int>(spec, "M", "generator.pool_spec");
        if (!spec.contains("rho_law"))
            throw ParseError("generator.pool_spec.rho_law is missing");
        info.pool_spec.rho_law =
            detail::law_from_json(spec.at("rho_law"), "generator.pool_spec.rho_law");
        if (!spec.contains("x_law"))
            throw ParseError("generator.pool_spec.x_law is missing");
        info.pool_spec.x_law =
            detail::law_from_json(spec.at("x_law"), "generator.pool_spec.x_law");
        inst.generator = info;
    }

    check(inst);
    return inst;
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open instance file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return instance_from_json(j);
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path);
    out << to_json(inst).dump(2) << '\n';
    if (!out) throw Error("write failed: " + path);
}

} // namespace chainopt
