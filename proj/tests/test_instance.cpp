#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "chainopt/instance.hpp"
#include "test_support.hpp"

using namespace chainopt;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("chainopt_instance_" + name);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

} // namespace

TEST_CASE("point-mass laws produce the exact pool", "[instance]") {
    PoolSpec spec;
    spec.M = 1;
    spec.rho_law = DistributionSpec{"point", 100.0, 0.0, 1.0};
    spec.x_law = DistributionSpec{"point", 40000.0, 0.0, 1.0};
    Rng rng(1);
    const VerifierPool pool = generate_pool(spec, rng);
    REQUIRE(pool.unit_costs == std::vector<double>{100.0});
    REQUIRE(pool.capacities == std::vector<double>{40000.0});
}

TEST_CASE("default laws land at the configured scale", "[instance]") {
    Rng rng(2024);
    const VerifierPool pool = generate_pool(default_pool_spec(1000), rng);
    double rho_mean = 0.0, x_mean = 0.0;
    for (int i = 0; i < 1000; ++i) {
        rho_mean += pool.unit_costs[i];
        x_mean += pool.capacities[i];
    }
    rho_mean /= 1000.0;
    x_mean /= 1000.0;
    REQUIRE(rho_mean > 98.0);
    REQUIRE(rho_mean < 102.0);
    REQUIRE(x_mean > 38000.0);
    REQUIRE(x_mean < 42000.0);
}

TEST_CASE("generation is deterministic per seed and satisfies invariants", "[instance]") {
    for (std::uint64_t seed : {1u, 7u, 99u}) {
        Rng a(seed), b(seed);
        const VerifierPool pool_a = generate_pool(default_pool_spec(50), a);
        const VerifierPool pool_b = generate_pool(default_pool_spec(50), b);
        REQUIRE(pool_a.capacities == pool_b.capacities);
        REQUIRE(pool_a.unit_costs == pool_b.unit_costs);
        REQUIRE_NOTHROW(check(pool_a));
    }
}

TEST_CASE("a law rejecting nearly all draws raises DegenerateLaw", "[instance]") {
    PoolSpec spec;
    spec.M = 1;
    spec.rho_law = DistributionSpec{"normal", -1000.0, 0.5, 1.0};
    spec.x_law = DistributionSpec{"normal", 40000.0, 4000.0, 1.0};
    Rng rng(3);
    REQUIRE_THROWS_AS(generate_pool(spec, rng), DegenerateLaw);
}

TEST_CASE("save and load round-trip every field bit-exactly", "[instance]") {
    const Instance inst = test_support::toy_instance(16, 77);
    const auto path = temp_file("roundtrip.json");
    save_instance(inst, path.string());
    const Instance loaded = load_instance(path.string());

    REQUIRE(loaded.params.v_d == inst.params.v_d);
    REQUIRE(loaded.params.v_u == inst.params.v_u);
    REQUIRE(loaded.params.R == inst.params.R);
    REQUIRE(loaded.params.P == inst.params.P);
    REQUIRE(loaded.params.K == inst.params.K);
    REQUIRE(loaded.params.phi == inst.params.phi);
    REQUIRE(loaded.params.alpha == inst.params.alpha);
    REQUIRE(loaded.params.kappa == inst.params.kappa);
    REQUIRE(loaded.pool.capacities == inst.pool.capacities);
    REQUIRE(loaded.pool.unit_costs == inst.pool.unit_costs);
    REQUIRE(loaded.space.m_min == inst.space.m_min);
    REQUIRE(loaded.space.m_max == inst.space.m_max);
    REQUIRE(loaded.space.theta_min == inst.space.theta_min);
    REQUIRE(loaded.space.theta_max == inst.space.theta_max);
    REQUIRE(loaded.weights.beta1 == inst.weights.beta1);
    REQUIRE(loaded.weights.beta2 == inst.weights.beta2);
    REQUIRE(loaded.weights.beta3 == inst.weights.beta3);
    REQUIRE(loaded.generator.has_value());
    REQUIRE(loaded.generator->seed == inst.generator->seed);
    REQUIRE(loaded.generator->pool_spec.M == inst.generator->pool_spec.M);
    REQUIRE(loaded.generator->pool_spec.rho_law.location ==
            inst.generator->pool_spec.rho_law.location);

    // a second save of the loaded instance is byte-identical
    const auto path2 = temp_file("roundtrip2.json");
    save_instance(loaded, path2.string());
    std::ifstream f1(path), f2(path2);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(s1 == s2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("malformed documents raise ParseError with field diagnostics", "[instance]") {
    const auto path = temp_file("bad.json");

    SECTION("not JSON at all") {
        write_text(path, "not json {{{");
        REQUIRE_THROWS_AS(load_instance(path.string()), ParseError);
    }

    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_instance("/nonexistent/instance.json"), ParseError);
    }

    SECTION("missing field names the field") {
        nlohmann::json j = to_json(test_support::two_verifier_instance());
        j["params"].erase("v_d");
        write_text(path, j.dump());
        try {
            load_instance(path.string());
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(std::string(e.what()).find("v_d") != std::string::npos);
        }
    }

    SECTION("wrong field type names the field") {
        nlohmann::json j = to_json(test_support::two_verifier_instance());
        j["space"]["m_min"] = "two";
        write_text(path, j.dump());
        try {
            load_instance(path.string());
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(std::string(e.what()).find("m_min") != std::string::npos);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("schema version is enforced", "[instance]") {
    const auto path = temp_file("schema.json");
    nlohmann::json j = to_json(test_support::two_verifier_instance());

    SECTION("unsupported version") {
        j["schema"] = "chainopt-instance/2";
        write_text(path, j.dump());
        REQUIRE_THROWS_AS(load_instance(path.string()), SchemaVersionMismatch);
    }

    SECTION("missing schema field") {
        j.erase("schema");
        write_text(path, j.dump());
        REQUIRE_THROWS_AS(load_instance(path.string()), SchemaVersionMismatch);
    }
    std::filesystem::remove(path);
}

TEST_CASE("invariant violations at load are not schema mismatches", "[instance]") {
    const auto path = temp_file("weights.json");
    nlohmann::json j = to_json(test_support::two_verifier_instance());
    j["weights"]["beta1"] = 0.399;  // sum 0.999
    write_text(path, j.dump());
    REQUIRE_THROWS_AS(load_instance(path.string()), ParseError);
    try {
        load_instance(path.string());
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find("weights") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("make_instance embeds regenerable provenance", "[instance]") {
    const Instance inst = test_support::toy_instance(8, 123);
    REQUIRE(inst.generator.has_value());
    Rng rng(inst.generator->seed);
    const VerifierPool regenerated = generate_pool(inst.generator->pool_spec, rng);
    REQUIRE(regenerated.capacities == inst.pool.capacities);
    REQUIRE(regenerated.unit_costs == inst.pool.unit_costs);
}
