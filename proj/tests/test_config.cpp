#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include <json.hpp>

#include "spinsim/config.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/experiments.hpp"
#include "spinsim/table.hpp"

using namespace spinsim;
using nlohmann::json;

TEST_CASE("minimal superradiance config gets defaults filled") {
    const json j = {{"experiment", "superradiance"},
                    {"params", {{"g_coll_hz", 100e3}, {"kappa_hz", 4.8e6}}},
                    {"superradiance", {{"theta_rad", 1.2}}}};
    const RunConfig c = parse_config_json(j);
    CHECK(c.experiment == ExperimentKind::Superradiance);
    CHECK(c.theta == 1.2);
    CHECK(c.theta_floor == 1e-3);
    CHECK(c.params.n0 == 1e8);
    CHECK(c.params.g == doctest::Approx(100e3 / std::sqrt(1e8)).epsilon(1e-14));
    CHECK(c.params.gamma_2 == doctest::Approx(default_gamma_2()).epsilon(1e-14));
    CHECK(c.params.kappa_out == doctest::Approx(2.4e6).epsilon(1e-14));
    CHECK(c.integrator.rel_tol == 1e-8);
    CHECK(c.seed == 1);
    CHECK(c.n_groups == 10000);
}

TEST_CASE("unknown keys are rejected by name") {
    json j = {{"experiment", "superradiance"},
              {"params", {{"g_coll_hz", 100e3}, {"kappa_hz", 4.8e6}, {"detunning_hz", 1.0}}}};
    try {
        parse_config_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("detunning_hz") != std::string::npos);
    }
    json top = {{"experiment", "params"}, {"params", {{"kappa_hz", 1.0}}}, {"bogus", 1}};
    CHECK_THROWS_AS(parse_config_json(top), ConfigError);
}

TEST_CASE("invariant violations cite the params rule") {
    const json j = {{"experiment", "params"}, {"params", {{"kappa_hz", 0.0}}}};
    try {
        parse_config_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("kappa") != std::string::npos);
    }
}

TEST_CASE("missing required keys and bad enums") {
    CHECK_THROWS_AS(parse_config_json(json{{"params", {{"kappa_hz", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config_json(json{{"experiment", "banana"},
                                           {"params", {{"kappa_hz", 1.0}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_json(json{{"experiment", "params"}}), ConfigError);
    CHECK_THROWS_AS(
        parse_config_json(json{{"experiment", "params"},
                               {"params", {{"kappa_hz", 1.0}, {"g_hz", 1.0}, {"g_coll_hz", 1.0}}}}),
        ConfigError);
}

TEST_CASE("sweep with an empty grid is a validation error") {
    const json j = {{"experiment", "sweep"},
                    {"params", {{"g_coll_hz", 100e3}, {"kappa_hz", 4.8e6}}},
                    {"sweep", {{"variable", "theta"}, {"values", json::array()}}}};
    CHECK_THROWS_AS(parse_config_json(j), ConfigError);
}

TEST_CASE("ramsey config demands a lineshape width and group count") {
    json j = {{"experiment", "ramsey"},
              {"params", {{"g_coll_hz", 100e3}, {"kappa_hz", 660e3}, {"delta_hz", 22e6}}},
              {"n_groups", 50}};
    CHECK_THROWS_AS(parse_config_json(j), ConfigError);
    j["n_groups"] = 1000;
    CHECK_THROWS_AS(parse_config_json(j), ConfigError); // fwhm still 0
    j["lineshape"] = {{"kind", "gaussian"}, {"fwhm_hz", 5e3}};
    CHECK_NOTHROW(parse_config_json(j));
}

TEST_CASE("config round-trips through its json snapshot") {
    const json j = {{"experiment", "oat"},
                    {"params",
                     {{"g_coll_hz", 150e3}, {"kappa_hz", 660e3}, {"delta_hz", 22e6}}},
                    {"oat", {{"theta_rad", 0.785}, {"tau_s", 1e-4}}},
                    {"seed", 99}};
    const RunConfig c = parse_config_json(j);
    const RunConfig c2 = parse_config_json(config_to_json(c));
    CHECK(c2.params.g == c.params.g);
    CHECK(c2.tau == c.tau);
    CHECK(c2.seed == 99);
}

TEST_CASE("tables serialize deterministically with unit-carrying headers") {
    Table t;
    t.comments.push_back("columns: time_s [s], coherence [1]");
    t.add_column("time_s", {0.0, 1e-6, 2e-6});
    t.add_column("coherence", {1.0, 0.5, 1.0 / 3.0});
    const std::string a = t.to_string();
    const std::string b = t.to_string();
    CHECK(a == b);
    CHECK(a.find("# columns: time_s [s], coherence [1]") == 0);
    CHECK(a.find("time_s,coherence") != std::string::npos);
    CHECK(a.find("0.33333333333333331") != std::string::npos); // %.17g round-trip
    CHECK_THROWS_AS(t.add_column("bad", {1.0}), ConfigError);
}

TEST_CASE("manifest json carries rates, warnings, and outcome") {
    RunManifest m;
    m.config = {{"experiment", "params"}};
    m.rates.chi_n = 1022.5;
    m.tool_version = tool_version_string;
    m.warnings = {"example"};
    m.success = true;
    const json j = m.to_json();
    CHECK(j.at("derived_rates").at("chi_n_hz") == 1022.5);
    CHECK(j.at("warnings").size() == 1);
    CHECK(j.at("success") == true);
}
