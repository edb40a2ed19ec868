#include <catch2/catch_amalgamated.hpp>

#include "netsync/config.hpp"

using namespace netsync;
using nlohmann::json;

#ifndef NETSYNC_CONFIG_DIR
#define NETSYNC_CONFIG_DIR "."
#endif

namespace {

json minimal_lti_config() {
    return json::parse(R"({
        "system": {"type": "lti", "a": [[[0,0]]], "b": [[[1,0]]], "c": [[[1,0]]]},
        "coupling": {"weights": [[0,1],[1,0]]}
    })");
}

} // namespace

TEST_CASE("config parsing fills defaults and validates") {
    const Config cfg = config_from_json(minimal_lti_config());
    CHECK(std::holds_alternative<LtiSystem>(cfg.system));
    CHECK(cfg.analysis.margin == 1e-6);
    CHECK(cfg.simulation.horizon == 10.0);
    CHECK(cfg.coupling.source == CouplingMatrix::Source::diffusive);
    CHECK(cfg.coupling.nodes() == 2);
    const auto& sys = std::get<LtiSystem>(cfg.system);
    CHECK(sys.d.isZero(0.0));
}

TEST_CASE("config parse errors carry the usage code semantics") {
    CHECK_THROWS_AS(config_from_json(json::parse("{}")), config_error);

    json both = minimal_lti_config();
    both["coupling"]["matrix"] = json::array({json::array({json::array({0.0, 0.0})})});
    CHECK_THROWS_AS(config_from_json(both), config_error);

    json bad_type = minimal_lti_config();
    bad_type["system"]["type"] = "wave";
    CHECK_THROWS_AS(config_from_json(bad_type), config_error);

    json negative_weights = minimal_lti_config();
    negative_weights["coupling"]["weights"] = {{0.0, -1.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(config_from_json(negative_weights), config_error);

    json bad_margin = minimal_lti_config();
    bad_margin["analysis"] = {{"margin", -1.0}};
    CHECK_THROWS_AS(config_from_json(bad_margin), config_error);
}

TEST_CASE("parse-serialize-parse is the identity on the shipped configs") {
    for (const char* name :
         {"integrator_k4.json", "heat_pair.json", "hayes_delay.json",
          "boundary_coupled_pair.json"}) {
        const std::string path = std::string(NETSYNC_CONFIG_DIR) + "/" + name;
        INFO(path);
        const json raw = load_json_file(path);
        const Config first = config_from_json(raw);
        const json serialized = config_to_json(first);
        const Config second = config_from_json(serialized);
        CHECK(config_to_json(second) == serialized);
    }
}

TEST_CASE("sampled functions accept bare reals and pairs") {
    json cfg_json = json::parse(R"({
        "system": {
            "type": "parabolic", "n_cells": 20,
            "a": [1.0, 2.0, 1.5],
            "r0": [[0.5, -0.25]],
            "boundary": {"type": "dirichlet"}
        },
        "coupling": {"weights": [[0,1],[1,0]]}
    })");
    const Config cfg = config_from_json(cfg_json);
    const auto& par = std::get<ParabolicSubsystem>(cfg.system);
    CHECK(par.spec.a.size() == 3);
    CHECK(par.spec.r0(0.3) == Complex(0.5, -0.25));
    CHECK(par.spec.b(0.9) == Complex(1.0, 0.0)); // default input gain
}

TEST_CASE("set_config_scalar navigates objects, arrays and complex pairs") {
    json doc = minimal_lti_config();

    set_config_scalar(doc, "coupling.weights.0.1", 2.5);
    CHECK(doc["coupling"]["weights"][0][1] == 2.5);

    set_config_scalar(doc, "system.a.0.0.0", -3.0);
    CHECK(doc["system"]["a"][0][0][0] == -3.0);

    CHECK_THROWS_AS(set_config_scalar(doc, "system.missing", 1.0), config_error);
    CHECK_THROWS_AS(set_config_scalar(doc, "coupling.weights.7.0", 1.0), config_error);
    CHECK_THROWS_AS(set_config_scalar(doc, "system.a", 1.0), config_error);
    CHECK_THROWS_AS(set_config_scalar(doc, "system.type", 1.0), config_error);
}

TEST_CASE("random initial states are deterministic in the seed") {
    NetworkSpec net = make_network(config_from_json(minimal_lti_config()));
    const Vector a = random_initial_state(net, 42, false);
    const Vector b = random_initial_state(net, 42, false);
    const Vector c = random_initial_state(net, 43, false);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a(i).real()) <= 1.0);
        CHECK(std::abs(a(i).imag()) <= 1.0);
    }

    const Vector diag = random_initial_state(net, 42, true);
    CHECK(diag(0) == diag(1));
}

TEST_CASE("delay configs default missing input maps to zero") {
    json cfg_json = json::parse(R"({
        "system": {"type": "delay", "delays": [0.0, 1.0],
                   "a_mats": [[[[0,0]]], [[[-1,0]]]]},
        "coupling": {"matrix": [[[0,0]]]}
    })");
    const Config cfg = config_from_json(cfg_json);
    const auto& spec = std::get<DelaySpec>(cfg.system);
    REQUIRE(spec.b_mats.size() == 2);
    CHECK(spec.b_mats[0].isZero(0.0));
    CHECK(cfg.delay_grid == 100);
}
