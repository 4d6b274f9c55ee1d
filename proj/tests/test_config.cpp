#include "rfsfuse/config.hpp"

#include <doctest.h>

#include <string>

using namespace rfsfuse;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults") {
    const ScenarioConfig c = ScenarioConfig::defaults();
    CHECK(c.sensors.detection_probability == 0.98);
    CHECK(c.sensors.clutter_rate == 15.0);
    CHECK(c.targets.targets.size() == 8);
    CHECK(c.targets.duration == 50);
    CHECK(c.experiment.ospa.order == 2.0);
    CHECK(c.experiment.ospa.cutoff == 100.0);
    CHECK(c.filter.n_max == 15);
    const NetworkGraph g = c.build_network();
    CHECK(g.size() == 10);
    CHECK(g.connected());
    const auto sensors = c.build_sensors(g);
    REQUIRE(sensors.size() == 10);
    CHECK(sensors[3].x == g.positions()[3].x());
    CHECK(sensors[0].noise(0, 0) == 400.0);
    CHECK(sensors[0].noise(1, 1) == doctest::Approx(std::pow(std::numbers::pi / 180.0, 2)));
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("an empty document gives the defaults") {
    CHECK(to_yaml(parse_config("")) == to_yaml(ScenarioConfig::defaults()));
}

TEST_CASE("yaml round trip") {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.sensors.detection_probability = 0.5;
    c.sensors.clutter_rate = 32.125;
    c.fusion.rules = {FusionRule::MWIG};
    c.fusion.consensus_steps = {2, 7};
    c.experiment.seed = 123456789012345ULL;
    c.experiment.clutter_sweep = {1.0 / 3.0, 50.0};
    c.filter.reduction.prune_threshold = 1e-7;
    const std::string text = to_yaml(c);
    const ScenarioConfig back = parse_config(text);
    CHECK(to_yaml(back) == text);
    CHECK(back.experiment.seed == 123456789012345ULL);
    CHECK(back.experiment.clutter_sweep[0] == 1.0 / 3.0);
    CHECK(back.fusion.consensus_steps == std::vector<int>{2, 7});
}

TEST_CASE("partial documents override only the given keys") {
    const ScenarioConfig c = parse_config("sensors:\n  detection_probability: 0.5\nexperiment:\n  trials: 3\n");
    CHECK(c.sensors.detection_probability == 0.5);
    CHECK(c.sensors.clutter_rate == 15.0);
    CHECK(c.experiment.trials == 3);
}

TEST_CASE("explicit network and targets") {
    const ScenarioConfig c = parse_config(
        "network:\n  positions: [[0, 0], [1000, 0], [2000, 0]]\n  edges: [[0, 1], [1, 2]]\n"
        "targets:\n  duration: 5\n  birth_times: [1, 2]\n  death_times: [3, 5]\n"
        "  initial_states: [[100, 1, 100, 0], [200, 0, 300, 1]]\n");
    const NetworkGraph g = c.build_network();
    CHECK(g.size() == 3);
    CHECK(g.edges().size() == 2);
    REQUIRE(c.targets.targets.size() == 2);
    CHECK(c.targets.targets[1].death_time == 5);
    CHECK((*c.targets.targets[1].initial_state)(2) == 300.0);
    CHECK(to_yaml(parse_config(to_yaml(c))) == to_yaml(c));
}

TEST_CASE("errors carry the location") {
    const std::string unknown = error_of("sensors:\n  clutter_rate: 10\n  clutter: 3\n");
    CHECK(unknown.find("<string>:3:") != std::string::npos);
    CHECK(unknown.find("clutter") != std::string::npos);

    const std::string bad_type = error_of("experiment:\n  trials: many\n");
    CHECK(bad_type.find("<string>:2:") != std::string::npos);

    CHECK(error_of("sensors:\n  detection_probability: 1.5\n").find("<string>:2:") != std::string::npos);
    CHECK_FALSE(error_of("fusion:\n  rules: [MIL, Median]\n").empty());
    CHECK_FALSE(error_of("sensors: [1, 2\n").empty());
    CHECK_FALSE(error_of("bogus: 1\n").empty());
}

TEST_CASE("validation") {
    CHECK_THROWS_AS((void)parse_config("network:\n  link_range: 100\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("filter:\n  max_targets: 4\n"), ConfigError);
    CHECK_THROWS_AS((void)load_config("/nonexistent/scenario.yaml"), ConfigError);
}

TEST_CASE("the shipped default.yaml equals the built-in defaults") {
    const ScenarioConfig c = load_config(RFSFUSE_DEFAULT_CONFIG);
    CHECK(to_yaml(c) == to_yaml(ScenarioConfig::defaults()));
}
