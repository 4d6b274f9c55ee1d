#include "rfsfuse/experiment.hpp"
#include "rfsfuse/fov_demo.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rfsfuse;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.targets.duration = 12;
    c.targets.targets.resize(4);
    c.sensors.clutter_rate = 5.0;
    c.experiment.trials = 3;
    c.experiment.threads = 1;
    c.fusion.consensus_steps = {1};
    c.fusion.centralized = {FusionRule::MIL};
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("run grid") {
    const auto runs = run_grid(FusionConfig{});
    std::vector<std::string> labels;
    for (const auto& r : runs) labels.push_back(r.label() + "/" + std::to_string(r.steps));
    CHECK(labels == std::vector<std::string>{"MIL/1", "MIL/5", "MWIG/1", "MWIG/5", "None/0", "MIL-opt/0", "MWIG-opt/0"});
}

TEST_CASE("trial seeds are distinct and reproducible") {
    CHECK(trial_seed(1, 0) == trial_seed(1, 0));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("csv formatting") {
    CHECK(time_series_csv({}) == "time,rule,L,mean_ospa,mean_card_est,true_card\n");
    CHECK(clutter_csv({}) == "clutter_rate,rule,L,mean_ospa,mean_card_error\n");
    const TimeRow row{3, "MIL", 5, 12.5, 2.0, 2.0, 0.25};
    CHECK(time_series_csv({row}) == "time,rule,L,mean_ospa,mean_card_est,true_card\n3,MIL,5,12.500000,2.000000,2.000000\n");
}

TEST_CASE("experiment report") {
    const ScenarioConfig c = small_config();
    const ExperimentReport a = run_experiment(c);
    const auto runs = run_grid(c.fusion);
    CHECK(a.rows.size() == runs.size() * 12);
    CHECK(a.summary.size() == runs.size());
    CHECK(a.trial_seeds.size() == 3);
    for (const auto& r : a.rows) {
        CHECK(r.mean_ospa >= 0.0);
        CHECK(r.mean_ospa <= 100.0);
    }

    SUBCASE("deterministic and independent of threading") {
        ScenarioConfig threaded = c;
        threaded.experiment.threads = 3;
        const ExperimentReport b = run_experiment(c), t = run_experiment(threaded);
        CHECK(time_series_csv(a.rows) == time_series_csv(b.rows));
        CHECK(time_series_csv(a.rows) == time_series_csv(t.rows));
    }

    SUBCASE("a different seed changes the result") {
        ScenarioConfig other = c;
        other.experiment.seed = 99;
        CHECK(time_series_csv(run_experiment(other).rows) != time_series_csv(a.rows));
    }

    SUBCASE("MIL with zero steps equals the local-only filter") {
        const ExperimentReport r = run_experiment(c, {{FusionRule::None, FusionMode::Consensus, 0},
                                                      {FusionRule::MIL, FusionMode::Consensus, 0}});
        CHECK(r.summary[0].mean_ospa == r.summary[1].mean_ospa);
        CHECK(r.summary[0].mean_card_error == r.summary[1].mean_card_error);
    }

    SUBCASE("files") {
        const auto dir = std::filesystem::temp_directory_path() / "rfsfuse_test_report";
        std::filesystem::remove_all(dir);
        emit_report(a, c, dir / "nested");
        const std::string ospa_csv = read_file(dir / "nested" / "ospa_vs_time.csv");
        CHECK(ospa_csv == read_file(dir / "nested" / "cardinality_vs_time.csv"));
        CHECK(line_count(ospa_csv) == a.rows.size() + 1);
        CHECK(line_count(read_file(dir / "nested" / "summary.csv")) == a.summary.size() + 1);
        const std::string manifest = read_file(dir / "nested" / "manifest.json");
        CHECK(manifest.find("\"trial_seeds\"") != std::string::npos);
        CHECK(manifest.find("\"master_seed\": 1") != std::string::npos);
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("the easy regime tracks well once all targets are born") {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.targets.duration = 25;
    c.sensors.detection_probability = 1.0;
    c.sensors.clutter_rate = 0.0;
    c.experiment.trials = 1;
    const ExperimentReport r = run_experiment(c, {{FusionRule::MIL, FusionMode::Consensus, 1}});
    double late = 0.0;
    for (const auto& row : r.rows)
        if (row.time > 16) late += row.mean_ospa / 9.0;
    CHECK(late < 50.0);
}

TEST_CASE("clutter sweep") {
    ScenarioConfig c = small_config();
    c.experiment.trials = 1;
    const auto rows = run_clutter_sweep(c, {{FusionRule::MIL, FusionMode::Consensus, 1}}, {0.0, 20.0});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].clutter_rate == 0.0);
    CHECK(rows[1].clutter_rate == 20.0);
    CHECK(line_count(clutter_csv(rows)) == 3);
}

TEST_CASE("field-of-view demo") {
    const auto rows = fov_demo();
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].region == "exclusive-1");
    CHECK(rows[1].region == "shared");
    CHECK(rows[0].node1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rows[0].node2 == doctest::Approx(0.0).epsilon(1e-6));
    // MIL halves the exclusive mass; MWIG keeps exp(-offset^2 / (8 sigma^2)) of it.
    CHECK(rows[0].mil == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rows[2].mil == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rows[0].mwig < 1e-3);
    CHECK(rows[1].mil == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rows[1].mwig == doctest::Approx(1.0).epsilon(1e-4));
    const auto csv = fov_demo_csv(rows);
    CHECK(csv.starts_with("region,"));
    CHECK(line_count(csv) == 4);
}
