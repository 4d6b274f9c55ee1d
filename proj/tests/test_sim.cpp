#include "rfsfuse/sim.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace rfsfuse;
using namespace rfsfuse::testing;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SensorModel sensor_at(double x, double y, double pd, double clutter, const Matrix& noise) {
    SensorModel s;
    s.x = x;
    s.y = y;
    s.noise = noise;
    s.detection_probability = pd;
    s.clutter_rate = clutter;
    return s;
}

std::vector<Eigen::Vector2d> line_positions(std::size_t n) {
    std::vector<Eigen::Vector2d> p;
    for (std::size_t i = 0; i < n; ++i) p.emplace_back(1000.0 * static_cast<double>(i), 0.0);
    return p;
}

NetworkGraph ring(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return NetworkGraph(line_positions(n), edges);
}

/// Random local states with distinct CPMFs and well-separated spatial peaks.
std::vector<FilterState> random_states(Gen& gen, std::size_t nodes) {
    std::vector<FilterState> out;
    for (std::size_t i = 0; i < nodes; ++i) {
        GaussianMixture gm;
        gm.add(GaussianComponent(1.0, vec({gen.uniform(0, 5000), 0, gen.uniform(0, 5000), 0}), diag({100, 25, 100, 25})));
        out.push_back(FilterState{IidCluster(gen.pmf(15), gm), 0});
    }
    return out;
}

double mean_sum(const std::vector<FilterState>& s) {
    double total = 0.0;
    for (const auto& f : s) total += f.density.cardinality().mean();
    return total;
}

}  // namespace

TEST_CASE("network graph") {
    const NetworkGraph g = NetworkGraph::by_distance(line_positions(4), 1500.0);
    CHECK(g.edges().size() == 3);
    CHECK(g.connected());
    CHECK(g.neighbors(1) == std::vector<std::size_t>{0, 2});
    CHECK(g.in_neighbors(0) == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(NetworkGraph::by_distance(line_positions(4), 500.0).connected());
    CHECK_THROWS_AS(NetworkGraph(line_positions(2), {{0, 5}}), std::invalid_argument);
}

TEST_CASE("default jittered grid") {
    const std::vector<double> xs{500, 1500, 2500, 3500, 4500}, ys{1600, 3400};
    const NetworkGraph g = NetworkGraph::jittered_grid(xs, ys, 150.0, 2200.0, 7);
    CHECK(g.size() == 10);
    CHECK(g.connected());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Eigen::Vector2d nominal(xs[i % 5], ys[i / 5]);
        CHECK((g.positions()[i] - nominal).cwiseAbs().maxCoeff() <= 150.0);
    }
    const NetworkGraph again = NetworkGraph::jittered_grid(xs, ys, 150.0, 2200.0, 7);
    CHECK(again.positions() == g.positions());
}

TEST_CASE("truth: noise-free straight line from a given state") {
    TruthConfig c;
    c.motion = MotionModel::constant_velocity(1.0, 0.0, 0.0, 1.0);
    c.targets = {TargetSpec{1, std::nullopt, vec({0, 10, 0, 0})}};
    const GroundTruth truth = generate_truth(c, 3);
    for (int t = 1; t <= c.duration; ++t) {
        REQUIRE(truth.cardinality(t) == 1);
        CHECK(truth.positions_at(t)[0].x() == doctest::Approx(10.0 * (t - 1)));
        CHECK(truth.positions_at(t)[0].y() == 0.0);
    }
}

TEST_CASE("truth: random trajectories without noise are straight lines") {
    TruthConfig c = TruthConfig::default_scenario();
    c.motion = MotionModel::constant_velocity(1.0, 0.0, 0.0, 1.0);
    const GroundTruth truth = generate_truth(c, 11);
    for (const auto& tr : truth.tracks) {
        const Vector v0 = tr.states.front();
        const double speed = std::hypot(v0(1), v0(3));
        CHECK(speed >= 5.0);
        CHECK(speed <= 15.0);
        CHECK(v0(0) >= 1000.0);
        CHECK(v0(0) <= 4000.0);
        for (std::size_t k = 1; k < tr.states.size(); ++k) {
            CHECK(tr.states[k](1) == v0(1));
            CHECK(tr.states[k](0) == doctest::Approx(v0(0) + static_cast<double>(k) * v0(1)));
        }
    }
}

TEST_CASE("truth: schedule, region and determinism") {
    const TruthConfig c = TruthConfig::default_scenario();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GroundTruth truth = generate_truth(c, seed);
        CHECK(truth.cardinality(1) == 2);
        CHECK(truth.cardinality(4) == 2);
        CHECK(truth.cardinality(5) == 4);
        CHECK(truth.cardinality(10) == 6);
        CHECK(truth.cardinality(15) == 8);
        CHECK(truth.cardinality(50) == 8);
        for (int t = 1; t <= 50; ++t)
            for (const auto& p : truth.positions_at(t)) CHECK(c.region.contains(p.x(), p.y()));
    }
    const GroundTruth a = generate_truth(c, 5), b = generate_truth(c, 5), other = generate_truth(c, 6);
    CHECK(a.tracks[3].states == b.tracks[3].states);
    CHECK(a.tracks[3].states != other.tracks[3].states);
}

TEST_CASE("truth: death times end tracks") {
    TruthConfig c;
    c.duration = 10;
    c.targets = {TargetSpec{2, 6, std::nullopt}};
    const GroundTruth truth = generate_truth(c, 1);
    CHECK(truth.cardinality(1) == 0);
    CHECK(truth.cardinality(2) == 1);
    CHECK(truth.cardinality(6) == 1);
    CHECK(truth.cardinality(7) == 0);
}

TEST_CASE("scans: no detections and no clutter gives empty scans") {
    const GroundTruth truth = generate_truth(TruthConfig::default_scenario(), 2);
    const std::vector<SensorModel> sensors{sensor_at(0, 0, 0.0, 0.0, diag({400, kDeg * kDeg}))};
    const ScanData scans = generate_scans(truth, sensors, 2);
    REQUIRE(scans.scans.size() == 51);
    for (int t = 0; t <= 50; ++t) CHECK(scans.at(t, 0).empty());
}

TEST_CASE("scans: perfect detection without noise reproduces the truth") {
    const GroundTruth truth = generate_truth(TruthConfig::default_scenario(), 2);
    const std::vector<SensorModel> sensors{sensor_at(2500, 2500, 1.0, 0.0, diag({0, 0}))};
    const ScanData scans = generate_scans(truth, sensors, 2);
    for (int t = 1; t <= 50; ++t) {
        const Scan& scan = scans.at(t, 0);
        const auto truth_pos = truth.positions_at(t);
        REQUIRE(scan.size() == truth_pos.size());
        for (const auto& p : truth_pos) {
            const double r = std::hypot(p.x() - 2500, p.y() - 2500), b = std::atan2(p.y() - 2500, p.x() - 2500);
            const bool found = std::any_of(scan.begin(), scan.end(), [&](const Measurement& z) {
                return std::abs(z.range - r) < 1e-9 && std::abs(z.bearing - b) < 1e-12;
            });
            CHECK(found);
        }
    }
}

TEST_CASE("scans: clutter counts have the configured mean") {
    TruthConfig c;
    c.duration = 10000;
    c.targets.clear();
    const GroundTruth truth = generate_truth(c, 1);
    const std::vector<SensorModel> sensors{sensor_at(1000, 1000, 0.9, 15.0, diag({400, kDeg * kDeg}))};
    const ScanData scans = generate_scans(truth, sensors, 4);
    double total = 0.0;
    for (int t = 1; t <= c.duration; ++t) {
        total += static_cast<double>(scans.at(t, 0).size());
        for (const auto& z : scans.at(t, 0)) {
            CHECK(z.bearing > -std::numbers::pi - 1e-12);
            CHECK(z.bearing <= std::numbers::pi + 1e-12);
        }
    }
    const double mean = total / c.duration;
    CHECK(mean >= 14.7);
    CHECK(mean <= 15.3);
}

TEST_CASE("scans: node streams are independent of the number of sensors") {
    const GroundTruth truth = generate_truth(TruthConfig::default_scenario(), 8);
    const Matrix r = diag({400, kDeg * kDeg});
    const std::vector<SensorModel> one{sensor_at(0, 0, 0.9, 10, r)};
    const std::vector<SensorModel> two{sensor_at(0, 0, 0.9, 10, r), sensor_at(5000, 5000, 0.9, 10, r)};
    const ScanData a = generate_scans(truth, one, 8), b = generate_scans(truth, two, 8);
    for (int t = 0; t <= 50; ++t) {
        REQUIRE(a.at(t, 0).size() == b.at(t, 0).size());
        for (std::size_t k = 0; k < a.at(t, 0).size(); ++k) CHECK(a.at(t, 0)[k].range == b.at(t, 0)[k].range);
    }
}

TEST_CASE("consensus: identical states are a fixed point") {
    const NetworkGraph g = ring(5);
    const MetropolisWeights w = metropolis_weights(g.adjacency());
    Gen gen(3);
    const FilterState s = random_states(gen, 1).front();
    const std::vector<FilterState> states(5, s);
    for (FusionRule rule : {FusionRule::MIL, FusionRule::MWIG}) {
        const auto next = consensus_step(states, w, ConsensusOptions{rule, {}, {}});
        for (const auto& n : next) {
            for (std::size_t k = 0; k <= 15; ++k)
                CHECK(n.density.cardinality()[k] == doctest::Approx(s.density.cardinality()[k]).epsilon(1e-9));
            CHECK(n.spatial().size() == 1);
            CHECK((n.spatial()[0].mean() - s.spatial()[0].mean()).norm() < 1e-6);
        }
    }
}

TEST_CASE("consensus: two nodes average their CPMFs in one step") {
    const NetworkGraph g(line_positions(2), {{0, 1}});
    const MetropolisWeights w = metropolis_weights(g.adjacency());
    Gen gen(4);
    const auto states = random_states(gen, 2);
    const auto next = consensus_step(states, w, ConsensusOptions{});
    for (std::size_t k = 0; k <= 15; ++k) {
        const double avg = 0.5 * (states[0].density.cardinality()[k] + states[1].density.cardinality()[k]);
        CHECK(next[0].density.cardinality()[k] == doctest::Approx(avg).epsilon(1e-12));
        CHECK(next[1].density.cardinality()[k] == doctest::Approx(avg).epsilon(1e-12));
    }
}

TEST_CASE("consensus: MIL converges to the centralized average and conserves mass") {
    Gen gen(5);
    for (int trial = 0; trial < 5; ++trial) {
        const NetworkGraph g = NetworkGraph::jittered_grid(std::vector<double>{500, 1500, 2500, 3500, 4500},
                                                           std::vector<double>{1600, 3400}, 150, 2200, 7 + trial);
        REQUIRE(g.connected());
        const MetropolisWeights w = metropolis_weights(g.adjacency());
        std::vector<FilterState> states = random_states(gen, g.size());
        std::vector<double> avg(16, 0.0);
        for (const auto& s : states)
            for (std::size_t k = 0; k <= 15; ++k) avg[k] += s.density.cardinality()[k] / static_cast<double>(g.size());
        const double mass = mean_sum(states);
        const FilterState central = centralized_fusion(states, ConsensusOptions{});
        auto spread = [&] {
            double s = 0.0;
            for (const auto& f : states)
                for (std::size_t k = 0; k <= 15; ++k) s = std::max(s, std::abs(f.density.cardinality()[k] - avg[k]));
            return s;
        };
        double last = spread();
        for (int l = 0; l < 200; ++l) {
            states = consensus_step(states, w, ConsensusOptions{});
            CHECK(std::abs(mean_sum(states) - mass) < 1e-9);
            const double now = spread();
            CHECK(now <= last + 1e-15);
            last = now;
        }
        CHECK(last < 1e-6);
        for (std::size_t k = 0; k <= 15; ++k)
            CHECK(central.density.cardinality()[k] == doctest::Approx(avg[k]).epsilon(1e-12));
        CHECK(std::abs(states[0].density.cardinality().mean() - central.density.cardinality().mean()) < 1e-4);
    }
}

TEST_CASE("consensus: a single node is unchanged") {
    const NetworkGraph g(line_positions(1), {});
    const MetropolisWeights w = metropolis_weights(g.adjacency());
    Gen gen(6);
    const auto states = random_states(gen, 1);
    for (FusionRule rule : {FusionRule::MIL, FusionRule::MWIG}) {
        const auto next = consensus_step(states, w, ConsensusOptions{rule, {}, {}});
        CHECK(next[0].density.cardinality() == states[0].density.cardinality());
    }
}

TEST_CASE("consensus: MWIG total conflict keeps the local state") {
    const NetworkGraph g(line_positions(2), {{0, 1}});
    const MetropolisWeights w = metropolis_weights(g.adjacency());
    auto far = [](double x) {
        GaussianMixture gm;
        gm.add(GaussianComponent(1.0, vec({x, 0, 0, 0}), diag({1, 1, 1, 1})));
        return FilterState{IidCluster(CardinalityPmf::delta(1, 15), gm), 0};
    };
    const std::vector<FilterState> states{far(0.0), far(1e6)};
    const auto next = consensus_step(states, w, ConsensusOptions{FusionRule::MWIG, {}, {}});
    CHECK(next[0].spatial()[0].mean()(0) == 0.0);
    CHECK(next[1].spatial()[0].mean()(0) == 1e6);
}

namespace {

struct SmallScenario {
    NetworkGraph graph = NetworkGraph::by_distance({{1000, 1000}, {2500, 1200}, {4000, 1000}}, 2000.0);
    std::vector<SensorModel> sensors;
    GroundTruth truth;
    ScanData scans;

    SmallScenario() {
        for (const auto& p : graph.positions()) sensors.push_back(sensor_at(p.x(), p.y(), 0.9, 5.0, diag({400, kDeg * kDeg})));
        TruthConfig c = TruthConfig::default_scenario();
        c.duration = 12;
        c.targets.resize(4);
        truth = generate_truth(c, 21);
        scans = generate_scans(truth, sensors, 21);
    }

    std::vector<TimestepResult> run(FusionRule rule, FusionMode mode, int steps) const {
        TrackerConfig tc;
        tc.consensus.rule = rule;
        tc.mode = mode;
        tc.steps = steps;
        DistributedTracker tracker(graph, sensors, tc);
        std::vector<TimestepResult> out;
        for (int t = 1; t <= truth.duration; ++t) out.push_back(tracker.step(scans.scans[static_cast<std::size_t>(t)]));
        return out;
    }
};

bool same(const std::vector<TimestepResult>& a, const std::vector<TimestepResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].expected_cardinality != b[t].expected_cardinality) return false;
        if (a[t].estimates.size() != b[t].estimates.size()) return false;
        for (std::size_t i = 0; i < a[t].estimates.size(); ++i)
            if (a[t].estimates[i] != b[t].estimates[i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("tracker: zero consensus steps equals the local-only filter") {
    const SmallScenario s;
    const auto none = s.run(FusionRule::None, FusionMode::Consensus, 3);
    CHECK(same(s.run(FusionRule::MIL, FusionMode::Consensus, 0), none));
    CHECK(same(s.run(FusionRule::MWIG, FusionMode::Consensus, 0), none));
}

TEST_CASE("tracker: runs are deterministic") {
    const SmallScenario s;
    CHECK(same(s.run(FusionRule::MIL, FusionMode::Consensus, 2), s.run(FusionRule::MIL, FusionMode::Consensus, 2)));
    CHECK(same(s.run(FusionRule::MWIG, FusionMode::Consensus, 1), s.run(FusionRule::MWIG, FusionMode::Consensus, 1)));
}

TEST_CASE("tracker: centralized fusion gives every node the same estimate") {
    const SmallScenario s;
    for (const auto& r : s.run(FusionRule::MIL, FusionMode::Centralized, 0)) {
        CHECK(r.expected_cardinality[0] == r.expected_cardinality[1]);
        CHECK(r.estimates[0] == r.estimates[2]);
    }
}

TEST_CASE("tracker: fusion does not move the expected cardinality out of range") {
    const SmallScenario s;
    for (const auto& r : s.run(FusionRule::MIL, FusionMode::Consensus, 1))
        for (double n : r.expected_cardinality) {
            CHECK(n >= 0.0);
            CHECK(n <= 15.0);
        }
}
