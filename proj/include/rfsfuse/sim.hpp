#pragma once

#include "rfsfuse/cphd.hpp"
#include "rfsfuse/fusion.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rfsfuse {

/// Undirected sensor network. Node i's in-neighbour set always contains i.
class NetworkGraph {
public:
    NetworkGraph(std::vector<Eigen::Vector2d> positions, std::vector<std::pair<std::size_t, std::size_t>> edges);

    /// Links every pair of nodes closer than `link_range`.
    static NetworkGraph by_distance(std::vector<Eigen::Vector2d> positions, double link_range);

    /// One node per (x, y) pair of the grid lines, row by row, each displaced
    /// uniformly by up to `jitter` metres per axis, linked by distance.
    static NetworkGraph jittered_grid(std::span<const double> xs, std::span<const double> ys, double jitter,
                                      double link_range, std::uint64_t seed);

    [[nodiscard]] std::size_t size() const { return positions_.size(); }
    [[nodiscard]] const std::vector<Eigen::Vector2d>& positions() const { return positions_; }
    [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    /// Neighbours of i, excluding i, sorted.
    [[nodiscard]] const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_[i]; }
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& adjacency() const { return adjacency_; }
    /// Neighbours of i including i itself, sorted.
    [[nodiscard]] std::vector<std::size_t> in_neighbors(std::size_t i) const;
    [[nodiscard]] bool connected() const;

private:
    std::vector<Eigen::Vector2d> positions_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

struct TargetSpec {
    int birth_time = 1;
    /// Last time step the target exists; nullopt means the end of the run.
    std::optional<int> death_time;
    /// State at the birth time; drawn at random when absent.
    std::optional<Vector> initial_state;
};

struct TruthConfig {
    int duration = 50;
    std::vector<TargetSpec> targets;
    Region region;
    /// Random initial positions are uniform in [initial_min, initial_max]^2.
    double initial_min = 1000.0;
    double initial_max = 4000.0;
    double speed_min = 5.0;
    double speed_max = 15.0;
    /// Transition and process noise used to realize trajectories.
    MotionModel motion = MotionModel::constant_velocity(1.0, 25.0, 4.0, 0.95);
    /// Attempts at drawing a trajectory that stays inside the region.
    int max_redraws = 1000;

    /// Eight targets born in pairs at t = 1, 5, 10, 15 and alive until the end.
    static TruthConfig default_scenario();
};

struct TargetTrack {
    int birth_time = 0;
    int death_time = 0;
    /// states[k] is the state at time birth_time + k.
    std::vector<Vector> states;

    [[nodiscard]] bool alive(int t) const { return t >= birth_time && t <= death_time; }
    [[nodiscard]] const Vector& state_at(int t) const { return states.at(static_cast<std::size_t>(t - birth_time)); }
};

struct GroundTruth {
    int duration = 0;
    std::vector<TargetTrack> tracks;

    [[nodiscard]] std::vector<Vector> states_at(int t) const;
    /// (x, y) positions of the targets alive at t.
    [[nodiscard]] std::vector<Eigen::Vector2d> positions_at(int t) const;
    [[nodiscard]] std::size_t cardinality(int t) const;
};

/// Trajectories from x_t = A x_{t-1} + w_t. A trajectory that leaves the
/// region is redrawn (random initial state and noise); explicit initial
/// states only redraw the noise. Throws std::runtime_error when no valid
/// trajectory is found within `max_redraws` attempts.
[[nodiscard]] GroundTruth generate_truth(const TruthConfig& config, std::uint64_t seed);

using Scan = std::vector<Measurement>;

/// scans[t][i]: measurements of node i at time t, for t = 0..duration.
struct ScanData {
    std::vector<std::vector<Scan>> scans;

    [[nodiscard]] const Scan& at(int t, std::size_t node) const { return scans.at(static_cast<std::size_t>(t)).at(node); }
};

/// Detections (probability P_d, noise ~ N(0, R)) plus Poisson clutter that
/// is uniform over the region, in shuffled order. Node i draws from its own
/// random stream, so adding sensors does not perturb existing ones.
[[nodiscard]] ScanData generate_scans(const GroundTruth& truth, std::span<const SensorModel> sensors,
                                      std::uint64_t seed);

struct ConsensusOptions {
    FusionRule rule = FusionRule::MIL;
    ReductionParams reduction;
    MwigOptions mwig;
};

/// One synchronous consensus round: node i fuses the states of its
/// in-neighbours with row i of the weights and reduces the result. A node
/// whose MWIG fusion hits total conflict keeps its own state.
[[nodiscard]] std::vector<FilterState> consensus_step(std::span<const FilterState> states,
                                                      const MetropolisWeights& weights,
                                                      const ConsensusOptions& options);

/// Fuses all states with uniform weights (the centralized benchmark).
[[nodiscard]] FilterState centralized_fusion(std::span<const FilterState> states, const ConsensusOptions& options);

enum class FusionMode { Consensus, Centralized };

struct FilterConfig {
    MotionModel motion = MotionModel::constant_velocity(1.0, 25.0, 4.0, 0.95);
    BirthParams birth;
    UpdateParams update;
    ReductionParams reduction;
    /// Largest cardinality represented in the CPMF.
    std::size_t n_max = 15;
};

struct TrackerConfig {
    FilterConfig filter;
    ConsensusOptions consensus;
    FusionMode mode = FusionMode::Consensus;
    /// Consensus iterations per time step (ignored in centralized mode).
    int steps = 1;
};

struct TimestepResult {
    /// estimates[i]: extracted states of node i.
    std::vector<std::vector<Vector>> estimates;
    /// CPMF mean of every node after fusion.
    std::vector<double> expected_cardinality;
};

/// Runs one consensus-based CPHD filter per sensor node.
class DistributedTracker {
public:
    DistributedTracker(const NetworkGraph& graph, std::vector<SensorModel> sensors, TrackerConfig config);

    /// Local predict/update/reduce at every node, then fusion, then extraction.
    TimestepResult step(std::span<const Scan> scans);

    [[nodiscard]] const std::vector<FilterState>& states() const { return states_; }
    [[nodiscard]] const MetropolisWeights& weights() const { return weights_; }

private:
    std::vector<SensorModel> sensors_;
    TrackerConfig config_;
    MetropolisWeights weights_;
    std::vector<FilterState> states_;
    std::vector<Scan> previous_scans_;
};

}  // namespace rfsfuse
