#include "rfsfuse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>

namespace rfsfuse {

namespace {

constexpr std::uint64_t kTruthStream = 0x7472757468;
constexpr std::uint64_t kScanStream = 0x7363616e;

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

// Symmetric square root of a positive semidefinite matrix.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd standard_normal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

}  // namespace

NetworkGraph::NetworkGraph(std::vector<Eigen::Vector2d> positions, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : positions_(std::move(positions)), adjacency_(positions_.size()) {
    if (positions_.empty()) throw std::invalid_argument("NetworkGraph: no nodes");
    for (auto [a, b] : edges) {
        if (a >= positions_.size() || b >= positions_.size())
            throw std::invalid_argument("NetworkGraph: edge refers to an unknown node");
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (std::find(edges_.begin(), edges_.end(), std::pair{a, b}) != edges_.end()) continue;
        edges_.emplace_back(a, b);
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
    }
    for (auto& n : adjacency_) std::sort(n.begin(), n.end());
}

NetworkGraph NetworkGraph::by_distance(std::vector<Eigen::Vector2d> positions, double link_range) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j)
            if ((positions[i] - positions[j]).norm() < link_range) edges.emplace_back(i, j);
    return NetworkGraph(std::move(positions), std::move(edges));
}

NetworkGraph NetworkGraph::jittered_grid(std::span<const double> xs, std::span<const double> ys, double jitter,
                                         double link_range, std::uint64_t seed) {
    if (xs.empty() || ys.empty()) throw std::invalid_argument("jittered_grid: empty grid");
    if (jitter < 0.0) throw std::invalid_argument("jittered_grid: negative jitter");
    std::mt19937_64 rng = make_engine(seed, 0x6e6574);
    std::uniform_real_distribution<double> offset(-jitter, jitter);
    std::vector<Eigen::Vector2d> positions;
    for (double y : ys)
        for (double x : xs) {
            const double jx = offset(rng);
            const double jy = offset(rng);
            positions.emplace_back(x + jx, y + jy);
        }
    return by_distance(std::move(positions), link_range);
}

std::vector<std::size_t> NetworkGraph::in_neighbors(std::size_t i) const {
    std::vector<std::size_t> out = adjacency_.at(i);
    out.insert(std::lower_bound(out.begin(), out.end(), i), i);
    return out;
}

bool NetworkGraph::connected() const {
    std::vector<bool> seen(size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop();
        for (std::size_t j : adjacency_[i])
            if (!seen[j]) {
                seen[j] = true;
                ++count;
                frontier.push(j);
            }
    }
    return count == size();
}

TruthConfig TruthConfig::default_scenario() {
    TruthConfig c;
    for (int t : {1, 1, 5, 5, 10, 10, 15, 15}) c.targets.push_back(TargetSpec{t, std::nullopt, std::nullopt});
    return c;
}

std::vector<Vector> GroundTruth::states_at(int t) const {
    std::vector<Vector> out;
    for (const auto& tr : tracks)
        if (tr.alive(t)) out.push_back(tr.state_at(t));
    return out;
}

std::vector<Eigen::Vector2d> GroundTruth::positions_at(int t) const {
    std::vector<Eigen::Vector2d> out;
    for (const auto& tr : tracks)
        if (tr.alive(t)) out.emplace_back(tr.state_at(t)(0), tr.state_at(t)(2));
    return out;
}

std::size_t GroundTruth::cardinality(int t) const {
    return static_cast<std::size_t>(std::count_if(tracks.begin(), tracks.end(), [t](const TargetTrack& tr) { return tr.alive(t); }));
}

GroundTruth generate_truth(const TruthConfig& config, std::uint64_t seed) {
    if (config.duration < 0) throw std::invalid_argument("generate_truth: negative duration");
    GroundTruth truth;
    truth.duration = config.duration;
    const Eigen::MatrixXd noise_root = psd_sqrt(config.motion.process_noise);
    const Matrix& a = config.motion.transition;
    std::uniform_real_distribution<double> position(config.initial_min, config.initial_max);
    std::uniform_real_distribution<double> speed(config.speed_min, config.speed_max);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);

    for (std::size_t k = 0; k < config.targets.size(); ++k) {
        const TargetSpec& spec = config.targets[k];
        const int death = spec.death_time.value_or(config.duration);
        if (spec.birth_time < 0 || death < spec.birth_time || death > config.duration)
            throw std::invalid_argument("generate_truth: target lifetime outside the run");
        std::mt19937_64 rng = make_engine(seed, kTruthStream, k);
        bool ok = false;
        TargetTrack track{spec.birth_time, death, {}};
        for (int attempt = 0; attempt < config.max_redraws && !ok; ++attempt) {
            Vector x(kStateDim);
            if (spec.initial_state) {
                x = *spec.initial_state;
            } else {
                const double px = position(rng);
                const double py = position(rng);
                const double v = speed(rng);
                const double h = heading(rng);
                x << px, v * std::cos(h), py, v * std::sin(h);
            }
            track.states.assign(1, x);
            ok = config.region.contains(x(0), x(2));
            for (int t = spec.birth_time + 1; t <= death && ok; ++t) {
                const Eigen::VectorXd w = noise_root * standard_normal(rng, kStateDim);
                x = a * x + Vector(w);
                track.states.push_back(x);
                ok = config.region.contains(x(0), x(2));
            }
        }
        if (!ok) throw std::runtime_error("generate_truth: could not keep a trajectory inside the region");
        truth.tracks.push_back(std::move(track));
    }
    return truth;
}

ScanData generate_scans(const GroundTruth& truth, std::span<const SensorModel> sensors, std::uint64_t seed) {
    ScanData data;
    data.scans.assign(static_cast<std::size_t>(truth.duration) + 1, std::vector<Scan>(sensors.size()));
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const SensorModel& s = sensors[i];
        if (!(s.detection_probability >= 0.0 && s.detection_probability <= 1.0))
            throw std::invalid_argument("generate_scans: detection probability outside [0,1]");
        if (s.clutter_rate < 0.0) throw std::invalid_argument("generate_scans: negative clutter rate");
        std::mt19937_64 rng = make_engine(seed, kScanStream, i);
        const Eigen::MatrixXd noise_root = psd_sqrt(s.noise);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> cx(s.region.x_min, s.region.x_max);
        std::uniform_real_distribution<double> cy(s.region.y_min, s.region.y_max);
        std::poisson_distribution<int> clutter_count(s.clutter_rate > 0.0 ? s.clutter_rate : 1.0);
        for (int t = 0; t <= truth.duration; ++t) {
            Scan& scan = data.scans[static_cast<std::size_t>(t)][i];
            for (const Vector& x : truth.states_at(t)) {
                if (!(unit(rng) < s.detection_probability)) continue;
                Measurement z = s.measure(x);
                const Eigen::VectorXd v = noise_root * standard_normal(rng, 2);
                z.range += v(0);
                z.bearing = wrap_angle(z.bearing + v(1));
                scan.push_back(z);
            }
            const int n_clutter = s.clutter_rate > 0.0 ? clutter_count(rng) : 0;
            for (int c = 0; c < n_clutter; ++c) {
                Vector p = Vector::Zero(kStateDim);
                p(0) = cx(rng);
                p(2) = cy(rng);
                scan.push_back(s.measure(p));
            }
            std::shuffle(scan.begin(), scan.end(), rng);
        }
    }
    return data;
}

namespace {

std::optional<IidCluster> fuse(std::span<const IidCluster> locals, const FusionWeights& w, const ConsensusOptions& options) {
    switch (options.rule) {
    case FusionRule::MIL:
        return fuse_iidcp_mil(locals, w);
    case FusionRule::MWIG:
        try {
            return fuse_mwig(locals, w, options.mwig);
        } catch (const TotalConflictError&) {
            return std::nullopt;
        }
    case FusionRule::None:
        break;
    }
    return std::nullopt;
}

}  // namespace

std::vector<FilterState> consensus_step(std::span<const FilterState> states, const MetropolisWeights& weights,
                                        const ConsensusOptions& options) {
    if (states.size() != weights.rows.size()) throw std::invalid_argument("consensus_step: states/weights size mismatch");
    std::vector<FilterState> next;
    next.reserve(states.size());
    std::vector<IidCluster> locals;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (options.rule == FusionRule::None) {
            next.push_back(states[i]);
            continue;
        }
        const FusionWeights& row = weights.rows[i];
        locals.clear();
        for (std::size_t j : row.agents()) locals.push_back(states[j].density);
        std::optional<IidCluster> fused = fuse(locals, row, options);
        if (!fused) {
            next.push_back(states[i]);
            continue;
        }
        next.push_back(reduce(FilterState{std::move(*fused), states[i].time}, options.reduction));
    }
    return next;
}

FilterState centralized_fusion(std::span<const FilterState> states, const ConsensusOptions& options) {
    if (states.empty()) throw std::invalid_argument("centralized_fusion: no states");
    std::vector<IidCluster> locals;
    for (const auto& s : states) locals.push_back(s.density);
    std::optional<IidCluster> fused = fuse(locals, FusionWeights::uniform(states.size()), options);
    if (!fused) return states.front();
    return reduce(FilterState{std::move(*fused), states.front().time}, options.reduction);
}

DistributedTracker::DistributedTracker(const NetworkGraph& graph, std::vector<SensorModel> sensors, TrackerConfig config)
    : sensors_(std::move(sensors)),
      config_(std::move(config)),
      weights_(metropolis_weights(graph.adjacency())),
      states_(sensors_.size(), FilterState::empty(config_.filter.n_max)),
      previous_scans_(sensors_.size()) {
    if (sensors_.size() != graph.size()) throw std::invalid_argument("DistributedTracker: one sensor per node required");
    if (config_.steps < 0) throw std::invalid_argument("DistributedTracker: negative consensus steps");
}

TimestepResult DistributedTracker::step(std::span<const Scan> scans) {
    if (scans.size() != sensors_.size()) throw std::invalid_argument("DistributedTracker::step: one scan per node required");
    const FilterConfig& f = config_.filter;
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
        const BirthModel birth = BirthModel::from_measurements(previous_scans_[i], sensors_[i], f.birth);
        const FilterState predicted = predict(states_[i], f.motion, birth);
        states_[i] = reduce(update(predicted, scans[i], sensors_[i], f.update), f.reduction);
        previous_scans_[i] = scans[i];
    }

    if (config_.consensus.rule != FusionRule::None) {
        if (config_.mode == FusionMode::Centralized) {
            const FilterState fused = centralized_fusion(states_, config_.consensus);
            std::fill(states_.begin(), states_.end(), fused);
        } else {
            for (int l = 0; l < config_.steps; ++l) states_ = consensus_step(states_, weights_, config_.consensus);
        }
    }

    TimestepResult result;
    for (const auto& s : states_) {
        result.estimates.push_back(extract(s));
        result.expected_cardinality.push_back(s.density.cardinality().mean());
    }
    return result;
}

}  // namespace rfsfuse
