#pragma once

#include "rfsfuse/cphd.hpp"
#include "rfsfuse/fusion.hpp"
#include "rfsfuse/ospa.hpp"
#include "rfsfuse/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfsfuse {

/// Configuration error carrying the source location when one is known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SensorsConfig {
    /// Range noise variance (m^2).
    double range_noise_var = 400.0;
    /// Bearing noise variance (deg^2).
    double bearing_noise_var_deg2 = 1.0;
    double detection_probability = 0.98;
    double clutter_rate = 15.0;
};

struct NetworkConfig {
    /// Grid lines of the jittered layout; ignored when `positions` is given.
    std::vector<double> columns{500.0, 1500.0, 2500.0, 3500.0, 4500.0};
    std::vector<double> rows{1600.0, 3400.0};
    double jitter = 150.0;
    double link_range = 2200.0;
    std::uint64_t seed = 7;
    /// Explicit node positions.
    std::vector<Eigen::Vector2d> positions;
    /// Explicit edges; when empty, nodes are linked by distance.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

struct FusionConfig {
    /// Consensus rules to run.
    std::vector<FusionRule> rules{FusionRule::MIL, FusionRule::MWIG, FusionRule::None};
    std::vector<int> consensus_steps{1, 5};
    /// Rules also run in centralized mode (all posteriors fused with uniform weights).
    std::vector<FusionRule> centralized{FusionRule::MIL, FusionRule::MWIG};
    MwigOptions mwig;
};

struct ExperimentConfig {
    int trials = 20;
    std::uint64_t seed = 1;
    OspaParams ospa;
    std::vector<double> clutter_sweep{5.0, 15.0, 30.0, 50.0};
    /// Worker threads for Monte Carlo trials; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

struct ScenarioConfig {
    Region region;
    SensorsConfig sensors;
    NetworkConfig network;
    TruthConfig targets = TruthConfig::default_scenario();
    FilterConfig filter;
    FusionConfig fusion;
    ExperimentConfig experiment;

    /// The built-in scenario (every field at its default).
    static ScenarioConfig defaults();

    [[nodiscard]] NetworkGraph build_network() const;
    /// One sensor per network node.
    [[nodiscard]] std::vector<SensorModel> build_sensors(const NetworkGraph& graph) const;
};

/// Parses a YAML scenario. Missing keys keep their defaults; unknown keys,
/// type errors and invalid values raise ConfigError with "file:line:col".
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);
[[nodiscard]] ScenarioConfig parse_config(const std::string& text, const std::string& source_name = "<string>");

/// Checks ranges and network connectivity; throws ConfigError.
void validate(const ScenarioConfig& config);

/// YAML rendering that parse_config reads back to an equal configuration.
[[nodiscard]] std::string to_yaml(const ScenarioConfig& config);

}  // namespace rfsfuse
