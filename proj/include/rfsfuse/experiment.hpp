#pragma once

#include "rfsfuse/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rfsfuse {

/// One tracker configuration evaluated in an experiment.
struct RunSpec {
    FusionRule rule = FusionRule::MIL;
    FusionMode mode = FusionMode::Consensus;
    /// Consensus iterations; 0 for local-only and centralized runs.
    int steps = 1;

    /// "MIL", "MWIG", "None", or "MIL-opt"/"MWIG-opt" for the centralized mode.
    [[nodiscard]] std::string label() const;
};

/// The run grid of a configuration: every consensus rule at every number of
/// steps (None once, at L = 0), then the centralized rules.
[[nodiscard]] std::vector<RunSpec> run_grid(const FusionConfig& fusion);

struct TimeRow {
    int time = 0;
    std::string rule;
    int steps = 0;
    /// OSPA averaged over nodes and trials.
    double mean_ospa = 0.0;
    /// Number of extracted targets averaged over nodes and trials.
    double mean_card_est = 0.0;
    /// True number of targets averaged over trials.
    double true_card = 0.0;
    /// |extracted - true| averaged over nodes and trials.
    double mean_card_error = 0.0;
};

struct SummaryRow {
    std::string rule;
    int steps = 0;
    double detection_probability = 0.0;
    double clutter_rate = 0.0;
    /// Time averages over t = 1..duration.
    double mean_ospa = 0.0;
    double mean_card_error = 0.0;
};

struct ExperimentReport {
    /// Ordered by run, then time.
    std::vector<TimeRow> rows;
    std::vector<SummaryRow> summary;
    std::vector<std::uint64_t> trial_seeds;

    [[nodiscard]] const SummaryRow& find(const std::string& rule, int steps) const;
};

/// Per-trial seed derived from the master seed.
[[nodiscard]] std::uint64_t trial_seed(std::uint64_t master, int trial);

/// Runs every RunSpec on the same truth and scans per trial. Results are
/// aggregated in trial order, so the report does not depend on threading.
[[nodiscard]] ExperimentReport run_experiment(const ScenarioConfig& config, const std::vector<RunSpec>& runs);
[[nodiscard]] ExperimentReport run_experiment(const ScenarioConfig& config);

/// Summary rows for every clutter rate of the sweep.
[[nodiscard]] std::vector<SummaryRow> run_clutter_sweep(const ScenarioConfig& config, const std::vector<RunSpec>& runs,
                                                        const std::vector<double>& clutter_rates);

/// Writes ospa_vs_time.csv and cardinality_vs_time.csv (header
/// time,rule,L,mean_ospa,mean_card_est,true_card), summary.csv and
/// manifest.json into `out_dir`, creating it if needed.
void emit_report(const ExperimentReport& report, const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Writes ospa_vs_clutter.csv (clutter_rate,rule,L,mean_ospa,mean_card_error)
/// and manifest.json.
void emit_sweep(const std::vector<SummaryRow>& rows, const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// CSV text of the time series and of the clutter sweep.
[[nodiscard]] std::string time_series_csv(const std::vector<TimeRow>& rows);
[[nodiscard]] std::string clutter_csv(const std::vector<SummaryRow>& rows);

}  // namespace rfsfuse
