#include "rfsfuse/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rfsfuse {

namespace {

// Per-time averages over nodes for one run of one trial.
struct TrialSeries {
    std::vector<double> ospa;
    std::vector<double> card_est;
    std::vector<double> card_error;
    std::vector<double> true_card;
};

std::vector<TrialSeries> run_trial(const ScenarioConfig& config, const NetworkGraph& graph,
                                   const std::vector<SensorModel>& sensors, const std::vector<RunSpec>& runs,
                                   std::uint64_t seed) {
    const GroundTruth truth = generate_truth(config.targets, seed);
    const ScanData scans = generate_scans(truth, sensors, seed);
    std::vector<TrialSeries> out;
    for (const RunSpec& run : runs) {
        TrackerConfig tc;
        tc.filter = config.filter;
        tc.consensus.rule = run.rule;
        tc.consensus.reduction = config.filter.reduction;
        tc.consensus.mwig = config.fusion.mwig;
        tc.mode = run.mode;
        tc.steps = run.steps;
        DistributedTracker tracker(graph, sensors, tc);
        TrialSeries series;
        for (int t = 1; t <= truth.duration; ++t) {
            const TimestepResult r = tracker.step(scans.scans[static_cast<std::size_t>(t)]);
            const std::vector<Eigen::Vector2d> truth_pos = truth.positions_at(t);
            const auto n_true = static_cast<double>(truth_pos.size());
            double ospa_sum = 0.0, card_sum = 0.0, err_sum = 0.0;
            for (const auto& est : r.estimates) {
                std::vector<Eigen::Vector2d> pos;
                for (const Vector& x : est) pos.emplace_back(x(0), x(2));
                ospa_sum += ospa(pos, truth_pos, config.experiment.ospa);
                card_sum += static_cast<double>(pos.size());
                err_sum += std::abs(static_cast<double>(pos.size()) - n_true);
            }
            const auto nodes = static_cast<double>(r.estimates.size());
            series.ospa.push_back(ospa_sum / nodes);
            series.card_est.push_back(card_sum / nodes);
            series.card_error.push_back(err_sum / nodes);
            series.true_card.push_back(n_true);
        }
        out.push_back(std::move(series));
    }
    return out;
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

nlohmann::json manifest(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds) {
    nlohmann::json j;
    j["master_seed"] = config.experiment.seed;
    j["trials"] = config.experiment.trials;
    j["trial_seeds"] = seeds;
    j["network_seed"] = config.network.seed;
    j["config"] = to_yaml(config);
    return j;
}

}  // namespace

std::string RunSpec::label() const {
    std::string name(to_string(rule));
    if (mode == FusionMode::Centralized) name += "-opt";
    return name;
}

std::vector<RunSpec> run_grid(const FusionConfig& fusion) {
    std::vector<RunSpec> runs;
    for (FusionRule rule : fusion.rules) {
        if (rule == FusionRule::None) {
            runs.push_back({rule, FusionMode::Consensus, 0});
            continue;
        }
        for (int l : fusion.consensus_steps) runs.push_back({rule, FusionMode::Consensus, l});
    }
    for (FusionRule rule : fusion.centralized) runs.push_back({rule, FusionMode::Centralized, 0});
    return runs;
}

const SummaryRow& ExperimentReport::find(const std::string& rule, int steps) const {
    for (const auto& s : summary)
        if (s.rule == rule && s.steps == steps) return s;
    throw std::out_of_range("no summary row for " + rule + " L=" + std::to_string(steps));
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
    // splitmix64 of (master, trial)
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ExperimentReport run_experiment(const ScenarioConfig& config, const std::vector<RunSpec>& runs) {
    validate(config);
    const NetworkGraph graph = config.build_network();
    const std::vector<SensorModel> sensors = config.build_sensors(graph);
    const int trials = config.experiment.trials;
    if (trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");

    ExperimentReport report;
    for (int k = 0; k < trials; ++k) report.trial_seeds.push_back(trial_seed(config.experiment.seed, k));

    std::vector<std::vector<TrialSeries>> results(static_cast<std::size_t>(trials));
    unsigned workers = config.experiment.threads != 0 ? config.experiment.threads : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(trials));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int k = next++; k < trials; k = next++) {
            try {
                results[static_cast<std::size_t>(k)] =
                    run_trial(config, graph, sensors, runs, report.trial_seeds[static_cast<std::size_t>(k)]);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    const int duration = config.targets.duration;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        SummaryRow summary{runs[r].label(), runs[r].steps, config.sensors.detection_probability, config.sensors.clutter_rate,
                           0.0, 0.0};
        for (int t = 1; t <= duration; ++t) {
            const auto ti = static_cast<std::size_t>(t - 1);
            TimeRow row{t, runs[r].label(), runs[r].steps, 0.0, 0.0, 0.0, 0.0};
            for (const auto& trial : results) {
                row.mean_ospa += trial[r].ospa[ti];
                row.mean_card_est += trial[r].card_est[ti];
                row.mean_card_error += trial[r].card_error[ti];
                row.true_card += trial[r].true_card[ti];
            }
            row.mean_ospa /= trials;
            row.mean_card_est /= trials;
            row.mean_card_error /= trials;
            row.true_card /= trials;
            summary.mean_ospa += row.mean_ospa / duration;
            summary.mean_card_error += row.mean_card_error / duration;
            report.rows.push_back(std::move(row));
        }
        report.summary.push_back(std::move(summary));
    }
    return report;
}

ExperimentReport run_experiment(const ScenarioConfig& config) { return run_experiment(config, run_grid(config.fusion)); }

std::vector<SummaryRow> run_clutter_sweep(const ScenarioConfig& config, const std::vector<RunSpec>& runs,
                                          const std::vector<double>& clutter_rates) {
    std::vector<SummaryRow> rows;
    for (double rate : clutter_rates) {
        ScenarioConfig c = config;
        c.sensors.clutter_rate = rate;
        const ExperimentReport report = run_experiment(c, runs);
        rows.insert(rows.end(), report.summary.begin(), report.summary.end());
    }
    return rows;
}

std::string time_series_csv(const std::vector<TimeRow>& rows) {
    std::string out = "time,rule,L,mean_ospa,mean_card_est,true_card\n";
    for (const auto& r : rows)
        out += std::to_string(r.time) + ',' + r.rule + ',' + std::to_string(r.steps) + ',' + format_number(r.mean_ospa) +
               ',' + format_number(r.mean_card_est) + ',' + format_number(r.true_card) + '\n';
    return out;
}

std::string clutter_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "clutter_rate,rule,L,mean_ospa,mean_card_error\n";
    for (const auto& r : rows)
        out += format_number(r.clutter_rate) + ',' + r.rule + ',' + std::to_string(r.steps) + ',' +
               format_number(r.mean_ospa) + ',' + format_number(r.mean_card_error) + '\n';
    return out;
}

void emit_report(const ExperimentReport& report, const ScenarioConfig& config, const std::filesystem::path& out_dir) {
    prepare_dir(out_dir);
    const std::string series = time_series_csv(report.rows);
    write_file(out_dir / "ospa_vs_time.csv", series);
    write_file(out_dir / "cardinality_vs_time.csv", series);
    std::string summary = "rule,L,detection_probability,clutter_rate,mean_ospa,mean_card_error\n";
    for (const auto& s : report.summary)
        summary += s.rule + ',' + std::to_string(s.steps) + ',' + format_number(s.detection_probability) + ',' +
                   format_number(s.clutter_rate) + ',' + format_number(s.mean_ospa) + ',' +
                   format_number(s.mean_card_error) + '\n';
    write_file(out_dir / "summary.csv", summary);
    write_file(out_dir / "manifest.json", manifest(config, report.trial_seeds).dump(2) + "\n");
}

void emit_sweep(const std::vector<SummaryRow>& rows, const ScenarioConfig& config, const std::filesystem::path& out_dir) {
    prepare_dir(out_dir);
    write_file(out_dir / "ospa_vs_clutter.csv", clutter_csv(rows));
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < config.experiment.trials; ++k) seeds.push_back(trial_seed(config.experiment.seed, k));
    nlohmann::json j = manifest(config, seeds);
    j["clutter_sweep"] = config.experiment.clutter_sweep;
    write_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace rfsfuse
