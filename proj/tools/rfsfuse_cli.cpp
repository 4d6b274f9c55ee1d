#include "rfsfuse/config.hpp"
#include "rfsfuse/experiment.hpp"
#include "rfsfuse/fov_demo.hpp"
#include "rfsfuse/invariants.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace rfsfuse;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::vector<std::string> rules;
    std::vector<int> steps;
    std::optional<double> pd;
    std::vector<double> clutter_rates;
    std::string out = "results";
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "Scenario YAML file (built-in defaults when omitted)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    cmd->add_option("--rule", o.rules, "Rules to run: MIL, MWIG, None, MIL-opt, MWIG-opt (repeatable)");
    cmd->add_option("--consensus-steps", o.steps, "Consensus iterations L (repeatable)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--pd", o.pd, "Detection probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--clutter-rate", o.clutter_rates, "Clutter rate (repeatable; the sweep grid for 'sweep')")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
}

ScenarioConfig resolve(const CommonOptions& o, bool sweep) {
    ScenarioConfig c = o.config_path.empty() ? ScenarioConfig::defaults() : load_config(o.config_path);
    if (o.seed) c.experiment.seed = *o.seed;
    if (o.trials) c.experiment.trials = *o.trials;
    if (o.pd) c.sensors.detection_probability = *o.pd;
    if (o.threads) c.experiment.threads = *o.threads;
    if (!o.steps.empty()) c.fusion.consensus_steps = o.steps;
    if (!o.clutter_rates.empty()) {
        if (sweep) {
            c.experiment.clutter_sweep = o.clutter_rates;
        } else {
            if (o.clutter_rates.size() != 1) throw ConfigError("--clutter-rate takes one value for 'run'");
            c.sensors.clutter_rate = o.clutter_rates.front();
        }
    }
    if (!o.rules.empty()) {
        c.fusion.rules.clear();
        c.fusion.centralized.clear();
        for (std::string name : o.rules) {
            const bool centralized = name.size() > 4 && name.ends_with("-opt");
            if (centralized) name.resize(name.size() - 4);
            const FusionRule rule = parse_fusion_rule(name);
            if (centralized) {
                if (rule == FusionRule::None) throw ConfigError("None has no centralized mode");
                c.fusion.centralized.push_back(rule);
            } else {
                c.fusion.rules.push_back(rule);
            }
        }
    }
    validate(c);
    return c;
}

void print_summary(const std::vector<SummaryRow>& rows) {
    std::printf("%-10s %3s %6s %8s %10s %14s\n", "rule", "L", "P_d", "clutter", "mean_ospa", "mean_card_err");
    for (const auto& s : rows)
        std::printf("%-10s %3d %6.2f %8.2f %10.3f %14.3f\n", s.rule.c_str(), s.steps, s.detection_probability, s.clutter_rate,
                    s.mean_ospa, s.mean_card_error);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed multi-target tracking with random finite set fusion"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "Monte Carlo experiment over the fusion rules");
    add_common(run, run_opts);

    CommonOptions sweep_opts;
    CLI::App* sweep = app.add_subcommand("sweep", "Time-averaged OSPA over a grid of clutter rates");
    add_common(sweep, sweep_opts);

    FovDemoParams fov;
    std::string fov_out;
    CLI::App* fov_cmd = app.add_subcommand("fov-demo", "Fused PHD mass per region for two nodes with different fields of view");
    fov_cmd->add_option("--offset", fov.offset, "Distance between the shared and the exclusive peaks")->check(CLI::PositiveNumber);
    fov_cmd->add_option("--sigma", fov.sigma, "Peak standard deviation")->check(CLI::PositiveNumber);
    fov_cmd->add_option("--weight", fov.weight1, "Fusion weight of node 1 (node 2 gets 1 - weight)")->check(CLI::Range(0.0, 1.0));
    fov_cmd->add_option("--out", fov_out, "Write fov_demo.csv into this directory");

    std::uint64_t validate_seed = 1;
    std::size_t validate_instances = 200;
    std::string validate_config;
    CLI::App* val = app.add_subcommand("validate", "Invariant suite over random instances");
    val->add_option("--seed", validate_seed, "Seed of the random instances");
    val->add_option("--trials", validate_instances, "Random instances per invariant")->check(CLI::PositiveNumber);
    val->add_option("--config", validate_config, "Also validate this scenario file")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const ScenarioConfig c = resolve(run_opts, false);
            const ExperimentReport report = run_experiment(c);
            emit_report(report, c, run_opts.out);
            print_summary(report.summary);
            std::cout << "wrote " << run_opts.out << '\n';
        } else if (sweep->parsed()) {
            const ScenarioConfig c = resolve(sweep_opts, true);
            const std::vector<SummaryRow> rows = run_clutter_sweep(c, run_grid(c.fusion), c.experiment.clutter_sweep);
            emit_sweep(rows, c, sweep_opts.out);
            print_summary(rows);
            std::cout << "wrote " << sweep_opts.out << '\n';
        } else if (fov_cmd->parsed()) {
            fov.weight2 = 1.0 - fov.weight1;
            const std::string csv = fov_demo_csv(fov_demo(fov));
            std::cout << csv;
            if (!fov_out.empty()) {
                std::filesystem::create_directories(fov_out);
                std::ofstream(std::filesystem::path(fov_out) / "fov_demo.csv") << csv;
            }
        } else if (val->parsed()) {
            bool ok = true;
            if (!validate_config.empty()) {
                (void)load_config(validate_config);
                std::cout << "config " << validate_config << ": ok\n";
            }
            for (const auto& check : run_invariant_suite(validate_seed, validate_instances)) {
                std::cout << (check.passed() ? "PASS " : "FAIL ") << check.name << " (" << check.instances << " instances";
                if (!check.passed()) std::cout << ", " << check.failures << " failed; " << check.first_failure;
                std::cout << ")\n";
                ok = ok && check.passed();
            }
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
