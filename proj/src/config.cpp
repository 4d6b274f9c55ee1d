#include "rfsfuse/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace rfsfuse {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
        const YAML::Mark mark = node.Mark();
        std::ostringstream os;
        os << source_;
        if (!mark.is_null()) os << ':' << mark.line + 1 << ':' << mark.column + 1;
        os << ": " << message;
        throw ConfigError(os.str());
    }

    void require_map(const YAML::Node& node, const std::string& what) const {
        if (!node.IsMap()) fail(node, what + " must be a mapping");
    }

    void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> allowed) const {
        require_map(node, section);
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!keys.contains(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
        }
    }

    template <typename T>
    void read(const YAML::Node& parent, const char* key, T& out) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string("bad value for '") + key + "'");
        }
    }

    void read_rules(const YAML::Node& parent, const char* key, std::vector<FusionRule>& out) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        if (!node.IsSequence()) fail(node, std::string("'") + key + "' must be a list of rule names");
        out.clear();
        for (const auto& item : node) {
            try {
                out.push_back(parse_fusion_rule(item.as<std::string>()));
            } catch (const std::exception& e) {
                fail(item, e.what());
            }
        }
    }

    void read_pair(const YAML::Node& parent, const char* key, double& lo, double& hi) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        std::vector<double> v;
        read(parent, key, v);
        if (v.size() != 2 || v[0] > v[1]) fail(node, std::string("'") + key + "' must be [low, high]");
        lo = v[0];
        hi = v[1];
    }

    void read_diagonal(const YAML::Node& parent, const char* key, Matrix& out) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        std::vector<double> v;
        read(parent, key, v);
        if (v.size() != kStateDim) fail(node, std::string("'") + key + "' must list 4 variances");
        for (double x : v)
            if (!(x >= 0.0)) fail(node, std::string("'") + key + "' must be nonnegative");
        out = Matrix::Zero(kStateDim, kStateDim);
        for (int i = 0; i < kStateDim; ++i) out(i, i) = v[static_cast<std::size_t>(i)];
    }

    void check(const YAML::Node& parent, const char* key, bool ok, const std::string& message) const {
        if (!ok) fail(parent[key] ? parent[key] : parent, std::string("'") + key + "' " + message);
    }

private:
    std::string source_;
};

void parse_region(const Reader& r, const YAML::Node& n, Region& region) {
    r.check_keys(n, "region", {"x_min", "x_max", "y_min", "y_max"});
    r.read(n, "x_min", region.x_min);
    r.read(n, "x_max", region.x_max);
    r.read(n, "y_min", region.y_min);
    r.read(n, "y_max", region.y_max);
    r.check(n, "x_max", region.x_max > region.x_min, "must exceed x_min");
    r.check(n, "y_max", region.y_max > region.y_min, "must exceed y_min");
}

void parse_sensors(const Reader& r, const YAML::Node& n, SensorsConfig& s) {
    r.check_keys(n, "sensors", {"range_noise_var", "bearing_noise_var_deg2", "detection_probability", "clutter_rate"});
    r.read(n, "range_noise_var", s.range_noise_var);
    r.read(n, "bearing_noise_var_deg2", s.bearing_noise_var_deg2);
    r.read(n, "detection_probability", s.detection_probability);
    r.read(n, "clutter_rate", s.clutter_rate);
    r.check(n, "range_noise_var", s.range_noise_var > 0.0, "must be > 0");
    r.check(n, "bearing_noise_var_deg2", s.bearing_noise_var_deg2 > 0.0, "must be > 0");
    r.check(n, "detection_probability", s.detection_probability >= 0.0 && s.detection_probability <= 1.0,
            "must be in [0, 1]");
    r.check(n, "clutter_rate", s.clutter_rate >= 0.0, "must be >= 0");
}

void parse_network(const Reader& r, const YAML::Node& n, NetworkConfig& net) {
    r.check_keys(n, "network", {"columns", "rows", "jitter", "link_range", "seed", "positions", "edges"});
    r.read(n, "columns", net.columns);
    r.read(n, "rows", net.rows);
    r.read(n, "jitter", net.jitter);
    r.read(n, "link_range", net.link_range);
    r.read(n, "seed", net.seed);
    r.check(n, "jitter", net.jitter >= 0.0, "must be >= 0");
    r.check(n, "link_range", net.link_range > 0.0, "must be > 0");
    if (const YAML::Node p = n["positions"]) {
        std::vector<std::vector<double>> raw;
        r.read(n, "positions", raw);
        net.positions.clear();
        for (const auto& xy : raw) {
            if (xy.size() != 2) r.fail(p, "each position must be [x, y]");
            net.positions.emplace_back(xy[0], xy[1]);
        }
    }
    if (const YAML::Node e = n["edges"]) {
        std::vector<std::vector<std::size_t>> raw;
        r.read(n, "edges", raw);
        net.edges.clear();
        for (const auto& ab : raw) {
            if (ab.size() != 2) r.fail(e, "each edge must be [a, b]");
            net.edges.emplace_back(ab[0], ab[1]);
        }
    }
    if (net.positions.empty()) r.check(n, "columns", !net.columns.empty() && !net.rows.empty(), "and 'rows' must be non-empty");
}

void parse_targets(const Reader& r, const YAML::Node& n, TruthConfig& t) {
    r.check_keys(n, "targets", {"duration", "birth_times", "death_times", "initial_states", "initial_position_range",
                                "speed_range", "sampling_interval", "process_noise", "max_redraws"});
    r.read(n, "duration", t.duration);
    r.check(n, "duration", t.duration >= 1, "must be >= 1");
    std::vector<int> births;
    for (const auto& s : t.targets) births.push_back(s.birth_time);
    r.read(n, "birth_times", births);
    std::vector<int> deaths;
    r.read(n, "death_times", deaths);
    std::vector<std::vector<double>> initial;
    r.read(n, "initial_states", initial);
    r.check(n, "death_times", deaths.empty() || deaths.size() == births.size(), "must match birth_times in length");
    r.check(n, "initial_states", initial.empty() || initial.size() == births.size(),
            "must match birth_times in length");
    t.targets.clear();
    for (std::size_t k = 0; k < births.size(); ++k) {
        TargetSpec spec;
        spec.birth_time = births[k];
        if (!deaths.empty()) spec.death_time = deaths[k];
        if (!initial.empty()) {
            r.check(n, "initial_states", initial[k].size() == kStateDim, "entries must be [x, vx, y, vy]");
            spec.initial_state = Vector::Map(initial[k].data(), kStateDim);
        }
        const int death = spec.death_time.value_or(t.duration);
        r.check(n, "birth_times", spec.birth_time >= 0 && spec.birth_time <= death && death <= t.duration,
                "entries must satisfy 0 <= birth <= death <= duration");
        t.targets.push_back(std::move(spec));
    }
    r.read_pair(n, "initial_position_range", t.initial_min, t.initial_max);
    r.read_pair(n, "speed_range", t.speed_min, t.speed_max);
    double dt = t.motion.dt;
    r.read(n, "sampling_interval", dt);
    r.check(n, "sampling_interval", dt > 0.0, "must be > 0");
    Matrix q = t.motion.process_noise;
    r.read_diagonal(n, "process_noise", q);
    t.motion = MotionModel::constant_velocity(dt, q(0, 0), q(1, 1), t.motion.survival);
    t.motion.process_noise = q;
    r.read(n, "max_redraws", t.max_redraws);
    r.check(n, "max_redraws", t.max_redraws >= 1, "must be >= 1");
}

void parse_filter(const Reader& r, const YAML::Node& n, FilterConfig& f) {
    r.check_keys(n, "filter", {"sampling_interval", "process_noise", "survival_probability", "max_targets",
                               "max_components", "prune_threshold", "merge_threshold", "birth_weight",
                               "birth_velocity_std", "birth_max_mass", "birth_max_components", "gate"});
    double dt = f.motion.dt;
    double ps = f.motion.survival;
    Matrix q = f.motion.process_noise;
    r.read(n, "sampling_interval", dt);
    r.read(n, "survival_probability", ps);
    r.read_diagonal(n, "process_noise", q);
    r.check(n, "sampling_interval", dt > 0.0, "must be > 0");
    r.check(n, "survival_probability", ps >= 0.0 && ps <= 1.0, "must be in [0, 1]");
    f.motion = MotionModel::constant_velocity(dt, q(0, 0), q(1, 1), ps);
    f.motion.process_noise = q;

    r.read(n, "max_targets", f.n_max);
    r.check(n, "max_targets", f.n_max >= 1, "must be >= 1");
    r.read(n, "max_components", f.reduction.max_components);
    r.check(n, "max_components", f.reduction.max_components >= 1, "must be >= 1");
    r.read(n, "prune_threshold", f.reduction.prune_threshold);
    r.check(n, "prune_threshold", f.reduction.prune_threshold > 0.0, "must be > 0");
    r.read(n, "merge_threshold", f.reduction.merge_threshold);
    r.check(n, "merge_threshold", f.reduction.merge_threshold > 0.0, "must be > 0");
    r.read(n, "birth_weight", f.birth.weight);
    r.check(n, "birth_weight", f.birth.weight >= 0.0, "must be >= 0");
    r.read(n, "birth_velocity_std", f.birth.velocity_std);
    r.check(n, "birth_velocity_std", f.birth.velocity_std > 0.0, "must be > 0");
    r.read(n, "birth_max_mass", f.birth.max_mass);
    r.check(n, "birth_max_mass", f.birth.max_mass >= 0.0, "must be >= 0");
    r.read(n, "birth_max_components", f.birth.max_components);
    r.read(n, "gate", f.update.gate);
    r.check(n, "gate", f.update.gate > 0.0, "must be > 0");
}

void parse_fusion(const Reader& r, const YAML::Node& n, FusionConfig& f) {
    r.check_keys(n, "fusion", {"rules", "consensus_steps", "centralized", "mwig_pair_gate", "mwig_max_components"});
    r.read_rules(n, "rules", f.rules);
    r.read_rules(n, "centralized", f.centralized);
    r.read(n, "consensus_steps", f.consensus_steps);
    for (int l : f.consensus_steps) r.check(n, "consensus_steps", l >= 0, "entries must be >= 0");
    for (FusionRule rule : f.centralized) r.check(n, "centralized", rule != FusionRule::None, "cannot contain None");
    r.read(n, "mwig_pair_gate", f.mwig.pair_gate);
    r.check(n, "mwig_pair_gate", f.mwig.pair_gate > 0.0, "must be > 0");
    r.read(n, "mwig_max_components", f.mwig.max_intermediate_components);
    r.check(n, "mwig_max_components", f.mwig.max_intermediate_components >= 1, "must be >= 1");
}

void parse_experiment(const Reader& r, const YAML::Node& n, ExperimentConfig& e) {
    r.check_keys(n, "experiment", {"trials", "seed", "ospa_order", "ospa_cutoff", "clutter_sweep", "threads"});
    r.read(n, "trials", e.trials);
    r.check(n, "trials", e.trials >= 1, "must be >= 1");
    r.read(n, "seed", e.seed);
    r.read(n, "ospa_order", e.ospa.order);
    r.check(n, "ospa_order", e.ospa.order >= 1.0, "must be >= 1");
    r.read(n, "ospa_cutoff", e.ospa.cutoff);
    r.check(n, "ospa_cutoff", e.ospa.cutoff > 0.0, "must be > 0");
    r.read(n, "clutter_sweep", e.clutter_sweep);
    for (double c : e.clutter_sweep) r.check(n, "clutter_sweep", c >= 0.0, "entries must be >= 0");
    r.read(n, "threads", e.threads);
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() { return ScenarioConfig{}; }

NetworkGraph ScenarioConfig::build_network() const {
    if (!network.positions.empty()) {
        if (network.edges.empty()) return NetworkGraph::by_distance(network.positions, network.link_range);
        return NetworkGraph(network.positions, network.edges);
    }
    return NetworkGraph::jittered_grid(network.columns, network.rows, network.jitter, network.link_range, network.seed);
}

std::vector<SensorModel> ScenarioConfig::build_sensors(const NetworkGraph& graph) const {
    std::vector<SensorModel> out;
    for (const auto& p : graph.positions()) {
        SensorModel s;
        s.x = p.x();
        s.y = p.y();
        s.noise = Eigen::Vector2d(sensors.range_noise_var, sensors.bearing_noise_var_deg2 * kDegToRad * kDegToRad).asDiagonal();
        s.detection_probability = sensors.detection_probability;
        s.clutter_rate = sensors.clutter_rate;
        s.region = region;
        out.push_back(s);
    }
    return out;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source_name << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw ConfigError(os.str());
    }
    ScenarioConfig config;
    if (root.IsNull()) return config;
    const Reader r(source_name);
    r.check_keys(root, "top level", {"region", "sensors", "network", "targets", "filter", "fusion", "experiment"});
    if (root["region"]) parse_region(r, root["region"], config.region);
    if (root["sensors"]) parse_sensors(r, root["sensors"], config.sensors);
    if (root["network"]) parse_network(r, root["network"], config.network);
    if (root["targets"]) parse_targets(r, root["targets"], config.targets);
    if (root["filter"]) parse_filter(r, root["filter"], config.filter);
    if (root["fusion"]) parse_fusion(r, root["fusion"], config.fusion);
    if (root["experiment"]) parse_experiment(r, root["experiment"], config.experiment);
    config.targets.region = config.region;
    try {
        validate(config);
    } catch (const ConfigError& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

void validate(const ScenarioConfig& config) {
    NetworkGraph graph = [&] {
        try {
            return config.build_network();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("network: ") + e.what());
        }
    }();
    if (!graph.connected()) throw ConfigError("network: communication graph is not connected");
    if (config.targets.targets.size() > config.filter.n_max)
        throw ConfigError("targets: more targets than filter.max_targets");
}

std::string to_yaml(const ScenarioConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "region" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "x_min" << YAML::Value << c.region.x_min << YAML::Key << "x_max" << YAML::Value << c.region.x_max;
    out << YAML::Key << "y_min" << YAML::Value << c.region.y_min << YAML::Key << "y_max" << YAML::Value << c.region.y_max;
    out << YAML::EndMap;

    out << YAML::Key << "sensors" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "range_noise_var" << YAML::Value << c.sensors.range_noise_var;
    out << YAML::Key << "bearing_noise_var_deg2" << YAML::Value << c.sensors.bearing_noise_var_deg2;
    out << YAML::Key << "detection_probability" << YAML::Value << c.sensors.detection_probability;
    out << YAML::Key << "clutter_rate" << YAML::Value << c.sensors.clutter_rate;
    out << YAML::EndMap;

    out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "columns" << YAML::Value << YAML::Flow << c.network.columns;
    out << YAML::Key << "rows" << YAML::Value << YAML::Flow << c.network.rows;
    out << YAML::Key << "jitter" << YAML::Value << c.network.jitter;
    out << YAML::Key << "link_range" << YAML::Value << c.network.link_range;
    out << YAML::Key << "seed" << YAML::Value << c.network.seed;
    if (!c.network.positions.empty()) {
        out << YAML::Key << "positions" << YAML::Value << YAML::BeginSeq;
        for (const auto& p : c.network.positions) out << YAML::Flow << std::vector<double>{p.x(), p.y()};
        out << YAML::EndSeq;
    }
    if (!c.network.edges.empty()) {
        out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
        for (const auto& [a, b] : c.network.edges) out << YAML::Flow << std::vector<std::size_t>{a, b};
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    const TruthConfig& t = c.targets;
    out << YAML::Key << "targets" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "duration" << YAML::Value << t.duration;
    std::vector<int> births, deaths;
    bool any_death = false, any_initial = false;
    for (const auto& s : t.targets) {
        births.push_back(s.birth_time);
        deaths.push_back(s.death_time.value_or(t.duration));
        any_death = any_death || s.death_time.has_value();
        any_initial = any_initial || s.initial_state.has_value();
    }
    out << YAML::Key << "birth_times" << YAML::Value << YAML::Flow << births;
    if (any_death) out << YAML::Key << "death_times" << YAML::Value << YAML::Flow << deaths;
    if (any_initial) {
        out << YAML::Key << "initial_states" << YAML::Value << YAML::BeginSeq;
        for (const auto& s : t.targets) {
            if (!s.initial_state) throw ConfigError("to_yaml: initial states must be given for all targets or none");
            out << YAML::Flow << std::vector<double>(s.initial_state->data(), s.initial_state->data() + kStateDim);
        }
        out << YAML::EndSeq;
    }
    out << YAML::Key << "initial_position_range" << YAML::Value << YAML::Flow << std::vector<double>{t.initial_min, t.initial_max};
    out << YAML::Key << "speed_range" << YAML::Value << YAML::Flow << std::vector<double>{t.speed_min, t.speed_max};
    out << YAML::Key << "sampling_interval" << YAML::Value << t.motion.dt;
    out << YAML::Key << "process_noise" << YAML::Value << YAML::Flow
        << std::vector<double>{t.motion.process_noise(0, 0), t.motion.process_noise(1, 1), t.motion.process_noise(2, 2),
                               t.motion.process_noise(3, 3)};
    out << YAML::Key << "max_redraws" << YAML::Value << t.max_redraws;
    out << YAML::EndMap;

    const FilterConfig& f = c.filter;
    out << YAML::Key << "filter" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "sampling_interval" << YAML::Value << f.motion.dt;
    out << YAML::Key << "process_noise" << YAML::Value << YAML::Flow
        << std::vector<double>{f.motion.process_noise(0, 0), f.motion.process_noise(1, 1), f.motion.process_noise(2, 2),
                               f.motion.process_noise(3, 3)};
    out << YAML::Key << "survival_probability" << YAML::Value << f.motion.survival;
    out << YAML::Key << "max_targets" << YAML::Value << f.n_max;
    out << YAML::Key << "max_components" << YAML::Value << f.reduction.max_components;
    out << YAML::Key << "prune_threshold" << YAML::Value << f.reduction.prune_threshold;
    out << YAML::Key << "merge_threshold" << YAML::Value << f.reduction.merge_threshold;
    out << YAML::Key << "birth_weight" << YAML::Value << f.birth.weight;
    out << YAML::Key << "birth_velocity_std" << YAML::Value << f.birth.velocity_std;
    out << YAML::Key << "birth_max_mass" << YAML::Value << f.birth.max_mass;
    out << YAML::Key << "birth_max_components" << YAML::Value << f.birth.max_components;
    out << YAML::Key << "gate" << YAML::Value << f.update.gate;
    out << YAML::EndMap;

    auto rule_names = [](const std::vector<FusionRule>& rules) {
        std::vector<std::string> names;
        for (FusionRule r : rules) names.emplace_back(to_string(r));
        return names;
    };
    out << YAML::Key << "fusion" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rules" << YAML::Value << YAML::Flow << rule_names(c.fusion.rules);
    out << YAML::Key << "consensus_steps" << YAML::Value << YAML::Flow << c.fusion.consensus_steps;
    out << YAML::Key << "centralized" << YAML::Value << YAML::Flow << rule_names(c.fusion.centralized);
    out << YAML::Key << "mwig_pair_gate" << YAML::Value << c.fusion.mwig.pair_gate;
    out << YAML::Key << "mwig_max_components" << YAML::Value << c.fusion.mwig.max_intermediate_components;
    out << YAML::EndMap;

    out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "trials" << YAML::Value << c.experiment.trials;
    out << YAML::Key << "seed" << YAML::Value << c.experiment.seed;
    out << YAML::Key << "ospa_order" << YAML::Value << c.experiment.ospa.order;
    out << YAML::Key << "ospa_cutoff" << YAML::Value << c.experiment.ospa.cutoff;
    out << YAML::Key << "clutter_sweep" << YAML::Value << YAML::Flow << c.experiment.clutter_sweep;
    out << YAML::Key << "threads" << YAML::Value << c.experiment.threads;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace rfsfuse
