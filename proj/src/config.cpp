#include "cognn/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cognn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
    throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* first = v.data();
    if (!v.empty() && v[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        bad_value(key, v, "a non-negative integer");
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.has(key))
            throw ConfigError("config key '" + key + "' repeated at line " + std::to_string(lineno));
        cfg.entries_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_double(key, it->second);
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : static_cast<std::size_t>(parse_u64(key, it->second));
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_u64(key, it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
}

std::vector<double> KeyValueConfig::get_list(const std::string& key,
                                             const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) bad_value(key, it->second, "a comma-separated list");
    return out;
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys{
        {"eta", "learning rate in (0, 1) [0.05]"},
        {"num_agents", "agents N [20]"},
        {"window", "clip length delta [10]"},
        {"feature_dim", "features per agent d [2]"},
        {"predictor_kind", "linear_ar | temporal_conv [linear_ar]"},
        {"ar_order", "difference order D [10]"},
        {"hidden_dim", "conv channels [64]"},
        {"kernel_size", "conv kernel width, odd [3]"},
        {"num_copus", "stacked units K [2]"},
        {"grad_clip", "per-element gradient clamp [10]"},
        {"loss_scale", "bounded loss scale for the graph update [1]"},
        {"seed", "seed for parameters and simulation [0]"},
        {"graph_mode", "learned | frozen_uniform | e2e [learned]"},
        {"theta_grad", "weighted_sum | per_pair_sweep [weighted_sum]"},
        {"spring_k", "spring constant [0.1]"},
        {"dt", "integrator step [0.001]"},
        {"sample_every", "integrator steps per frame [100]"},
        {"box_half", "half-width of the reflecting box [5]"},
        {"init_pos_half", "initial positions ~ U(-a, a) [1]"},
        {"init_vel_std", "initial velocities ~ N(0, s^2) [0.5]"},
        {"frame_scale", "emitted positions are multiplied by this [50]"},
        {"num_rewirings", "segments per run [20]"},
        {"frames_per_segment", "frames between rewirings [250]"},
        {"num_runs", "independent runs written by simulate [10]"},
        {"edge_prob", "edge probability at rewiring [0.2]"},
        {"source", "simulate | csv [simulate]"},
        {"csv_path", "input series for source = csv"},
        {"csv_header", "first csv line is a header [false]"},
        {"csv_missing", "reject | forward_fill [reject]"},
        {"normalize", "none | zscore_global | zscore_per_column | range [range]"},
        {"baseline", "none | zerov [none]"},
        {"run_index", "simulated run used by run (seed + run_index) [0]"},
        {"max_steps", "online steps cap [5000]"},
        {"snapshot_every", "graph snapshot cadence in steps [100]"},
        {"regret_every", "regret curve cadence in steps [100]"},
        {"final_window", "trailing steps in the final-window metric [500]"},
        {"replay", "also score the stream with the final parameters [false]"},
        {"score_graph", "score the first unit's graph per segment [true]"},
        {"score_after", "minimum steps into a segment before scoring [200]"},
        {"mape_floor", "denominator floor for MAPE [0.001]"},
        {"eta_grid", "comma-separated eta values for sweep"},
        {"copus_grid", "comma-separated unit counts for sweep"},
        {"sweep_runs", "runs averaged per grid point [1]"},
        {"snapshots", "graph snapshot csv for graph-score"},
        {"truth_dir", "directory of adjacency_XX.csv for graph-score"},
    };
    return keys;
}

std::string to_string(Normalization n) {
    switch (n) {
        case Normalization::None: return "none";
        case Normalization::ZScoreGlobal: return "zscore_global";
        case Normalization::ZScorePerColumn: return "zscore_per_column";
        case Normalization::Range: return "range";
    }
    return "none";
}

ExperimentConfig experiment_from(const KeyValueConfig& kv) {
    std::set<std::string> known;
    for (const auto& [k, _] : config_keys()) known.insert(k);
    for (const auto& [k, _] : kv.entries())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

    auto enum_value = [&](const std::string& key, auto parse, auto fallback) {
        if (!kv.has(key)) return fallback;
        try {
            return parse(kv.get_string(key, ""));
        } catch (const Error& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    };

    ExperimentConfig c;
    EngineConfig& e = c.engine;
    e.eta = kv.get_double("eta", e.eta);
    e.num_agents = kv.get_size("num_agents", e.num_agents);
    e.window = kv.get_size("window", e.window);
    e.feature_dim = kv.get_size("feature_dim", e.feature_dim);
    e.predictor_kind = enum_value("predictor_kind", parse_predictor_kind, e.predictor_kind);
    e.ar_order = kv.get_size("ar_order", e.ar_order);
    e.hidden_dim = kv.get_size("hidden_dim", e.hidden_dim);
    e.kernel_size = kv.get_size("kernel_size", e.kernel_size);
    e.num_copus = kv.get_size("num_copus", e.num_copus);
    e.grad_clip = kv.get_double("grad_clip", e.grad_clip);
    e.loss_scale = kv.get_double("loss_scale", e.loss_scale);
    e.seed = kv.get_u64("seed", e.seed);
    e.graph_mode = enum_value("graph_mode", parse_graph_mode, e.graph_mode);
    e.theta_grad = enum_value("theta_grad", parse_theta_grad_mode, e.theta_grad);
    e.validate();

    SpringParams& s = c.spring;
    s.agents = e.num_agents;
    s.spring_k = kv.get_double("spring_k", s.spring_k);
    s.dt = kv.get_double("dt", s.dt);
    s.sample_every = kv.get_size("sample_every", s.sample_every);
    s.box_half = kv.get_double("box_half", s.box_half);
    s.init_pos_half = kv.get_double("init_pos_half", s.init_pos_half);
    s.init_vel_std = kv.get_double("init_vel_std", s.init_vel_std);
    s.frame_scale = kv.get_double("frame_scale", s.frame_scale);
    s.validate();

    SimSchedule& sc = c.schedule;
    sc.num_rewirings = kv.get_size("num_rewirings", sc.num_rewirings);
    sc.frames_per_segment = kv.get_size("frames_per_segment", sc.frames_per_segment);
    sc.num_runs = kv.get_size("num_runs", sc.num_runs);
    sc.edge_prob = kv.get_double("edge_prob", sc.edge_prob);
    sc.validate();

    RunOptions& r = c.run;
    const std::string source = kv.get_string("source", "simulate");
    if (source == "simulate") r.source = DataSource::Simulate;
    else if (source == "csv") r.source = DataSource::Csv;
    else bad_value("source", source, "simulate or csv");
    r.csv_path = kv.get_string("csv_path", "");
    if (r.source == DataSource::Csv && r.csv_path.empty())
        throw ConfigError("config key 'csv_path' is required when source = csv");
    r.csv_header = kv.get_bool("csv_header", r.csv_header);
    const std::string missing = kv.get_string("csv_missing", "reject");
    if (missing == "reject") r.csv_forward_fill = false;
    else if (missing == "forward_fill") r.csv_forward_fill = true;
    else bad_value("csv_missing", missing, "reject or forward_fill");
    const std::string norm = kv.get_string("normalize", to_string(r.normalize));
    if (norm == "none") r.normalize = Normalization::None;
    else if (norm == "zscore_global") r.normalize = Normalization::ZScoreGlobal;
    else if (norm == "zscore_per_column") r.normalize = Normalization::ZScorePerColumn;
    else if (norm == "range") r.normalize = Normalization::Range;
    else bad_value("normalize", norm, "none, zscore_global, zscore_per_column or range");
    const std::string baseline = kv.get_string("baseline", "none");
    if (baseline == "none") r.baseline = Baseline::None;
    else if (baseline == "zerov") r.baseline = Baseline::ZeroV;
    else bad_value("baseline", baseline, "none or zerov");
    r.run_index = kv.get_size("run_index", r.run_index);
    r.max_steps = kv.get_size("max_steps", r.max_steps);
    r.snapshot_every = kv.get_size("snapshot_every", r.snapshot_every);
    r.regret_every = kv.get_size("regret_every", r.regret_every);
    r.final_window = kv.get_size("final_window", r.final_window);
    r.replay = kv.get_bool("replay", r.replay);
    r.score_graph = kv.get_bool("score_graph", r.score_graph);
    r.score_after = kv.get_size("score_after", r.score_after);
    r.mape_floor = kv.get_double("mape_floor", r.mape_floor);
    if (r.max_steps == 0) throw ConfigError("config key 'max_steps' must be positive");
    if (r.snapshot_every == 0) throw ConfigError("config key 'snapshot_every' must be positive");
    if (r.regret_every == 0) throw ConfigError("config key 'regret_every' must be positive");
    if (r.final_window == 0) throw ConfigError("config key 'final_window' must be positive");
    if (!(r.mape_floor > 0.0)) throw ConfigError("config key 'mape_floor' must be positive");

    SweepOptions& w = c.sweep;
    w.eta_grid = kv.get_list("eta_grid", w.eta_grid);
    w.copus_grid = kv.get_list("copus_grid", w.copus_grid);
    w.runs = kv.get_size("sweep_runs", w.runs);
    for (double v : w.eta_grid)
        if (!(v > 0.0 && v < 1.0)) throw ConfigError("config key 'eta_grid': values must lie in (0, 1)");
    for (double v : w.copus_grid)
        if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw ConfigError("config key 'copus_grid': values must be positive integers");
    if (w.runs == 0) throw ConfigError("config key 'sweep_runs' must be positive");

    c.score.snapshots = kv.get_string("snapshots", "");
    c.score.truth_dir = kv.get_string("truth_dir", "");
    return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    return experiment_from(KeyValueConfig::load(path));
}

}  // namespace cognn
