#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cognn/core.hpp"
#include "cognn/simulator.hpp"

namespace cognn {

/// Flat `key = value` text, one pair per line, `#` starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

private:
    std::map<std::string, std::string> entries_;
};

enum class DataSource { Simulate, Csv };
enum class Normalization { None, ZScoreGlobal, ZScorePerColumn, Range };
enum class Baseline { None, ZeroV };

struct RunOptions {
    DataSource source = DataSource::Simulate;
    std::string csv_path;
    bool csv_header = false;
    bool csv_forward_fill = false;
    Normalization normalize = Normalization::Range;
    Baseline baseline = Baseline::None;
    std::size_t run_index = 0;
    std::size_t max_steps = 5000;
    std::size_t snapshot_every = 100;
    std::size_t regret_every = 100;
    /// Steps at the end of the stream averaged into the final-window metric.
    std::size_t final_window = 500;
    bool replay = false;
    /// Score the first unit's graph against the simulated adjacency at the
    /// end of each segment (simulate source only).
    bool score_graph = true;
    std::size_t score_after = 200;
    double mape_floor = 1e-3;
};

struct SweepOptions {
    std::vector<double> eta_grid{0.0075, 0.01, 0.05, 0.075, 0.125};
    std::vector<double> copus_grid{1, 2, 3, 4};
    std::size_t runs = 1;
};

struct ScoreOptions {
    std::string snapshots;
    std::string truth_dir;
};

struct ExperimentConfig {
    EngineConfig engine;
    SpringParams spring;
    SimSchedule schedule;
    RunOptions run;
    SweepOptions sweep;
    ScoreOptions score;
};

/// Every key the experiment config understands, for --help.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Unknown keys and malformed values raise ConfigError naming the key.
ExperimentConfig experiment_from(const KeyValueConfig& kv);
ExperimentConfig load_experiment(const std::filesystem::path& path);

std::string to_string(Normalization n);

}  // namespace cognn
