#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cognn/config.hpp"
#include "cognn/dataio.hpp"
#include "cognn/graph_score.hpp"

namespace cognn {

/// Raw series, its normalized copy and the transform between them.
struct PreparedStream {
    SeriesTable raw;
    SeriesTable normalized;
    ZScoreStats stats;
    /// Ground-truth adjacency per segment (simulate source only).
    std::vector<Matrix> adjacencies;
};

PreparedStream prepare_stream(const ExperimentConfig& config);

struct RegretPoint {
    std::size_t step = 0;
    double mean_regret = 0.0;
    double bound = 0.0;
};

struct SegmentScore {
    std::size_t segment = 0;
    std::size_t step = 0;
    GraphScore score;
};

struct RunResult {
    std::size_t steps = 0;
    /// Raw-unit metrics over every step, and over the trailing final_window steps.
    MetricsReport metrics;
    MetricsReport final_window;
    bool has_regret = false;
    std::vector<RegretPoint> regret_curve;
    double replay_regret = 0.0;
    bool has_replay = false;
    std::vector<SegmentScore> segment_scores;
    /// Mean over scored segments; NaN when none was scored.
    double mean_auc = 0.0;
    double mean_topk = 0.0;
};

/// The online loop behind `run`. With `out_dir` set it writes metrics.csv,
/// regret.csv, graph_copu<i>.csv, graph_score.csv, truth/ and summary.txt.
RunResult run_experiment(const ExperimentConfig& config,
                         const std::optional<std::filesystem::path>& out_dir);

/// Key = value lines of the final summary.
std::string format_summary(const ExperimentConfig& config, const RunResult& result);

void cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream& log);
RunResult cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream& log);

enum class SweepKind { Eta, NumCopus };
SweepKind parse_sweep_kind(const std::string& s);

void cmd_sweep(const ExperimentConfig& config, SweepKind kind, const std::filesystem::path& out_dir,
               std::ostream& log);
void cmd_graph_score(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                     std::ostream& log);

}  // namespace cognn
