#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cognn/core.hpp"

namespace cognn {

/// Wide multi-agent series: one row per time step, agent-major columns
/// (agent 0 features, agent 1 features, ...).
struct SeriesTable {
    Matrix values;
    std::size_t agents = 0;
    std::size_t features = 0;

    std::size_t length() const noexcept { return values.rows(); }

    /// Rows [start, start + len) as a clip.
    ClipBatch clip(std::size_t start, std::size_t len) const;
};

enum class MissingPolicy { Reject, ForwardFill };

struct CsvOptions {
    bool has_header = false;
    MissingPolicy missing = MissingPolicy::Reject;
};

SeriesTable load_csv_series(const std::filesystem::path& path, std::size_t agents,
                            std::size_t features, const CsvOptions& options = {});
SeriesTable parse_csv_series(const std::string& text, std::size_t agents, std::size_t features,
                             const CsvOptions& options = {});

/// Writes the table with full round-trip precision (17 significant digits).
void write_csv_series(const std::filesystem::path& path, const SeriesTable& table);

struct WindowPair {
    ClipBatch input;
    ClipBatch target;
};

/// Stride-1 windows: input rows [w, w+delta), target rows [w+delta, w+2delta).
std::vector<WindowPair> sliding_windows(const SeriesTable& table, std::size_t delta);
std::size_t window_count(std::size_t length, std::size_t delta) noexcept;

enum class ZScoreMode { Global, PerColumn };

struct ZScoreStats {
    ZScoreMode mode = ZScoreMode::Global;
    std::vector<double> mean;
    std::vector<double> stddev;
    /// Columns passed through unscaled because their variance is zero.
    std::vector<bool> constant;

    void transform(SeriesTable& table) const;
    void inverse(SeriesTable& table) const;
    /// Column of a clip entry is agent * features + feature.
    void transform(ClipBatch& clip) const;
    void inverse(ClipBatch& clip) const;
    bool any_constant() const noexcept;
};

std::pair<SeriesTable, ZScoreStats> zscore_fit_transform(const SeriesTable& table,
                                                         ZScoreMode mode);

/// Centers on the global midrange and divides by the global range, so every
/// difference between two entries lies in [-1, 1].
std::pair<SeriesTable, ZScoreStats> range_fit_transform(const SeriesTable& table);

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;
    /// Mean per-frame Euclidean distance in feature space.
    double euclid = 0.0;
    std::vector<double> mse_per_horizon;
    std::vector<double> mae_per_horizon;
    std::size_t count = 0;
};

/// Streaming accumulator behind metrics().
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(double mape_floor = 1e-3) : mape_floor_(mape_floor) {}

    void add(const ClipBatch& pred, const ClipBatch& truth);
    MetricsReport report() const;
    void reset();

private:
    double mape_floor_;
    std::size_t window_ = 0;
    std::size_t entries_ = 0;
    std::size_t frames_ = 0;
    double sq_ = 0.0, abs_ = 0.0, pct_ = 0.0, euclid_ = 0.0;
    std::vector<double> sq_h_, abs_h_;
    std::vector<std::size_t> count_h_;
};

MetricsReport metrics(std::span<const ClipBatch> pred, std::span<const ClipBatch> truth,
                      double mape_floor = 1e-3);

/// printf("%.9g"), the format of every numeric CLI output.
std::string format_number(double v);

}  // namespace cognn
