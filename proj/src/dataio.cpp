#include "cognn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace cognn {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace

ClipBatch SeriesTable::clip(std::size_t start, std::size_t len) const {
    if (start + len > length()) throw DimensionError("series: clip runs past the table end");
    ClipBatch c(agents, len, features, static_cast<std::int64_t>(start));
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t p = 0; p < agents; ++p)
            for (std::size_t f = 0; f < features; ++f)
                c.at(p, t, f) = values(start + t, p * features + f);
    return c;
}

SeriesTable parse_csv_series(const std::string& text, std::size_t agents, std::size_t features,
                             const CsvOptions& options) {
    if (agents == 0 || features == 0) throw DimensionError("csv: agents and features must be positive");
    const std::size_t cols = agents * features;
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::size_t row = 0;
    bool header_pending = options.has_header;
    std::vector<double> last(cols, std::numeric_limits<double>::quiet_NaN());
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        ++row;
        const auto cells = split_row(line);
        if (cells.size() != cols) {
            throw DataError("csv schema: row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(cols) + " (agents*features)");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string& cell = cells[c];
            double v = 0.0;
            if (is_missing(cell)) {
                if (options.missing == MissingPolicy::Reject || !std::isfinite(last[c]))
                    throw DataError("csv: missing value at row " + std::to_string(row) +
                                    ", column " + std::to_string(c + 1));
                v = last[c];
            } else {
                const char* first = cell.data();
                const char* end = cell.data() + cell.size();
                if (*first == '+') ++first;
                auto [ptr, ec] = std::from_chars(first, end, v);
                if (ec != std::errc() || ptr != end || !std::isfinite(v))
                    throw DataError("csv parse: bad cell '" + cell + "' at row " +
                                    std::to_string(row) + ", column " + std::to_string(c + 1));
            }
            last[c] = v;
            values.push_back(v);
        }
    }
    SeriesTable table;
    table.agents = agents;
    table.features = features;
    table.values = Matrix(row, cols, std::move(values));
    return table;
}

SeriesTable load_csv_series(const std::filesystem::path& path, std::size_t agents,
                            std::size_t features, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_series(buf.str(), agents, features, options);
}

void write_csv_series(const std::filesystem::path& path, const SeriesTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[40];
    for (std::size_t r = 0; r < table.values.rows(); ++r) {
        for (std::size_t c = 0; c < table.values.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", table.values(r, c));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::size_t window_count(std::size_t length, std::size_t delta) noexcept {
    return length < 2 * delta ? 0 : length - 2 * delta + 1;
}

std::vector<WindowPair> sliding_windows(const SeriesTable& table, std::size_t delta) {
    if (delta == 0) throw DimensionError("sliding_windows: delta must be positive");
    if (table.length() < 2 * delta)
        throw DataError("sliding_windows: series has " + std::to_string(table.length()) +
                        " rows, at least " + std::to_string(2 * delta) + " required");
    std::vector<WindowPair> out;
    const std::size_t count = window_count(table.length(), delta);
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w)
        out.push_back({table.clip(w, delta), table.clip(w + delta, delta)});
    return out;
}

void ZScoreStats::transform(SeriesTable& table) const {
    for (std::size_t r = 0; r < table.values.rows(); ++r)
        for (std::size_t c = 0; c < table.values.cols(); ++c)
            if (!constant[c]) table.values(r, c) = (table.values(r, c) - mean[c]) / stddev[c];
}

void ZScoreStats::inverse(SeriesTable& table) const {
    for (std::size_t r = 0; r < table.values.rows(); ++r)
        for (std::size_t c = 0; c < table.values.cols(); ++c)
            if (!constant[c]) table.values(r, c) = table.values(r, c) * stddev[c] + mean[c];
}

void ZScoreStats::transform(ClipBatch& clip) const {
    for (std::size_t p = 0; p < clip.agents(); ++p)
        for (std::size_t t = 0; t < clip.window(); ++t)
            for (std::size_t f = 0; f < clip.features(); ++f) {
                const std::size_t c = p * clip.features() + f;
                if (!constant[c]) clip.at(p, t, f) = (clip.at(p, t, f) - mean[c]) / stddev[c];
            }
}

void ZScoreStats::inverse(ClipBatch& clip) const {
    for (std::size_t p = 0; p < clip.agents(); ++p)
        for (std::size_t t = 0; t < clip.window(); ++t)
            for (std::size_t f = 0; f < clip.features(); ++f) {
                const std::size_t c = p * clip.features() + f;
                if (!constant[c]) clip.at(p, t, f) = clip.at(p, t, f) * stddev[c] + mean[c];
            }
}

bool ZScoreStats::any_constant() const noexcept {
    for (bool b : constant)
        if (b) return true;
    return false;
}

std::pair<SeriesTable, ZScoreStats> zscore_fit_transform(const SeriesTable& table,
                                                         ZScoreMode mode) {
    const std::size_t rows = table.values.rows();
    const std::size_t cols = table.values.cols();
    ZScoreStats stats;
    stats.mode = mode;
    stats.mean.assign(cols, 0.0);
    stats.stddev.assign(cols, 1.0);
    stats.constant.assign(cols, false);
    if (rows == 0) return {table, stats};

    auto population_stats = [&](std::size_t c_begin, std::size_t c_end) {
        double sum = 0.0;
        const double count = static_cast<double>(rows * (c_end - c_begin));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = c_begin; c < c_end; ++c) sum += table.values(r, c);
        const double mean = sum / count;
        double sq = 0.0;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = c_begin; c < c_end; ++c) {
                const double e = table.values(r, c) - mean;
                sq += e * e;
            }
        return std::pair{mean, std::sqrt(sq / count)};
    };

    if (mode == ZScoreMode::Global) {
        const auto [m, s] = population_stats(0, cols);
        for (std::size_t c = 0; c < cols; ++c) {
            stats.mean[c] = m;
            stats.stddev[c] = s > 0.0 ? s : 1.0;
            stats.constant[c] = !(s > 0.0);
        }
    } else {
        for (std::size_t c = 0; c < cols; ++c) {
            const auto [m, s] = population_stats(c, c + 1);
            stats.mean[c] = m;
            stats.stddev[c] = s > 0.0 ? s : 1.0;
            stats.constant[c] = !(s > 0.0);
        }
    }
    SeriesTable out = table;
    stats.transform(out);
    return {std::move(out), std::move(stats)};
}

std::pair<SeriesTable, ZScoreStats> range_fit_transform(const SeriesTable& table) {
    const std::size_t cols = table.values.cols();
    ZScoreStats stats;
    stats.mode = ZScoreMode::Global;
    stats.mean.assign(cols, 0.0);
    stats.stddev.assign(cols, 1.0);
    stats.constant.assign(cols, false);
    if (table.values.size() == 0) return {table, stats};
    double lo = table.values.values()[0], hi = lo;
    for (double v : table.values.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    for (std::size_t c = 0; c < cols; ++c) {
        stats.mean[c] = 0.5 * (lo + hi);
        stats.stddev[c] = range > 0.0 ? range : 1.0;
        stats.constant[c] = !(range > 0.0);
    }
    SeriesTable out = table;
    stats.transform(out);
    return {std::move(out), std::move(stats)};
}

void MetricsAccumulator::add(const ClipBatch& pred, const ClipBatch& truth) {
    if (!pred.same_shape(truth)) throw DimensionError("metrics: prediction and truth misaligned");
    if (window_ == 0) {
        window_ = pred.window();
        sq_h_.assign(window_, 0.0);
        abs_h_.assign(window_, 0.0);
        count_h_.assign(window_, 0);
    } else if (pred.window() != window_) {
        throw DimensionError("metrics: window length changed mid-sequence");
    }
    for (std::size_t p = 0; p < pred.agents(); ++p) {
        for (std::size_t t = 0; t < pred.window(); ++t) {
            double dist_sq = 0.0;
            for (std::size_t f = 0; f < pred.features(); ++f) {
                const double y = truth.at(p, t, f);
                const double e = pred.at(p, t, f) - y;
                sq_ += e * e;
                abs_ += std::abs(e);
                pct_ += std::abs(e) / std::max(std::abs(y), mape_floor_);
                sq_h_[t] += e * e;
                abs_h_[t] += std::abs(e);
                ++count_h_[t];
                dist_sq += e * e;
            }
            euclid_ += std::sqrt(dist_sq);
            ++frames_;
        }
    }
    entries_ += pred.values().size();
}

MetricsReport MetricsAccumulator::report() const {
    MetricsReport r;
    r.count = entries_;
    if (entries_ == 0) return r;
    const double n = static_cast<double>(entries_);
    r.mse = sq_ / n;
    r.mae = abs_ / n;
    r.rmse = std::sqrt(r.mse);
    r.mape = pct_ / n;
    r.euclid = euclid_ / static_cast<double>(frames_);
    r.mse_per_horizon.resize(window_);
    r.mae_per_horizon.resize(window_);
    for (std::size_t t = 0; t < window_; ++t) {
        const double c = static_cast<double>(count_h_[t]);
        r.mse_per_horizon[t] = sq_h_[t] / c;
        r.mae_per_horizon[t] = abs_h_[t] / c;
    }
    return r;
}

void MetricsAccumulator::reset() { *this = MetricsAccumulator(mape_floor_); }

MetricsReport metrics(std::span<const ClipBatch> pred, std::span<const ClipBatch> truth,
                      double mape_floor) {
    if (pred.size() != truth.size())
        throw DimensionError("metrics: prediction and truth sequences differ in length");
    MetricsAccumulator acc(mape_floor);
    for (std::size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], truth[i]);
    return acc.report();
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace cognn
