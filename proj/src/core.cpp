#include "cognn/core.hpp"

#include <cmath>
#include <sstream>

namespace cognn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix: value count does not match " + std::to_string(rows) +
                             "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

ClipBatch::ClipBatch(std::size_t agents, std::size_t window, std::size_t features,
                     std::int64_t start_time)
    : ClipBatch(agents, window, features, std::vector<double>(agents * window * features, 0.0),
                start_time) {}

ClipBatch::ClipBatch(std::size_t agents, std::size_t window, std::size_t features,
                     std::vector<double> values, std::int64_t start_time)
    : agents_(agents),
      window_(window),
      features_(features),
      start_time_(start_time),
      data_(std::move(values)) {
    if (agents == 0 || window == 0 || features == 0)
        throw DimensionError("clip: agents, window and features must be positive");
    if (data_.size() != agents * window * features)
        throw DimensionError("clip: value count does not match shape");
    for (double v : data_)
        if (!std::isfinite(v)) throw DomainError("clip: non-finite measurement");
}

Matrix ClipBatch::agent_matrix(std::size_t p) const {
    auto slice = agent(p);
    return Matrix(window_, features_, std::vector<double>(slice.begin(), slice.end()));
}

void CollaborativeGraph::assign(Matrix raw) {
    normalized = normalize_rows(raw);
    weights = std::move(raw);
}

CollaborativeGraph new_uniform_graph(std::size_t n) {
    if (n == 0) throw DimensionError("graph: agent count must be at least 1");
    const double w = 1.0 / static_cast<double>(n);
    return CollaborativeGraph{Matrix(n, n, w), Matrix(n, n, w)};
}

Matrix normalize_rows(const Matrix& weights) {
    Matrix out(weights.rows(), weights.cols());
    for (std::size_t r = 0; r < weights.rows(); ++r) {
        double sum = 0.0;
        for (double v : weights.row(r)) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                std::ostringstream msg;
                msg << "normalize_rows: weight " << v << " in row " << r
                    << " is not strictly positive and finite";
                throw DomainError(msg.str());
            }
            sum += v;
        }
        auto src = weights.row(r);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / sum;
    }
    return out;
}

std::string to_string(PredictorKind kind) {
    return kind == PredictorKind::LinearAR ? "linear_ar" : "temporal_conv";
}

std::string to_string(GraphMode mode) {
    switch (mode) {
        case GraphMode::Learned: return "learned";
        case GraphMode::FrozenUniform: return "frozen_uniform";
        case GraphMode::EndToEnd: return "e2e";
    }
    return "learned";
}

std::string to_string(ThetaGradMode mode) {
    return mode == ThetaGradMode::WeightedSum ? "weighted_sum" : "per_pair_sweep";
}

PredictorKind parse_predictor_kind(const std::string& s) {
    if (s == "linear_ar" || s == "ar") return PredictorKind::LinearAR;
    if (s == "temporal_conv" || s == "tc") return PredictorKind::TemporalConv;
    throw ConfigError("predictor_kind: unknown value '" + s + "'");
}

GraphMode parse_graph_mode(const std::string& s) {
    if (s == "learned") return GraphMode::Learned;
    if (s == "frozen_uniform") return GraphMode::FrozenUniform;
    if (s == "e2e") return GraphMode::EndToEnd;
    throw ConfigError("graph_mode: unknown value '" + s + "'");
}

ThetaGradMode parse_theta_grad_mode(const std::string& s) {
    if (s == "weighted_sum") return ThetaGradMode::WeightedSum;
    if (s == "per_pair_sweep") return ThetaGradMode::PerPairSweep;
    throw ConfigError("theta_grad: unknown value '" + s + "'");
}

void EngineConfig::validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
    if (num_agents == 0) throw ConfigError("num_agents must be positive");
    if (window == 0) throw ConfigError("window must be positive");
    if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
    if (ar_order == 0) throw ConfigError("ar_order must be positive");
    if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
    if (kernel_size == 0 || kernel_size % 2 == 0)
        throw ConfigError("kernel_size must be a positive odd number");
    if (num_copus == 0) throw ConfigError("num_copus must be positive");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    if (!(loss_scale > 0.0)) throw ConfigError("loss_scale must be positive");
}

}  // namespace cognn
