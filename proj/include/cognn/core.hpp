#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cognn {

// Error categories. The CLI maps them onto exit codes (config 1, data 2,
// numerical 3); dimension and domain errors count as data errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Measurements of all agents over one window: agent-time-feature row-major.
class ClipBatch {
public:
    ClipBatch() = default;
    ClipBatch(std::size_t agents, std::size_t window, std::size_t features,
              std::int64_t start_time = 0);
    ClipBatch(std::size_t agents, std::size_t window, std::size_t features,
              std::vector<double> values, std::int64_t start_time = 0);

    std::size_t agents() const noexcept { return agents_; }
    std::size_t window() const noexcept { return window_; }
    std::size_t features() const noexcept { return features_; }
    std::int64_t start_time() const noexcept { return start_time_; }
    void set_start_time(std::int64_t t) noexcept { start_time_ = t; }

    double& at(std::size_t p, std::size_t t, std::size_t f) noexcept {
        return data_[(p * window_ + t) * features_ + f];
    }
    double at(std::size_t p, std::size_t t, std::size_t f) const noexcept {
        return data_[(p * window_ + t) * features_ + f];
    }

    /// Contiguous window x feature slice of one agent.
    std::span<double> agent(std::size_t p) noexcept {
        return {data_.data() + p * window_ * features_, window_ * features_};
    }
    std::span<const double> agent(std::size_t p) const noexcept {
        return {data_.data() + p * window_ * features_, window_ * features_};
    }
    Matrix agent_matrix(std::size_t p) const;

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const ClipBatch& other) const noexcept {
        return agents_ == other.agents_ && window_ == other.window_ &&
               features_ == other.features_;
    }

    friend bool operator==(const ClipBatch&, const ClipBatch&) = default;

private:
    std::size_t agents_ = 0;
    std::size_t window_ = 0;
    std::size_t features_ = 0;
    std::int64_t start_time_ = 0;
    std::vector<double> data_;
};

/// Raw positive edge weights plus their row-normalized view.
struct CollaborativeGraph {
    Matrix weights;
    Matrix normalized;

    std::size_t agents() const noexcept { return weights.rows(); }

    /// Replace the raw weights and recompute the normalized view.
    void assign(Matrix raw);
};

inline constexpr double kWeightFloor = 1e-12;

CollaborativeGraph new_uniform_graph(std::size_t n);

/// Divides each row by its sum. Throws DomainError on non-positive or
/// non-finite entries.
Matrix normalize_rows(const Matrix& weights);

enum class PredictorKind { LinearAR, TemporalConv };
enum class GraphMode { Learned, FrozenUniform, EndToEnd };
enum class ThetaGradMode { WeightedSum, PerPairSweep };

std::string to_string(PredictorKind kind);
std::string to_string(GraphMode mode);
std::string to_string(ThetaGradMode mode);
PredictorKind parse_predictor_kind(const std::string& s);
GraphMode parse_graph_mode(const std::string& s);
ThetaGradMode parse_theta_grad_mode(const std::string& s);

struct EngineConfig {
    double eta = 0.05;
    std::size_t num_agents = 20;
    std::size_t window = 10;
    std::size_t feature_dim = 2;
    PredictorKind predictor_kind = PredictorKind::LinearAR;
    std::size_t ar_order = 10;
    std::size_t hidden_dim = 64;
    std::size_t kernel_size = 3;
    std::size_t num_copus = 2;
    double grad_clip = 10.0;
    double loss_scale = 1.0;
    std::uint64_t seed = 0;
    GraphMode graph_mode = GraphMode::Learned;
    ThetaGradMode theta_grad = ThetaGradMode::WeightedSum;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Column count of one pair state for the configured combiner.
    std::size_t pair_width() const noexcept {
        return predictor_kind == PredictorKind::LinearAR ? (ar_order + 1) * feature_dim
                                                         : 2 * feature_dim;
    }
};

struct LossMatrix {
    Matrix per_pair;
    std::vector<double> per_agent_ensemble;
};

}  // namespace cognn
