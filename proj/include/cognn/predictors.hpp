#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cognn/core.hpp"

namespace cognn {

/// Combined feature of one collaborative pair: window x pair_width.
struct PairState {
    Matrix data;
};

/// Layer dimensions behind a flat parameter vector.
///
/// LinearAR layout: A (out x in, row-major) then b (out), where
/// in = window * in_width and out = window * out_width.
///
/// TemporalConv layout: conv1 weights [hidden][in_width][kernel], conv1 bias
/// [hidden], conv2 weights [out_width][hidden][kernel], conv2 bias [out_width].
struct ParamShape {
    PredictorKind kind = PredictorKind::LinearAR;
    std::size_t window = 0;
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    std::size_t hidden = 0;
    std::size_t kernel = 0;

    std::size_t size() const noexcept;

    static ParamShape for_config(const EngineConfig& config);

    friend bool operator==(const ParamShape&, const ParamShape&) = default;
};

struct ParamVector {
    ParamShape shape;
    std::vector<double> values;

    std::span<double> span() noexcept { return values; }
    std::span<const double> span() const noexcept { return values; }
    double norm() const noexcept;
};

ParamVector zero_params(const ParamShape& shape);

/// U(-a, a) per layer with a = 1/sqrt(fan_in).
ParamVector init_params(const ParamShape& shape, std::mt19937_64& rng);

PairState combine_ar(const Matrix& x_p, const Matrix& x_q, std::size_t order);
PairState combine_concat(const Matrix& x_p, const Matrix& x_q);

Matrix predict_linear(const ParamVector& theta, const PairState& state);
Matrix predict_tc(const ParamVector& theta, const PairState& state);
Matrix predict(const ParamVector& theta, const PairState& state);

double loss_mse(const Matrix& pred, const Matrix& target);
double bounded_loss(double raw, double loss_scale);

/// Analytic gradient of loss_mse(predict(theta, state), target) w.r.t. theta.
ParamVector grad_theta(PredictorKind kind, const ParamVector& theta, const PairState& state,
                       const Matrix& target);

namespace detail {

// Span kernels shared by the public wrappers and the batched pair kernels.
// `state` is window x in_width row-major, `out` window x out_width.

void combine_ar_into(std::span<const double> x_p, std::span<const double> x_q,
                     std::size_t window, std::size_t features, std::size_t order,
                     std::span<double> out);
void combine_concat_into(std::span<const double> x_p, std::span<const double> x_q,
                         std::size_t window, std::size_t features, std::span<double> out);

/// Scratch doubles needed by forward/backward for one pair.
std::size_t scratch_size(const ParamShape& shape) noexcept;

void forward(const ParamShape& shape, std::span<const double> theta,
             std::span<const double> state, std::span<double> out, std::span<double> scratch);

/// Overwrites `grad` with d(loss)/d(theta) given d(loss)/d(out). `scratch`
/// must hold the activations left by forward() on the same inputs.
void backward(const ParamShape& shape, std::span<const double> theta,
              std::span<const double> state, std::span<const double> d_out,
              std::span<double> grad, std::span<double> scratch);

}  // namespace detail

}  // namespace cognn
