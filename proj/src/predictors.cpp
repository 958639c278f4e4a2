#include "cognn/predictors.hpp"

#include <algorithm>
#include <cmath>

namespace cognn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

void require_param_fit(const ParamVector& theta, const PairState& state, PredictorKind kind) {
    const auto& s = theta.shape;
    if (s.kind != kind) throw DimensionError("predictor: parameter kind mismatch");
    if (theta.values.size() != s.size())
        throw DimensionError("predictor: parameter length does not match its shape");
    if (state.data.rows() != s.window || state.data.cols() != s.in_width)
        throw DimensionError("predictor: pair state is " + std::to_string(state.data.rows()) +
                             "x" + std::to_string(state.data.cols()) + ", expected " +
                             std::to_string(s.window) + "x" + std::to_string(s.in_width));
}

// conv1 and conv2 offsets inside a TemporalConv parameter vector.
struct ConvLayout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    explicit ConvLayout(const ParamShape& s) {
        w1 = 0;
        b1 = s.hidden * s.in_width * s.kernel;
        w2 = b1 + s.hidden;
        b2 = w2 + s.out_width * s.hidden * s.kernel;
    }
};

void linear_forward(const ParamShape& s, std::span<const double> theta,
                    std::span<const double> state, std::span<double> out) {
    const std::size_t in = s.window * s.in_width;
    const std::size_t n_out = s.window * s.out_width;
    const double* bias = theta.data() + n_out * in;
    for (std::size_t o = 0; o < n_out; ++o) {
        const double* row = theta.data() + o * in;
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * state[i];
        out[o] = acc + bias[o];
    }
}

void linear_backward(const ParamShape& s, std::span<const double> state,
                     std::span<const double> d_out, std::span<double> grad) {
    const std::size_t in = s.window * s.in_width;
    const std::size_t n_out = s.window * s.out_width;
    double* bias = grad.data() + n_out * in;
    for (std::size_t o = 0; o < n_out; ++o) {
        double* row = grad.data() + o * in;
        const double g = d_out[o];
        for (std::size_t i = 0; i < in; ++i) row[i] = g * state[i];
        bias[o] = g;
    }
}

// Same-length 1-D convolution along time with zero padding:
// y[t][o] = b[o] + sum_i sum_j w[o][i][j] * x[t + j - k/2][i].
void conv1d(std::size_t window, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
            const double* w, const double* b, const double* x, double* y) {
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto len = static_cast<std::ptrdiff_t>(window);
    for (std::ptrdiff_t t = 0; t < len; ++t) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            double acc = b[o];
            const double* wo = w + o * in_ch * kernel;
            for (std::size_t j = 0; j < kernel; ++j) {
                const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - half;
                if (src < 0 || src >= len) continue;
                const double* xs = x + static_cast<std::size_t>(src) * in_ch;
                for (std::size_t i = 0; i < in_ch; ++i) acc += wo[i * kernel + j] * xs[i];
            }
            y[static_cast<std::size_t>(t) * out_ch + o] = acc;
        }
    }
}

// Gradients of conv1d given dy. Overwrites gw and gb; accumulates into dx
// when dx is non-null (dx must be zeroed by the caller).
void conv1d_backward(std::size_t window, std::size_t in_ch, std::size_t out_ch,
                     std::size_t kernel, const double* w, const double* x, const double* dy,
                     double* gw, double* gb, double* dx) {
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto len = static_cast<std::ptrdiff_t>(window);
    std::fill(gw, gw + out_ch * in_ch * kernel, 0.0);
    std::fill(gb, gb + out_ch, 0.0);
    for (std::ptrdiff_t t = 0; t < len; ++t) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            const double g = dy[static_cast<std::size_t>(t) * out_ch + o];
            gb[o] += g;
            const double* wo = w + o * in_ch * kernel;
            double* gwo = gw + o * in_ch * kernel;
            for (std::size_t j = 0; j < kernel; ++j) {
                const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - half;
                if (src < 0 || src >= len) continue;
                const double* xs = x + static_cast<std::size_t>(src) * in_ch;
                for (std::size_t i = 0; i < in_ch; ++i) gwo[i * kernel + j] += g * xs[i];
                if (dx != nullptr) {
                    double* dxs = dx + static_cast<std::size_t>(src) * in_ch;
                    for (std::size_t i = 0; i < in_ch; ++i) dxs[i] += g * wo[i * kernel + j];
                }
            }
        }
    }
}

void tc_forward(const ParamShape& s, std::span<const double> theta,
                std::span<const double> state, std::span<double> out,
                std::span<double> scratch) {
    const ConvLayout L(s);
    double* act = scratch.data();  // window x hidden
    conv1d(s.window, s.in_width, s.hidden, s.kernel, theta.data() + L.w1, theta.data() + L.b1,
           state.data(), act);
    for (std::size_t i = 0; i < s.window * s.hidden; ++i) act[i] = std::tanh(act[i]);
    conv1d(s.window, s.hidden, s.out_width, s.kernel, theta.data() + L.w2, theta.data() + L.b2,
           act, out.data());
}

void tc_backward(const ParamShape& s, std::span<const double> theta,
                 std::span<const double> state, std::span<const double> d_out,
                 std::span<double> grad, std::span<double> scratch) {
    const ConvLayout L(s);
    const double* act = scratch.data();
    double* d_act = scratch.data() + s.window * s.hidden;
    std::fill(d_act, d_act + s.window * s.hidden, 0.0);
    conv1d_backward(s.window, s.hidden, s.out_width, s.kernel, theta.data() + L.w2, act,
                    d_out.data(), grad.data() + L.w2, grad.data() + L.b2, d_act);
    for (std::size_t i = 0; i < s.window * s.hidden; ++i) d_act[i] *= 1.0 - act[i] * act[i];
    conv1d_backward(s.window, s.in_width, s.hidden, s.kernel, theta.data() + L.w1,
                    state.data(), d_act, grad.data() + L.w1, grad.data() + L.b1, nullptr);
}

}  // namespace

std::size_t ParamShape::size() const noexcept {
    if (kind == PredictorKind::LinearAR) {
        const std::size_t out = window * out_width;
        return out * window * in_width + out;
    }
    return hidden * in_width * kernel + hidden + out_width * hidden * kernel + out_width;
}

ParamShape ParamShape::for_config(const EngineConfig& config) {
    ParamShape s;
    s.kind = config.predictor_kind;
    s.window = config.window;
    s.in_width = config.pair_width();
    s.out_width = config.feature_dim;
    if (s.kind == PredictorKind::TemporalConv) {
        s.hidden = config.hidden_dim;
        s.kernel = config.kernel_size;
    }
    return s;
}

double ParamVector::norm() const noexcept {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    return std::sqrt(sq);
}

ParamVector zero_params(const ParamShape& shape) {
    return ParamVector{shape, std::vector<double>(shape.size(), 0.0)};
}

ParamVector init_params(const ParamShape& shape, std::mt19937_64& rng) {
    ParamVector theta = zero_params(shape);
    auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-a, a);
        for (std::size_t i = begin; i < begin + count; ++i) theta.values[i] = dist(rng);
    };
    if (shape.kind == PredictorKind::LinearAR) {
        fill(0, shape.size(), shape.window * shape.in_width);
    } else {
        const ConvLayout L(shape);
        fill(L.w1, L.w2 - L.w1, shape.in_width * shape.kernel);
        fill(L.w2, shape.size() - L.w2, shape.hidden * shape.kernel);
    }
    return theta;
}

PairState combine_ar(const Matrix& x_p, const Matrix& x_q, std::size_t order) {
    require_same_shape(x_p, x_q, "combine_ar");
    if (order == 0) throw DimensionError("combine_ar: order must be at least 1");
    PairState state{Matrix(x_p.rows(), (order + 1) * x_p.cols())};
    detail::combine_ar_into(x_p.values(), x_q.values(), x_p.rows(), x_p.cols(), order,
                            state.data.values());
    return state;
}

PairState combine_concat(const Matrix& x_p, const Matrix& x_q) {
    require_same_shape(x_p, x_q, "combine_concat");
    PairState state{Matrix(x_p.rows(), 2 * x_p.cols())};
    detail::combine_concat_into(x_p.values(), x_q.values(), x_p.rows(), x_p.cols(),
                                state.data.values());
    return state;
}

Matrix predict_linear(const ParamVector& theta, const PairState& state) {
    require_param_fit(theta, state, PredictorKind::LinearAR);
    Matrix out(theta.shape.window, theta.shape.out_width);
    linear_forward(theta.shape, theta.span(), state.data.values(), out.values());
    return out;
}

Matrix predict_tc(const ParamVector& theta, const PairState& state) {
    require_param_fit(theta, state, PredictorKind::TemporalConv);
    Matrix out(theta.shape.window, theta.shape.out_width);
    std::vector<double> scratch(detail::scratch_size(theta.shape));
    tc_forward(theta.shape, theta.span(), state.data.values(), out.values(), scratch);
    return out;
}

Matrix predict(const ParamVector& theta, const PairState& state) {
    return theta.shape.kind == PredictorKind::LinearAR ? predict_linear(theta, state)
                                                       : predict_tc(theta, state);
}

double loss_mse(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "loss_mse");
    if (pred.size() == 0) return 0.0;
    double acc = 0.0;
    auto p = pred.values();
    auto t = target.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = p[i] - t[i];
        acc += e * e;
    }
    return acc / static_cast<double>(p.size());
}

double bounded_loss(double raw, double loss_scale) {
    if (raw < 0.0 || std::isnan(raw)) throw DomainError("bounded_loss: raw loss must be >= 0");
    if (!(loss_scale > 0.0)) throw DomainError("bounded_loss: loss_scale must be > 0");
    return std::min(raw / loss_scale, 1.0);
}

ParamVector grad_theta(PredictorKind kind, const ParamVector& theta, const PairState& state,
                       const Matrix& target) {
    require_param_fit(theta, state, kind);
    const auto& s = theta.shape;
    if (target.rows() != s.window || target.cols() != s.out_width)
        throw DimensionError("grad_theta: target shape mismatch");
    std::vector<double> scratch(detail::scratch_size(s));
    Matrix pred(s.window, s.out_width);
    detail::forward(s, theta.span(), state.data.values(), pred.values(), scratch);
    std::vector<double> d_out(pred.size());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < d_out.size(); ++i)
        d_out[i] = scale * (pred.values()[i] - target.values()[i]);
    ParamVector grad = zero_params(s);
    detail::backward(s, theta.span(), state.data.values(), d_out, grad.span(), scratch);
    return grad;
}

namespace detail {

void combine_ar_into(std::span<const double> x_p, std::span<const double> x_q,
                     std::size_t window, std::size_t features, std::size_t order,
                     std::span<double> out) {
    const std::size_t width = (order + 1) * features;
    for (std::size_t t = 0; t < window; ++t) {
        const double* xp = x_p.data() + t * features;
        const double* xq = x_q.data() + t * features;
        double* row = out.data() + t * width;
        for (std::size_t f = 0; f < features; ++f) {
            row[f] = xp[f];
            const double diff = xq[f] - xp[f];
            double power = diff;
            for (std::size_t k = 1; k <= order; ++k) {
                row[k * features + f] = power;
                power *= diff;
            }
        }
    }
}

void combine_concat_into(std::span<const double> x_p, std::span<const double> x_q,
                         std::size_t window, std::size_t features, std::span<double> out) {
    for (std::size_t t = 0; t < window; ++t) {
        double* row = out.data() + t * 2 * features;
        for (std::size_t f = 0; f < features; ++f) {
            row[f] = x_p[t * features + f];
            row[features + f] = x_q[t * features + f];
        }
    }
}

std::size_t scratch_size(const ParamShape& shape) noexcept {
    return shape.kind == PredictorKind::TemporalConv ? 2 * shape.window * shape.hidden : 0;
}

void forward(const ParamShape& shape, std::span<const double> theta,
             std::span<const double> state, std::span<double> out, std::span<double> scratch) {
    if (shape.kind == PredictorKind::LinearAR)
        linear_forward(shape, theta, state, out);
    else
        tc_forward(shape, theta, state, out, scratch);
}

void backward(const ParamShape& shape, std::span<const double> theta,
              std::span<const double> state, std::span<const double> d_out,
              std::span<double> grad, std::span<double> scratch) {
    if (shape.kind == PredictorKind::LinearAR)
        linear_backward(shape, state, d_out, grad);
    else
        tc_backward(shape, theta, state, d_out, grad, scratch);
}

}  // namespace detail

}  // namespace cognn
