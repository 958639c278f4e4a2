#include "cognn/copu.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cognn {

namespace {

void require_clip_dims(const ClipBatch& clip, const EngineConfig& config, const char* what) {
    if (clip.agents() != config.num_agents || clip.window() != config.window ||
        clip.features() != config.feature_dim) {
        throw DimensionError(std::string(what) + ": clip is " + std::to_string(clip.agents()) +
                             "x" + std::to_string(clip.window()) + "x" +
                             std::to_string(clip.features()) + ", engine expects " +
                             std::to_string(config.num_agents) + "x" +
                             std::to_string(config.window) + "x" +
                             std::to_string(config.feature_dim));
    }
}

[[noreturn]] void numerical_failure(const std::string& what, std::uint64_t step) {
    throw NumericalError(what + " at step " + std::to_string(step));
}

std::vector<double>& gradient_workspace(std::size_t size) {
    thread_local std::vector<double> buffer;
    if (buffer.size() < size) buffer.resize(size);
    return buffer;
}

void clamp_elements(std::span<double> g, double limit) {
    for (double& v : g) v = std::clamp(v, -limit, limit);
}

// Sequential pair-by-pair OGD: each pair's weighted gradient is taken at the
// parameters left by the previous pair.
void per_pair_sweep(CopuState& state, const CopuOutput& output,
                    std::span<const double> residual_targets) {
    const auto& cfg = state.config;
    const auto& shape = state.theta.shape;
    const std::size_t n = cfg.num_agents;
    const std::size_t in = shape.window * shape.in_width;
    const std::size_t out = shape.window * shape.out_width;
    std::vector<double> scratch(detail::scratch_size(shape));
    std::vector<double> pred(out), d_out(out), grad(shape.size());
    const double scale = 2.0 / static_cast<double>(out);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            const auto s = std::span<const double>(output.pair_states).subspan((p * n + q) * in, in);
            detail::forward(shape, state.theta.span(), s, pred, scratch);
            const double* tgt = residual_targets.data() + p * out;
            for (std::size_t k = 0; k < out; ++k) d_out[k] = scale * (pred[k] - tgt[k]);
            detail::backward(shape, state.theta.span(), s, d_out, grad, scratch);
            const double w = state.graph.normalized(p, q);
            for (double& g : grad) g *= w;
            clamp_elements(grad, cfg.grad_clip);
            for (std::size_t j = 0; j < grad.size(); ++j) state.theta.values[j] -= cfg.eta * grad[j];
        }
    }
}

}  // namespace

CopuState make_copu(const EngineConfig& config, std::mt19937_64& rng) {
    config.validate();
    return CopuState{new_uniform_graph(config.num_agents),
                     init_params(ParamShape::for_config(config), rng), config, 0};
}

CopuState make_zero_copu(const EngineConfig& config) {
    config.validate();
    return CopuState{new_uniform_graph(config.num_agents),
                     zero_params(ParamShape::for_config(config)), config, 0};
}

Matrix CopuOutput::pair_prediction(std::size_t p, std::size_t q) const {
    const std::size_t n = input.agents();
    const std::size_t len = input.window() * input.features();
    Matrix m(input.window(), input.features());
    const double* h = pair_displacements.data() + (p * n + q) * len;
    auto x = input.agent(p);
    for (std::size_t k = 0; k < len; ++k) m.values()[k] = x[k] + h[k];
    return m;
}

CopuOutput copu_forward(const CopuState& state, const ClipBatch& input, kernels::Exec exec) {
    const auto& cfg = state.config;
    require_clip_dims(input, cfg, "copu_forward");
    const auto& shape = state.theta.shape;
    const std::size_t n = cfg.num_agents;
    const std::size_t pairs = n * n;
    const std::size_t len = cfg.window * cfg.feature_dim;

    CopuOutput out;
    out.input = input;
    out.pair_states.resize(pairs * cfg.window * cfg.pair_width());
    out.pair_displacements.resize(pairs * len);
    out.activations.resize(pairs * detail::scratch_size(shape));

    kernels::build_pair_states(input, cfg, out.pair_states, exec);
    kernels::predict_pairs(shape, state.theta.span(), out.pair_states, pairs,
                           out.pair_displacements, out.activations, exec);

    std::vector<double> agg(n * len, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        double* a = agg.data() + p * len;
        auto x = input.agent(p);
        for (std::size_t q = 0; q < n; ++q) {
            const double w = state.graph.normalized(p, q);
            const double* h = out.pair_displacements.data() + (p * n + q) * len;
            for (std::size_t k = 0; k < len; ++k) a[k] += w * h[k];
        }
        for (std::size_t k = 0; k < len; ++k) {
            a[k] += x[k];
            if (!std::isfinite(a[k])) numerical_failure("copu_forward: non-finite prediction",
                                                        state.step_count);
        }
    }
    out.prediction = ClipBatch(n, cfg.window, cfg.feature_dim, std::move(agg),
                               input.start_time() + static_cast<std::int64_t>(cfg.window));
    return out;
}

UpdateReport copu_update(CopuState& state, CopuOutput& output, const ClipBatch& target,
                         kernels::Exec exec) {
    const auto& cfg = state.config;
    require_clip_dims(target, cfg, "copu_update");
    if (!output.input.same_shape(target))
        throw DimensionError("copu_update: output and target shapes differ");
    const auto& shape = state.theta.shape;
    const std::size_t n = cfg.num_agents;
    const std::size_t len = cfg.window * cfg.feature_dim;
    const std::size_t width = shape.size();

    UpdateReport report;
    report.weights_used = state.graph.normalized;
    report.theta_norm = state.theta.norm();
    report.raw_losses.per_pair = Matrix(n, n);
    report.raw_losses.per_agent_ensemble.assign(n, 0.0);
    report.bounded_pair_losses = Matrix(n, n);
    report.bounded_ensemble_losses.assign(n, 0.0);

    // (a) pair and ensemble losses on residual-adjusted predictions
    std::vector<double> residual_targets(n * len);
    for (std::size_t p = 0; p < n; ++p) {
        auto x = output.input.agent(p);
        auto y = target.agent(p);
        auto pred = output.prediction.agent(p);
        double ens = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            residual_targets[p * len + k] = y[k] - x[k];
            const double e = pred[k] - y[k];
            ens += e * e;
        }
        ens /= static_cast<double>(len);
        for (std::size_t q = 0; q < n; ++q) {
            const double* h = output.pair_displacements.data() + (p * n + q) * len;
            double acc = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const double e = h[k] - residual_targets[p * len + k];
                acc += e * e;
            }
            const double loss = acc / static_cast<double>(len);
            if (!std::isfinite(loss)) numerical_failure("copu_update: non-finite pair loss",
                                                        state.step_count);
            report.raw_losses.per_pair(p, q) = loss;
            report.bounded_pair_losses(p, q) = bounded_loss(loss, cfg.loss_scale);
        }
        if (!std::isfinite(ens)) numerical_failure("copu_update: non-finite ensemble loss",
                                                   state.step_count);
        report.raw_losses.per_agent_ensemble[p] = ens;
        report.bounded_ensemble_losses[p] = bounded_loss(ens, cfg.loss_scale);
    }
    output.pair_losses = report.raw_losses;

    // (b) theta step
    auto& buffer = gradient_workspace(0);
    std::vector<double> g(width);
    const double max_norm = kernels::weighted_gradient(
        shape, state.theta.span(), output.pair_states, output.pair_displacements,
        output.activations, residual_targets, report.weights_used.values(), n, buffer, g, exec);
    if (!std::isfinite(max_norm))
        numerical_failure("copu_update: non-finite gradient", state.step_count);
    report.max_pair_grad_norm = max_norm / cfg.loss_scale;

    if (cfg.theta_grad == ThetaGradMode::WeightedSum) {
        clamp_elements(g, cfg.grad_clip);
        for (std::size_t j = 0; j < width; ++j) state.theta.values[j] -= cfg.eta * g[j];
    } else {
        per_pair_sweep(state, output, residual_targets);
    }
    for (double v : state.theta.values)
        if (!std::isfinite(v)) numerical_failure("copu_update: non-finite parameters",
                                                 state.step_count);

    // (c) graph step
    switch (cfg.graph_mode) {
        case GraphMode::Learned: {
            Matrix raw(n, n);
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t q = 0; q < n; ++q)
                    raw(p, q) = std::max(report.weights_used(p, q) *
                                             std::exp(-cfg.eta * report.bounded_pair_losses(p, q)),
                                         kWeightFloor);
            state.graph.assign(std::move(raw));
            break;
        }
        case GraphMode::FrozenUniform:
            break;
        case GraphMode::EndToEnd: {
            // OGD on raw weights through the row normalization of the
            // ensemble loss, then projection back onto positive weights.
            Matrix raw = state.graph.weights;
            for (std::size_t p = 0; p < n; ++p) {
                double row_sum = 0.0;
                for (double v : raw.row(p)) row_sum += v;
                auto pred = output.prediction.agent(p);
                auto y = target.agent(p);
                std::vector<double> g(n, 0.0);
                for (std::size_t q = 0; q < n; ++q) {
                    const double* h = output.pair_displacements.data() + (p * n + q) * len;
                    auto x = output.input.agent(p);
                    double acc = 0.0;
                    for (std::size_t k = 0; k < len; ++k)
                        acc += 2.0 * (pred[k] - y[k]) * (x[k] + h[k] - pred[k]);
                    g[q] = std::clamp(acc / (static_cast<double>(len) * row_sum), -cfg.grad_clip,
                                      cfg.grad_clip);
                }
                for (std::size_t q = 0; q < n; ++q)
                    raw(p, q) = std::max(raw(p, q) - cfg.eta * g[q], kWeightFloor);
            }
            state.graph.assign(std::move(raw));
            break;
        }
    }

    ++state.step_count;
    return report;
}

}  // namespace cognn
