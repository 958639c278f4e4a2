#include "cognn/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace cognn::kernels {

namespace {

int initial_threads() {
    int threads = omp_get_max_threads();
    if (const char* env = std::getenv("COGNN_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) threads = std::min(threads, cap);
        } catch (const std::exception&) {
        }
    }
    return std::max(threads, 1);
}

int& threads_ref() {
    static int threads = initial_threads();
    return threads;
}

constexpr std::size_t kReduceBlock = 512;

}  // namespace

int thread_count() { return threads_ref(); }

void set_thread_count(int threads) { threads_ref() = std::max(threads, 1); }

void build_pair_states(const ClipBatch& input, const EngineConfig& config,
                       std::span<double> states, Exec exec) {
    const std::size_t n = input.agents();
    const std::size_t stride = input.window() * config.pair_width();
    const auto pairs = static_cast<std::ptrdiff_t>(n * n);
    auto one = [&](std::ptrdiff_t idx) {
        const auto pair = static_cast<std::size_t>(idx);
        const std::size_t p = pair / n;
        const std::size_t q = pair % n;
        auto out = states.subspan(pair * stride, stride);
        if (config.predictor_kind == PredictorKind::LinearAR)
            detail::combine_ar_into(input.agent(p), input.agent(q), input.window(),
                                    input.features(), config.ar_order, out);
        else
            detail::combine_concat_into(input.agent(p), input.agent(q), input.window(),
                                        input.features(), out);
    };
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i);
    } else {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i);
    }
}

void predict_pairs(const ParamShape& shape, std::span<const double> theta,
                   std::span<const double> states, std::size_t num_pairs,
                   std::span<double> outputs, std::span<double> scratch, Exec exec) {
    const std::size_t in = shape.window * shape.in_width;
    const std::size_t out = shape.window * shape.out_width;
    const std::size_t scr = detail::scratch_size(shape);
    const auto pairs = static_cast<std::ptrdiff_t>(num_pairs);
    auto one = [&](std::ptrdiff_t idx) {
        const auto i = static_cast<std::size_t>(idx);
        detail::forward(shape, theta, states.subspan(i * in, in), outputs.subspan(i * out, out),
                        scratch.subspan(i * scr, scr));
    };
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i);
    } else {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i);
    }
}

void pair_gradients(const ParamShape& shape, std::span<const double> theta,
                    std::span<const double> states, std::span<const double> outputs,
                    std::span<double> scratch, std::span<const double> residual_targets,
                    std::size_t agents, std::span<double> grads, Exec exec) {
    const std::size_t in = shape.window * shape.in_width;
    const std::size_t out = shape.window * shape.out_width;
    const std::size_t scr = detail::scratch_size(shape);
    const std::size_t width = shape.size();
    const double scale = 2.0 / static_cast<double>(out);
    const auto pairs = static_cast<std::ptrdiff_t>(agents * agents);
    auto one = [&](std::ptrdiff_t idx, std::vector<double>& d_out) {
        const auto i = static_cast<std::size_t>(idx);
        const std::size_t p = i / agents;
        const double* pred = outputs.data() + i * out;
        const double* tgt = residual_targets.data() + p * out;
        for (std::size_t k = 0; k < out; ++k) d_out[k] = scale * (pred[k] - tgt[k]);
        detail::backward(shape, theta, states.subspan(i * in, in), d_out,
                         grads.subspan(i * width, width), scratch.subspan(i * scr, scr));
    };
    if (exec == Exec::Serial) {
        std::vector<double> d_out(out);
        for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i, d_out);
    } else {
#pragma omp parallel num_threads(thread_count())
        {
            std::vector<double> d_out(out);
#pragma omp for schedule(static)
            for (std::ptrdiff_t i = 0; i < pairs; ++i) one(i, d_out);
        }
    }
}

void weighted_reduce(std::span<const double> grads, std::span<const double> weights,
                     std::size_t width, std::span<double> out, Exec exec) {
    const std::size_t pairs = weights.size();
    const auto blocks = static_cast<std::ptrdiff_t>((width + kReduceBlock - 1) / kReduceBlock);
    auto one = [&](std::ptrdiff_t b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kReduceBlock;
        const std::size_t end = std::min(begin + kReduceBlock, width);
        double* acc = out.data();
        std::fill(acc + begin, acc + end, 0.0);
        for (std::size_t pair = 0; pair < pairs; ++pair) {
            const double w = weights[pair];
            const double* g = grads.data() + pair * width;
            for (std::size_t j = begin; j < end; ++j) acc[j] += w * g[j];
        }
    };
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t b = 0; b < blocks; ++b) one(b);
    } else {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t b = 0; b < blocks; ++b) one(b);
    }
}

double weighted_gradient(const ParamShape& shape, std::span<const double> theta,
                         std::span<const double> states, std::span<const double> outputs,
                         std::span<double> scratch, std::span<const double> residual_targets,
                         std::span<const double> weights, std::size_t agents,
                         std::vector<double>& buffer, std::span<double> out, Exec exec) {
    const std::size_t pairs = agents * agents;
    const std::size_t width = shape.size();
    const std::size_t n_out = shape.window * shape.out_width;
    const std::size_t in = shape.window * shape.in_width;

    if (shape.kind == PredictorKind::TemporalConv) {
        if (buffer.size() < pairs * width) buffer.resize(pairs * width);
        std::span<double> grads(buffer.data(), pairs * width);
        pair_gradients(shape, theta, states, outputs, scratch, residual_targets, agents, grads,
                       exec);
        double max_sq = 0.0;
        for (std::size_t i = 0; i < pairs; ++i) {
            double sq = 0.0;
            for (std::size_t j = 0; j < width; ++j) sq += grads[i * width + j] * grads[i * width + j];
            max_sq = std::max(max_sq, sq);
        }
        weighted_reduce(grads, weights, width, out, exec);
        return std::sqrt(max_sq);
    }

    // LinearAR: grad of pair i is d_out_i (x) [state_i, 1], so the weighted sum
    // is sum_i (w_i d_out_i) (x) [state_i, 1] and the pair norm factorizes.
    if (buffer.size() < pairs * n_out) buffer.resize(pairs * n_out);
    const double scale = 2.0 / static_cast<double>(n_out);
    double max_sq = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t p = i / agents;
        const double* pred = outputs.data() + i * n_out;
        const double* tgt = residual_targets.data() + p * n_out;
        const double* st = states.data() + i * in;
        double d_sq = 0.0, s_sq = 1.0;
        for (std::size_t o = 0; o < n_out; ++o) {
            const double d = scale * (pred[o] - tgt[o]);
            d_sq += d * d;
            buffer[i * n_out + o] = weights[i] * d;
        }
        for (std::size_t k = 0; k < in; ++k) s_sq += st[k] * st[k];
        max_sq = std::max(max_sq, d_sq * s_sq);
    }
    const auto rows = static_cast<std::ptrdiff_t>(n_out);
    auto one = [&](std::ptrdiff_t r) {
        const auto o = static_cast<std::size_t>(r);
        double* row = out.data() + o * in;
        double bias = 0.0;
        std::fill(row, row + in, 0.0);
        for (std::size_t i = 0; i < pairs; ++i) {
            const double c = buffer[i * n_out + o];
            const double* st = states.data() + i * in;
            for (std::size_t k = 0; k < in; ++k) row[k] += c * st[k];
            bias += c;
        }
        out[n_out * in + o] = bias;
    };
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
    } else {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
    }
    return std::sqrt(max_sq);
}

}  // namespace cognn::kernels
