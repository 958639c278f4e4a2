// Serial reference vs OpenMP kernels on one CoPU step (N = 20, delta = 10).
#include <benchmark/benchmark.h>

#include <random>

#include "cognn/copu.hpp"

namespace {

using cognn::kernels::Exec;

cognn::EngineConfig bench_config(cognn::PredictorKind kind) {
    cognn::EngineConfig c;
    c.predictor_kind = kind;
    c.hidden_dim = 16;
    c.loss_scale = 1e-3;
    return c;
}

cognn::ClipBatch random_clip(const cognn::EngineConfig& c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    cognn::ClipBatch clip(c.num_agents, c.window, c.feature_dim);
    for (double& v : clip.values()) v = u(rng);
    return clip;
}

void copu_step(benchmark::State& st, cognn::PredictorKind kind, Exec exec) {
    const auto c = bench_config(kind);
    std::mt19937_64 rng(1);
    auto unit = cognn::make_copu(c, rng);
    const auto input = random_clip(c, 2);
    const auto target = random_clip(c, 3);
    for (auto _ : st) {
        auto out = cognn::copu_forward(unit, input, exec);
        auto report = cognn::copu_update(unit, out, target, exec);
        benchmark::DoNotOptimize(report.theta_norm);
    }
}

void pair_gradients(benchmark::State& st, cognn::PredictorKind kind, Exec exec) {
    const auto c = bench_config(kind);
    std::mt19937_64 rng(1);
    const auto unit = cognn::make_copu(c, rng);
    const auto input = random_clip(c, 2);
    auto out = cognn::copu_forward(unit, input, Exec::Serial);
    const auto shape = unit.theta.shape;
    std::vector<double> residual(c.num_agents * c.window * c.feature_dim, 0.1);
    std::vector<double> grads(c.num_agents * c.num_agents * shape.size());
    for (auto _ : st) {
        cognn::kernels::pair_gradients(shape, unit.theta.span(), out.pair_states,
                                       out.pair_displacements, out.activations, residual,
                                       c.num_agents, grads, exec);
        benchmark::DoNotOptimize(grads.data());
    }
}

}  // namespace

BENCHMARK_CAPTURE(copu_step, linear_serial, cognn::PredictorKind::LinearAR, Exec::Serial);
BENCHMARK_CAPTURE(copu_step, linear_parallel, cognn::PredictorKind::LinearAR, Exec::Parallel);
BENCHMARK_CAPTURE(copu_step, conv_serial, cognn::PredictorKind::TemporalConv, Exec::Serial);
BENCHMARK_CAPTURE(copu_step, conv_parallel, cognn::PredictorKind::TemporalConv, Exec::Parallel);
BENCHMARK_CAPTURE(pair_gradients, conv_serial, cognn::PredictorKind::TemporalConv, Exec::Serial);
BENCHMARK_CAPTURE(pair_gradients, conv_parallel, cognn::PredictorKind::TemporalConv, Exec::Parallel);

BENCHMARK_MAIN();
