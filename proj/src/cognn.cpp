#include "cognn/cognn.hpp"

#include <random>

namespace cognn {

CognnState make_cognn(const EngineConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    CognnState state;
    state.config = config;
    state.copus.reserve(config.num_copus);
    for (std::size_t i = 0; i < config.num_copus; ++i) state.copus.push_back(make_copu(config, rng));
    return state;
}

CognnForward cognn_forward(const CognnState& state, const ClipBatch& input, kernels::Exec exec) {
    if (state.copus.empty()) throw ConfigError("cognn: at least one CoPU is required");
    CognnForward fwd;
    fwd.outputs.reserve(state.copus.size());
    fwd.intermediates.reserve(state.copus.size());
    const ClipBatch* observed = &input;
    for (const auto& unit : state.copus) {
        fwd.outputs.push_back(copu_forward(unit, *observed, exec));
        fwd.outputs.back().prediction.set_start_time(input.start_time() +
                                                     static_cast<std::int64_t>(input.window()));
        fwd.intermediates.push_back(fwd.outputs.back().prediction);
        observed = &fwd.outputs.back().prediction;
    }
    fwd.final_prediction = fwd.intermediates.back();
    return fwd;
}

StepMetrics cognn_online_step(CognnState& state, const ClipBatch& input, const ClipBatch& target,
                              kernels::Exec exec) {
    CognnForward fwd = cognn_forward(state, input, exec);
    StepMetrics metrics;
    metrics.copu_loss.reserve(state.copus.size());
    metrics.reports.reserve(state.copus.size());
    for (std::size_t i = 0; i < state.copus.size(); ++i) {
        UpdateReport report = copu_update(state.copus[i], fwd.outputs[i], target, exec);
        double mean = 0.0;
        for (double v : report.raw_losses.per_agent_ensemble) mean += v;
        metrics.copu_loss.push_back(mean / static_cast<double>(state.config.num_agents));
        if (i + 1 == state.copus.size()) metrics.final_loss = report.raw_losses.per_agent_ensemble;
        metrics.reports.push_back(std::move(report));
    }
    metrics.final_prediction = std::move(fwd.final_prediction);
    return metrics;
}

}  // namespace cognn
