#pragma once

#include <vector>

#include "cognn/copu.hpp"

namespace cognn {

/// K CoPUs in cascade; unit i > 0 observes the prediction of unit i - 1.
struct CognnState {
    std::vector<CopuState> copus;
    EngineConfig config;
};

/// Builds config.num_copus units with parameters drawn from config.seed.
CognnState make_cognn(const EngineConfig& config);

struct CognnForward {
    ClipBatch final_prediction;
    std::vector<ClipBatch> intermediates;
    std::vector<CopuOutput> outputs;
};

CognnForward cognn_forward(const CognnState& state, const ClipBatch& input,
                           kernels::Exec exec = kernels::Exec::Parallel);

struct StepMetrics {
    ClipBatch final_prediction;
    /// Raw MSE of the final prediction, per agent.
    std::vector<double> final_loss;
    /// Mean over agents of each unit's raw ensemble loss.
    std::vector<double> copu_loss;
    /// One update report per unit, in cascade order.
    std::vector<UpdateReport> reports;
};

/// Forward pass, then every unit is updated against the same target.
StepMetrics cognn_online_step(CognnState& state, const ClipBatch& input, const ClipBatch& target,
                              kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace cognn
