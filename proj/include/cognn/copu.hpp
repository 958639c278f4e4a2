#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cognn/core.hpp"
#include "cognn/kernels.hpp"
#include "cognn/predictors.hpp"

namespace cognn {

/// One collaborative prediction unit: its graph, its shared predictor
/// parameters and the step counter.
struct CopuState {
    CollaborativeGraph graph;
    ParamVector theta;
    EngineConfig config;
    std::uint64_t step_count = 0;
};

/// Uniform graph and randomly initialized predictor.
CopuState make_copu(const EngineConfig& config, std::mt19937_64& rng);
/// Uniform graph and all-zero predictor (a pure residual pass-through).
CopuState make_zero_copu(const EngineConfig& config);

struct CopuOutput {
    ClipBatch input;
    ClipBatch prediction;
    /// Residual-free pair outputs h(f_cb(x_p, x_q)), pair (p, q) at p*N + q,
    /// window*features values each.
    std::vector<double> pair_displacements;
    std::vector<double> pair_states;
    std::vector<double> activations;
    std::optional<LossMatrix> pair_losses;

    /// input[p] + h(f_cb(x_p, x_q)) as a window x features matrix.
    Matrix pair_prediction(std::size_t p, std::size_t q) const;
};

CopuOutput copu_forward(const CopuState& state, const ClipBatch& input,
                        kernels::Exec exec = kernels::Exec::Parallel);

/// What one update saw; the regret ledger and the property checks read it.
struct UpdateReport {
    LossMatrix raw_losses;
    Matrix bounded_pair_losses;
    std::vector<double> bounded_ensemble_losses;
    /// Normalized weights in effect during the step (before the W update).
    Matrix weights_used;
    /// Largest per-pair gradient norm of the bounded loss, before clipping.
    double max_pair_grad_norm = 0.0;
    /// Norm of the parameters used for this step's predictions.
    double theta_norm = 0.0;
};

/// Applies the theta step and the graph step in place and fills
/// output.pair_losses.
UpdateReport copu_update(CopuState& state, CopuOutput& output, const ClipBatch& target,
                         kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace cognn
