#pragma once

// Batched per-pair kernels. Each kernel has a serial reference path and an
// OpenMP path; both produce bit-identical results because every pair is
// computed independently and every reduction runs in (p, q) lexicographic
// order regardless of the thread count.

#include <span>
#include <vector>

#include "cognn/core.hpp"
#include "cognn/predictors.hpp"

namespace cognn::kernels {

enum class Exec { Serial, Parallel };

/// Worker threads honoured by Exec::Parallel (COGNN_THREADS caps it).
int thread_count();
void set_thread_count(int threads);

/// Fills `states` with N*N pair states, pair (p, q) at index p*N + q.
void build_pair_states(const ClipBatch& input, const EngineConfig& config,
                       std::span<double> states, Exec exec);

/// Runs the shared predictor on every pair state. `scratch` keeps per-pair
/// activations needed by pair_gradients.
void predict_pairs(const ParamShape& shape, std::span<const double> theta,
                   std::span<const double> states, std::size_t num_pairs,
                   std::span<double> outputs, std::span<double> scratch, Exec exec);

/// Per-pair gradient of loss_mse(output, residual_target[p]) w.r.t. theta,
/// written to `grads` (num_pairs x theta.size()). `residual_targets` holds
/// target - input per agent (N x window*features).
void pair_gradients(const ParamShape& shape, std::span<const double> theta,
                    std::span<const double> states, std::span<const double> outputs,
                    std::span<double> scratch, std::span<const double> residual_targets,
                    std::size_t agents, std::span<double> grads, Exec exec);

/// out[j] = sum over pairs (lexicographic) of weights[pair] * grads[pair][j].
void weighted_reduce(std::span<const double> grads, std::span<const double> weights,
                     std::size_t width, std::span<double> out, Exec exec);

/// Weighted sum over pairs (lexicographic) of the per-pair gradients, i.e.
/// the gradient of sum_{p,q} wbar[p][q] * loss(p, q). Returns the largest
/// per-pair gradient norm. LinearAR takes a fused outer-product path;
/// TemporalConv goes through pair_gradients + weighted_reduce using `buffer`.
double weighted_gradient(const ParamShape& shape, std::span<const double> theta,
                         std::span<const double> states, std::span<const double> outputs,
                         std::span<double> scratch, std::span<const double> residual_targets,
                         std::span<const double> weights, std::size_t agents,
                         std::vector<double>& buffer, std::span<double> out, Exec exec);

}  // namespace cognn::kernels
