#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cognn/copu.hpp"
#include "cognn/core.hpp"

namespace cognn {

/// Running sums of bounded losses for static-regret analysis, plus the
/// empirical constants (parameter norm, gradient norm) used by the bound.
class RegretLedger {
public:
    explicit RegretLedger(std::size_t agents);

    /// Losses must already be bounded to [0, 1]. `mix_weights` (normalized
    /// graph in effect during the step) enables the weighted-mixture sums.
    void record_step(const LossMatrix& bounded, double theta_norm, double grad_norm,
                     const Matrix* mix_weights = nullptr);

    struct BestPair {
        std::size_t q = 0;
        double cumulative_loss = 0.0;
    };

    /// argmin_q of the cumulative pair loss of agent p; ties go to the smaller q.
    BestPair best_pair_in_hindsight(std::size_t p) const;
    double static_regret(std::size_t p) const;
    double mean_static_regret() const;

    /// (1/T) sum_t (sum_q wbar L^(p,q) - L^(p,k)).
    double mixture_gap(std::size_t p, std::size_t k) const;

    std::size_t agents() const noexcept { return agents_; }
    std::size_t history_len() const noexcept { return steps_; }
    const Matrix& cumulative_pair_loss() const noexcept { return pair_; }
    const std::vector<double>& cumulative_ensemble_loss() const noexcept { return ensemble_; }
    const std::vector<double>& cumulative_mixture_loss() const noexcept { return mixture_; }
    double measured_c_theta() const noexcept { return c_theta_; }
    double measured_l() const noexcept { return grad_l_; }

private:
    void require_history() const;
    void require_agent(std::size_t p) const;

    std::size_t agents_;
    std::size_t steps_ = 0;
    bool tracks_mixture_ = true;
    Matrix pair_;
    std::vector<double> ensemble_;
    std::vector<double> mixture_;
    double c_theta_ = 0.0;
    double grad_l_ = 0.0;
};

/// log n/(eta T) + C^2/(2 eta T) + eta L^2/2 + eta with the ledger's measured
/// C and L.
double theoretical_bound(const RegretLedger& ledger, double eta, double n);

/// eta + log n/(eta T): the bound on mixture_gap for any fixed pair.
double mixture_gap_bound(const RegretLedger& ledger, double eta, double n);

/// Re-scores a stored stream with fixed (final) parameters and returns the
/// N x N cumulative bounded pair losses.
Matrix replay_pair_losses(const CopuState& final_state, std::span<const ClipBatch> inputs,
                          std::span<const ClipBatch> targets);

/// Static regret of agent p against the best pair under replayed losses.
double replay_static_regret(const RegretLedger& ledger, const Matrix& replayed, std::size_t p);

}  // namespace cognn
