#include "cognn/regret.hpp"

#include <cmath>
#include <string>

namespace cognn {

RegretLedger::RegretLedger(std::size_t agents)
    : agents_(agents), pair_(agents, agents), ensemble_(agents, 0.0), mixture_(agents, 0.0) {
    if (agents == 0) throw DimensionError("regret ledger: agent count must be positive");
}

void RegretLedger::record_step(const LossMatrix& bounded, double theta_norm, double grad_norm,
                               const Matrix* mix_weights) {
    if (bounded.per_pair.rows() != agents_ || bounded.per_pair.cols() != agents_ ||
        bounded.per_agent_ensemble.size() != agents_)
        throw DimensionError("regret ledger: loss shapes do not match agent count");
    if (mix_weights != nullptr &&
        (mix_weights->rows() != agents_ || mix_weights->cols() != agents_))
        throw DimensionError("regret ledger: weight shape does not match agent count");
    for (double v : bounded.per_pair.values())
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("regret ledger: negative pair loss");
    for (double v : bounded.per_agent_ensemble)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("regret ledger: negative ensemble loss");

    for (std::size_t p = 0; p < agents_; ++p) {
        double mix = 0.0;
        for (std::size_t q = 0; q < agents_; ++q) {
            pair_(p, q) += bounded.per_pair(p, q);
            if (mix_weights != nullptr) mix += (*mix_weights)(p, q) * bounded.per_pair(p, q);
        }
        mixture_[p] += mix;
        ensemble_[p] += bounded.per_agent_ensemble[p];
    }
    if (mix_weights == nullptr) tracks_mixture_ = false;
    c_theta_ = std::max(c_theta_, theta_norm);
    grad_l_ = std::max(grad_l_, grad_norm);
    ++steps_;
}

void RegretLedger::require_history() const {
    if (steps_ == 0) throw DomainError("regret ledger: no steps recorded");
}

void RegretLedger::require_agent(std::size_t p) const {
    if (p >= agents_) throw DimensionError("regret ledger: agent " + std::to_string(p) +
                                           " out of range");
}

RegretLedger::BestPair RegretLedger::best_pair_in_hindsight(std::size_t p) const {
    require_history();
    require_agent(p);
    BestPair best{0, pair_(p, 0)};
    for (std::size_t q = 1; q < agents_; ++q)
        if (pair_(p, q) < best.cumulative_loss) best = {q, pair_(p, q)};
    return best;
}

double RegretLedger::static_regret(std::size_t p) const {
    const BestPair best = best_pair_in_hindsight(p);
    return (ensemble_[p] - best.cumulative_loss) / static_cast<double>(steps_);
}

double RegretLedger::mean_static_regret() const {
    require_history();
    double acc = 0.0;
    for (std::size_t p = 0; p < agents_; ++p) acc += static_regret(p);
    return acc / static_cast<double>(agents_);
}

double RegretLedger::mixture_gap(std::size_t p, std::size_t k) const {
    require_history();
    require_agent(p);
    require_agent(k);
    if (!tracks_mixture_)
        throw DomainError("regret ledger: mixture sums need the step weights on every record");
    return (mixture_[p] - pair_(p, k)) / static_cast<double>(steps_);
}

double theoretical_bound(const RegretLedger& ledger, double eta, double n) {
    if (ledger.history_len() == 0) throw DomainError("theoretical_bound: empty ledger");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("theoretical_bound: eta must lie in (0, 1)");
    const double t = static_cast<double>(ledger.history_len());
    const double c = ledger.measured_c_theta();
    const double l = ledger.measured_l();
    return std::log(n) / (eta * t) + c * c / (2.0 * eta * t) + eta * l * l / 2.0 + eta;
}

double mixture_gap_bound(const RegretLedger& ledger, double eta, double n) {
    if (ledger.history_len() == 0) throw DomainError("mixture_gap_bound: empty ledger");
    const double t = static_cast<double>(ledger.history_len());
    return eta + std::log(n) / (eta * t);
}

Matrix replay_pair_losses(const CopuState& final_state, std::span<const ClipBatch> inputs,
                          std::span<const ClipBatch> targets) {
    if (inputs.size() != targets.size())
        throw DimensionError("replay: input and target counts differ");
    const std::size_t n = final_state.config.num_agents;
    Matrix cumulative(n, n);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const CopuOutput out = copu_forward(final_state, inputs[t]);
        for (std::size_t p = 0; p < n; ++p) {
            const Matrix truth = targets[t].agent_matrix(p);
            for (std::size_t q = 0; q < n; ++q)
                cumulative(p, q) += bounded_loss(loss_mse(out.pair_prediction(p, q), truth),
                                                 final_state.config.loss_scale);
        }
    }
    return cumulative;
}

double replay_static_regret(const RegretLedger& ledger, const Matrix& replayed, std::size_t p) {
    if (ledger.history_len() == 0) throw DomainError("replay regret: empty ledger");
    if (replayed.rows() != ledger.agents() || p >= ledger.agents())
        throw DimensionError("replay regret: shape mismatch");
    double best = replayed(p, 0);
    for (std::size_t q = 1; q < replayed.cols(); ++q) best = std::min(best, replayed(p, q));
    return (ledger.cumulative_ensemble_loss()[p] - best) /
           static_cast<double>(ledger.history_len());
}

}  // namespace cognn
