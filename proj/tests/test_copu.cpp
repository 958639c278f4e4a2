#include <doctest.h>

#include <cmath>
#include <random>

#include "cognn/copu.hpp"

using namespace cognn;
using kernels::Exec;

namespace {

EngineConfig tiny_config(std::size_t n) {
    EngineConfig c;
    c.num_agents = n;
    c.window = 1;
    c.feature_dim = 1;
    c.ar_order = 1;
    c.num_copus = 1;
    return c;
}

ClipBatch random_clip(const EngineConfig& c, std::mt19937_64& rng, double a = 1.0) {
    std::uniform_real_distribution<double> u(-a, a);
    ClipBatch clip(c.num_agents, c.window, c.feature_dim);
    for (double& v : clip.values()) v = u(rng);
    return clip;
}

EngineConfig small_config(PredictorKind kind) {
    EngineConfig c;
    c.num_agents = 5;
    c.window = 4;
    c.feature_dim = 2;
    c.ar_order = 2;
    c.hidden_dim = 3;
    c.predictor_kind = kind;
    c.loss_scale = 0.5;
    c.eta = 0.1;
    return c;
}

bool row_simplex(const Matrix& w) {
    for (std::size_t p = 0; p < w.rows(); ++p) {
        double sum = 0.0;
        for (double v : w.row(p)) {
            if (!(v > 0.0 && v <= 1.0)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("zero parameters pass the input through") {
    for (auto kind : {PredictorKind::LinearAR, PredictorKind::TemporalConv}) {
        const EngineConfig c = small_config(kind);
        const CopuState s = make_zero_copu(c);
        std::mt19937_64 rng(1);
        const ClipBatch in = random_clip(c, rng);
        const CopuOutput out = copu_forward(s, in);
        CHECK(out.prediction.values().size() == in.values().size());
        for (std::size_t i = 0; i < in.values().size(); ++i)
            CHECK(out.prediction.values()[i] == in.values()[i]);
    }
}

TEST_CASE("single agent prediction is input plus the self-pair output") {
    EngineConfig c = tiny_config(1);
    CopuState s = make_zero_copu(c);
    s.theta.values = {0.5, -1.0, 0.25};  // A = [0.5, -1], b = 0.25
    const ClipBatch in(1, 1, 1, std::vector<double>{2.0});
    const CopuOutput out = copu_forward(s, in);
    // state [x, x - x] = [2, 0]
    CHECK(out.prediction.at(0, 0, 0) == doctest::Approx(2.0 + 1.0 + 0.25));
    CHECK(s.graph.normalized(0, 0) == 1.0);
}

TEST_CASE("two agent convex combination") {
    EngineConfig c = tiny_config(2);
    CopuState s = make_zero_copu(c);
    // state [x_p, x_q - x_p]; h = 2 * (x_q - x_p) + 1
    s.theta.values = {0.0, 2.0, 1.0};
    s.graph.assign(Matrix{{0.25, 0.75}, {0.5, 0.5}});
    const ClipBatch in(2, 1, 1, std::vector<double>{0.0, 1.0});
    const CopuOutput out = copu_forward(s, in);
    CHECK(out.pair_prediction(0, 0) == Matrix{{1.0}});
    CHECK(out.pair_prediction(0, 1) == Matrix{{3.0}});
    CHECK(out.prediction.at(0, 0, 0) == doctest::Approx(2.5));
}

TEST_CASE("graph update hand example") {
    EngineConfig c = tiny_config(2);
    c.eta = 0.5;
    c.loss_scale = 1.0;
    c.grad_clip = 1e-300;  // keep theta still
    CopuState s = make_zero_copu(c);
    s.theta.values = {0.0, 2.0, 1.0};
    const ClipBatch in(2, 1, 1, std::vector<double>{0.0, 1.0});
    // agent 0: pair losses (1 - 1)^2 = 0 and (3 - 1)^2 = 4 -> bounded [0, 1]
    const ClipBatch target(2, 1, 1, std::vector<double>{1.0, 1.0});
    CopuOutput out = copu_forward(s, in);
    const UpdateReport r = copu_update(s, out, target);
    CHECK(r.bounded_pair_losses(0, 0) == 0.0);
    CHECK(r.bounded_pair_losses(0, 1) == 1.0);
    CHECK(std::abs(s.graph.normalized(0, 0) - 0.62246) < 1e-5);
    CHECK(std::abs(s.graph.normalized(0, 1) - 0.37754) < 1e-5);
    const double e = std::exp(-0.5);
    CHECK(s.graph.normalized(0, 0) == doctest::Approx(0.5 / (0.5 + 0.5 * e)).epsilon(1e-14));
    CHECK(s.step_count == 1);
    REQUIRE(out.pair_losses.has_value());
    CHECK(out.pair_losses->per_pair(0, 1) == 4.0);
}

TEST_CASE("equal pair losses leave the row unchanged") {
    EngineConfig c = tiny_config(3);
    CopuState s = make_zero_copu(c);
    s.graph.assign(Matrix{{1, 2, 3}, {1, 1, 1}, {4, 1, 1}});
    const Matrix before = s.graph.normalized;
    // zero theta: every pair predicts the input, so all pairs share one loss
    const ClipBatch in(3, 1, 1, std::vector<double>{0.1, 0.2, 0.3});
    const ClipBatch target(3, 1, 1, std::vector<double>{0.4, 0.0, 0.9});
    CopuOutput out = copu_forward(s, in);
    copu_update(s, out, target);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(s.graph.normalized.values()[i] == doctest::Approx(before.values()[i]).epsilon(1e-14));
}

TEST_CASE("vanishing learning rate leaves the state unchanged") {
    EngineConfig c = small_config(PredictorKind::LinearAR);
    c.eta = 1e-12;
    std::mt19937_64 rng(4);
    CopuState s = make_copu(c, rng);
    const CopuState before = s;
    CopuOutput out = copu_forward(s, random_clip(c, rng));
    copu_update(s, out, random_clip(c, rng));
    for (std::size_t i = 0; i < s.theta.values.size(); ++i)
        CHECK(std::abs(s.theta.values[i] - before.theta.values[i]) < 1e-9);
    for (std::size_t i = 0; i < s.graph.normalized.size(); ++i)
        CHECK(std::abs(s.graph.normalized.values()[i] - before.graph.normalized.values()[i]) < 1e-9);
}

TEST_CASE("gradient clamp is applied per element after aggregation") {
    EngineConfig c = tiny_config(1);
    c.eta = 0.5;
    c.grad_clip = 1.0;
    CopuState s = make_zero_copu(c);
    const ClipBatch in(1, 1, 1, std::vector<double>{3.0});
    const ClipBatch target(1, 1, 1, std::vector<double>{5.0});
    CopuOutput out = copu_forward(s, in);
    copu_update(s, out, target);
    // raw gradient: dA = [2 * (0 - 2) * 3, 0], db = -4 -> clamped to [-1, 0, -1]
    CHECK(s.theta.values == std::vector<double>{0.5, 0.0, 0.5});
}

TEST_CASE("simplex, Jensen and monotone penalty over random streams") {
    for (auto kind : {PredictorKind::LinearAR, PredictorKind::TemporalConv})
        for (auto mode : {GraphMode::Learned, GraphMode::FrozenUniform, GraphMode::EndToEnd}) {
            EngineConfig c = small_config(kind);
            c.graph_mode = mode;
            std::mt19937_64 rng(99);
            CopuState s = make_copu(c, rng);
            bool simplex = true, jensen = true, monotone = true;
            for (int step = 0; step < 200; ++step) {
                const ClipBatch in = random_clip(c, rng);
                const ClipBatch target = random_clip(c, rng);
                CopuOutput out = copu_forward(s, in);
                const Matrix w = s.graph.normalized;
                for (std::size_t p = 0; p < c.num_agents; ++p) {
                    double mix = 0.0;
                    const Matrix y = target.agent_matrix(p);
                    for (std::size_t q = 0; q < c.num_agents; ++q)
                        mix += w(p, q) * loss_mse(out.pair_prediction(p, q), y);
                    if (loss_mse(out.prediction.agent_matrix(p), y) > mix + 1e-9) jensen = false;
                }
                const UpdateReport r = copu_update(s, out, target);
                simplex = simplex && row_simplex(s.graph.normalized);
                if (mode != GraphMode::Learned) continue;
                for (std::size_t p = 0; p < c.num_agents; ++p)
                    for (std::size_t a = 0; a < c.num_agents; ++a)
                        for (std::size_t b = 0; b < c.num_agents; ++b) {
                            if (!(r.bounded_pair_losses(p, a) < r.bounded_pair_losses(p, b))) continue;
                            const double old_ratio = w(p, a) / w(p, b);
                            const double new_ratio = s.graph.normalized(p, a) / s.graph.normalized(p, b);
                            if (!(new_ratio > old_ratio)) monotone = false;
                        }
            }
            CHECK(simplex);
            CHECK(jensen);
            CHECK(monotone);
            if (mode == GraphMode::FrozenUniform)
                for (double v : s.graph.normalized.values()) CHECK(v == 1.0 / c.num_agents);
        }
}

TEST_CASE("the one good pair takes over its row") {
    const std::size_t n = 20;
    EngineConfig c = tiny_config(n);
    c.eta = 0.1;
    c.loss_scale = 1.0;
    c.grad_clip = 1e-300;
    CopuState s = make_zero_copu(c);
    s.theta.values = {0.0, 1.0, 0.0};  // pair (p, q) predicts x_q
    std::mt19937_64 rng(8);
    std::vector<std::size_t> winner(n);
    for (std::size_t p = 0; p < n; ++p) winner[p] = (p * 7 + 3) % n;
    std::size_t reached = 0;
    for (std::size_t step = 1; step <= 500 && reached == 0; ++step) {
        // agents sit on distinct integers so every other pair is off by >= 1
        std::vector<double> x(n);
        const double shift = static_cast<double>(std::uniform_int_distribution<int>(-10, 10)(rng));
        for (std::size_t q = 0; q < n; ++q) x[q] = shift + static_cast<double>((q * 11) % n);
        std::vector<double> y(n);
        for (std::size_t p = 0; p < n; ++p) y[p] = x[winner[p]];
        CopuOutput out = copu_forward(s, ClipBatch(n, 1, 1, x));
        const UpdateReport r = copu_update(s, out, ClipBatch(n, 1, 1, y));
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q)
                REQUIRE(r.bounded_pair_losses(p, q) == (q == winner[p] ? 0.0 : 1.0));
        bool all = true;
        for (std::size_t p = 0; p < n; ++p) all = all && s.graph.normalized(p, winner[p]) > 0.95;
        if (all) reached = step;
    }
    CHECK(reached > 0);
    CHECK(reached <= 500);
}

TEST_CASE("serial and parallel updates are bit-identical") {
    for (auto kind : {PredictorKind::LinearAR, PredictorKind::TemporalConv})
        for (auto grad : {ThetaGradMode::WeightedSum, ThetaGradMode::PerPairSweep}) {
            EngineConfig c = small_config(kind);
            c.num_agents = 7;
            c.theta_grad = grad;
            std::mt19937_64 rng(12), data(13);
            CopuState a = make_copu(c, rng);
            CopuState b = a;
            for (int step = 0; step < 30; ++step) {
                const ClipBatch in = random_clip(c, data);
                const ClipBatch target = random_clip(c, data);
                CopuOutput oa = copu_forward(a, in, Exec::Serial);
                CopuOutput ob = copu_forward(b, in, Exec::Parallel);
                const UpdateReport ra = copu_update(a, oa, target, Exec::Serial);
                const UpdateReport rb = copu_update(b, ob, target, Exec::Parallel);
                REQUIRE(oa.prediction == ob.prediction);
                REQUIRE(ra.max_pair_grad_norm == rb.max_pair_grad_norm);
            }
            CHECK(a.theta.values == b.theta.values);
            CHECK(a.graph.weights == b.graph.weights);
        }
}

TEST_CASE("fused linear gradient matches the per-pair reduction") {
    EngineConfig c = small_config(PredictorKind::LinearAR);
    std::mt19937_64 rng(21);
    const CopuState s = make_copu(c, rng);
    const ClipBatch in = random_clip(c, rng);
    const ClipBatch target = random_clip(c, rng);
    CopuOutput out = copu_forward(s, in, Exec::Serial);
    const std::size_t n = c.num_agents, len = c.window * c.feature_dim;
    std::vector<double> residual(n * len);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t k = 0; k < len; ++k) residual[p * len + k] = target.agent(p)[k] - in.agent(p)[k];
    Matrix w(n, n);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (double& v : w.values()) v = u(rng);
    w = normalize_rows(w);

    const auto& shape = s.theta.shape;
    std::vector<double> buffer, fused(shape.size());
    const double max_norm = kernels::weighted_gradient(
        shape, s.theta.span(), out.pair_states, out.pair_displacements, out.activations, residual,
        w.values(), n, buffer, fused, Exec::Serial);

    double want_max = 0.0;
    std::vector<double> want(shape.size(), 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
            Matrix t(c.window, c.feature_dim);
            for (std::size_t k = 0; k < len; ++k) t.values()[k] = residual[p * len + k];
            const Matrix x_p = in.agent_matrix(p), x_q = in.agent_matrix(q);
            const ParamVector g = grad_theta(c.predictor_kind, s.theta, combine_ar(x_p, x_q, c.ar_order), t);
            double sq = 0.0;
            for (std::size_t j = 0; j < g.values.size(); ++j) {
                want[j] += w(p, q) * g.values[j];
                sq += g.values[j] * g.values[j];
            }
            want_max = std::max(want_max, std::sqrt(sq));
        }
    for (std::size_t j = 0; j < want.size(); ++j)
        CHECK(fused[j] == doctest::Approx(want[j]).epsilon(1e-10));
    CHECK(max_norm == doctest::Approx(want_max).epsilon(1e-10));
}

TEST_CASE("identical seeds give identical trajectories") {
    EngineConfig c = small_config(PredictorKind::TemporalConv);
    auto trajectory = [&] {
        std::mt19937_64 rng(c.seed), data(77);
        CopuState s = make_copu(c, rng);
        for (int step = 0; step < 20; ++step) {
            CopuOutput out = copu_forward(s, random_clip(c, data));
            copu_update(s, out, random_clip(c, data));
        }
        return s;
    };
    const CopuState a = trajectory(), b = trajectory();
    CHECK(a.theta.values == b.theta.values);
    CHECK(a.graph.weights == b.graph.weights);
}

TEST_CASE("dimension and numerical failures") {
    EngineConfig c = small_config(PredictorKind::LinearAR);
    const CopuState s = make_zero_copu(c);
    CHECK_THROWS_AS(copu_forward(s, ClipBatch(4, 4, 2)), DimensionError);

    CopuState blow = make_zero_copu(c);
    blow.theta.values.back() = 1e200;
    std::mt19937_64 rng(2);
    CopuOutput out = copu_forward(blow, random_clip(c, rng));
    CHECK_THROWS_AS(copu_update(blow, out, random_clip(c, rng)), NumericalError);
}
