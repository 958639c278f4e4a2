#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cognn/predictors.hpp"

using namespace cognn;

namespace {

ParamShape linear_shape(std::size_t window, std::size_t in_width, std::size_t out_width) {
    ParamShape s;
    s.kind = PredictorKind::LinearAR;
    s.window = window;
    s.in_width = in_width;
    s.out_width = out_width;
    return s;
}

ParamShape conv_shape(std::size_t window, std::size_t in_width, std::size_t out_width,
                      std::size_t hidden, std::size_t kernel) {
    ParamShape s = linear_shape(window, in_width, out_width);
    s.kind = PredictorKind::TemporalConv;
    s.hidden = hidden;
    s.kernel = kernel;
    return s;
}

// Direct evaluation of the two-layer convolution, written independently of
// the library kernels.
Matrix conv_oracle(const ParamShape& s, const std::vector<double>& th, const Matrix& x) {
    const std::size_t T = s.window, C = s.in_width, H = s.hidden, K = s.kernel, O = s.out_width;
    const long half = static_cast<long>(K / 2);
    auto w1 = [&](std::size_t h, std::size_t c, std::size_t k) { return th[(h * C + c) * K + k]; };
    auto b1 = [&](std::size_t h) { return th[H * C * K + h]; };
    const std::size_t off2 = H * C * K + H;
    auto w2 = [&](std::size_t o, std::size_t h, std::size_t k) { return th[off2 + (o * H + h) * K + k]; };
    auto b2 = [&](std::size_t o) { return th[off2 + O * H * K + o]; };
    Matrix hid(T, H);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t h = 0; h < H; ++h) {
            double acc = b1(h);
            for (std::size_t k = 0; k < K; ++k) {
                const long src = static_cast<long>(t) + static_cast<long>(k) - half;
                if (src < 0 || src >= static_cast<long>(T)) continue;
                for (std::size_t c = 0; c < C; ++c) acc += w1(h, c, k) * x(src, c);
            }
            hid(t, h) = std::tanh(acc);
        }
    Matrix out(T, O);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t o = 0; o < O; ++o) {
            double acc = b2(o);
            for (std::size_t k = 0; k < K; ++k) {
                const long src = static_cast<long>(t) + static_cast<long>(k) - half;
                if (src < 0 || src >= static_cast<long>(T)) continue;
                for (std::size_t h = 0; h < H; ++h) acc += w2(o, h, k) * hid(src, h);
            }
            out(t, o) = acc;
        }
    return out;
}

Matrix linear_oracle(const ParamShape& s, const std::vector<double>& th, const Matrix& x) {
    const std::size_t in = s.window * s.in_width, out = s.window * s.out_width;
    Matrix y(s.window, s.out_width);
    for (std::size_t r = 0; r < out; ++r) {
        double acc = th[out * in + r];
        for (std::size_t c = 0; c < in; ++c) acc += th[r * in + c] * x.values()[c];
        y.values()[r] = acc;
    }
    return y;
}

double oracle_loss(const ParamShape& s, const std::vector<double>& th, const Matrix& x,
                   const Matrix& target) {
    const Matrix y = s.kind == PredictorKind::LinearAR ? linear_oracle(s, th, x) : conv_oracle(s, th, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y.values()[i] - target.values()[i];
        acc += e * e;
    }
    return acc / static_cast<double>(y.size());
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double a = 1.0) {
    std::uniform_real_distribution<double> u(-a, a);
    Matrix m(r, c);
    for (double& v : m.values()) v = u(rng);
    return m;
}

ParamShape random_shape(PredictorKind kind, std::mt19937_64& rng) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t window = pick(1, 4), out = pick(1, 3), in = pick(1, 6);
    if (kind == PredictorKind::LinearAR) return linear_shape(window, in, out);
    return conv_shape(window, in, out, pick(1, 4), pick(0, 1) == 0 ? 1 : 3);
}

// Central differences against the oracle loss; returns the number of
// partials outside tolerance.
int finite_difference_failures(const ParamShape& s, const ParamVector& theta, const PairState& state,
                               const Matrix& target) {
    const ParamVector g = grad_theta(s.kind, theta, state, target);
    const double h = 1e-6;
    int failures = 0;
    for (std::size_t i = 0; i < theta.values.size(); ++i) {
        std::vector<double> plus = theta.values, minus = theta.values;
        plus[i] += h;
        minus[i] -= h;
        const double numeric =
            (oracle_loss(s, plus, state.data, target) - oracle_loss(s, minus, state.data, target)) /
            (2.0 * h);
        const double analytic = g.values[i];
        const double err = std::abs(analytic - numeric);
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        if (err > 1e-8 && err > 1e-5 * scale) ++failures;
    }
    return failures;
}

}  // namespace

TEST_CASE("combine_ar examples") {
    const PairState s = combine_ar(Matrix{{1}}, Matrix{{3}}, 2);
    CHECK(s.data == Matrix{{1, 2, 4}});

    const PairState unit = combine_ar(Matrix{{0}}, Matrix{{1}}, 10);
    REQUIRE(unit.data.cols() == 11);
    CHECK(unit.data(0, 0) == 0.0);
    for (std::size_t c = 1; c < 11; ++c) CHECK(unit.data(0, c) == 1.0);

    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(4, 3, rng);
    const PairState same = combine_ar(x, x, 3);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t c = 0; c < 12; ++c) CHECK(same.data(t, c) == (c < 3 ? x(t, c) : 0.0));

    const Matrix y = random_matrix(4, 3, rng);
    const PairState d1 = combine_ar(x, y, 1);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t f = 0; f < 3; ++f) {
            CHECK(d1.data(t, f) == x(t, f));
            CHECK(d1.data(t, 3 + f) == y(t, f) - x(t, f));
        }

    CHECK_THROWS_AS(combine_ar(Matrix{{1}}, Matrix{{1, 2}}, 1), DimensionError);
    CHECK_THROWS_AS(combine_ar(Matrix{{1}}, Matrix{{1}}, 0), DimensionError);
}

TEST_CASE("combine_ar uses elementwise powers") {
    const PairState s = combine_ar(Matrix{{1, 2}}, Matrix{{3, -1}}, 3);
    CHECK(s.data == Matrix{{1, 2, 2, -3, 4, 9, 8, -27}});
}

TEST_CASE("combine_concat examples") {
    CHECK(combine_concat(Matrix{{1, 2}}, Matrix{{3, 4}}).data == Matrix{{1, 2, 3, 4}});
    const PairState z = combine_concat(Matrix(3, 2), Matrix(3, 2));
    for (double v : z.data.values()) CHECK(v == 0.0);
    const PairState same = combine_concat(Matrix{{5, 6}}, Matrix{{5, 6}});
    CHECK(same.data == Matrix{{5, 6, 5, 6}});
    CHECK_THROWS_AS(combine_concat(Matrix{{1}}, Matrix{{1}, {2}}), DimensionError);
}

TEST_CASE("predict_linear examples") {
    const ParamShape s = linear_shape(1, 3, 1);
    ParamVector theta{s, {1, 1, 1, 0.5}};
    CHECK(predict_linear(theta, PairState{Matrix{{1, 2, 4}}}) == Matrix{{7.5}});

    const Matrix zero = predict_linear(zero_params(s), PairState{Matrix{{1, 2, 4}}});
    CHECK(zero == Matrix{{0}});

    // Selecting the x_p block of an order-1 AR state returns x_p.
    const ParamShape sel = linear_shape(2, 4, 2);
    ParamVector id = zero_params(sel);
    const std::size_t in = 8;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < 2; ++f) id.values[(t * 2 + f) * in + t * 4 + f] = 1.0;
    const Matrix xp{{1.5, -2}, {0.25, 3}};
    const PairState st = combine_ar(xp, Matrix{{0, 0}, {1, 1}}, 1);
    CHECK(predict_linear(id, st) == xp);

    CHECK_THROWS_AS(predict_linear(theta, PairState{Matrix{{1, 2}}}), DimensionError);
}

TEST_CASE("predict_tc examples") {
    const ParamShape s = conv_shape(4, 2, 1, 1, 1);
    CHECK(predict_tc(zero_params(s), PairState{Matrix(4, 2, 0.3)}) == Matrix(4, 1));

    // conv1 weight 0 and bias 40 saturate tanh to 1; conv2 weight 2, bias 0.
    ParamVector theta{s, {0, 0, 40, 2, 0}};
    const Matrix out = predict_tc(theta, PairState{Matrix{{1, 2}, {3, 4}, {5, 6}, {7, 8}}});
    for (double v : out.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("predictors agree with the direct oracles") {
    std::mt19937_64 rng(11);
    for (auto kind : {PredictorKind::LinearAR, PredictorKind::TemporalConv})
        for (int trial = 0; trial < 50; ++trial) {
            const ParamShape s = random_shape(kind, rng);
            ParamVector theta{s, {}};
            theta.values.resize(s.size());
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            for (double& v : theta.values) v = u(rng);
            const Matrix x = random_matrix(s.window, s.in_width, rng);
            const Matrix got = predict(theta, PairState{x});
            const Matrix want = kind == PredictorKind::LinearAR ? linear_oracle(s, theta.values, x)
                                                                : conv_oracle(s, theta.values, x);
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
        }
}

TEST_CASE("loss_mse and bounded_loss examples") {
    CHECK(loss_mse(Matrix{{1, 2}}, Matrix{{1, 2}}) == 0.0);
    CHECK(loss_mse(Matrix{{1}}, Matrix{{3}}) == 4.0);
    CHECK(loss_mse(Matrix{{1, 1}}, Matrix{{0, 2}}) == 1.0);
    CHECK_THROWS_AS(loss_mse(Matrix{{1}}, Matrix{{1, 2}}), DimensionError);

    CHECK(bounded_loss(0.0, 1.0) == 0.0);
    CHECK(bounded_loss(0.5, 1.0) == 0.5);
    CHECK(bounded_loss(7.0, 1.0) == 1.0);
    CHECK_THROWS_AS(bounded_loss(-1.0, 1.0), DomainError);
    CHECK_THROWS_AS(bounded_loss(1.0, 0.0), DomainError);

    double prev = 0.0;
    for (double raw = 0.0; raw < 5.0; raw += 0.01) {
        const double b = bounded_loss(raw, 2.0);
        CHECK(b >= prev);
        CHECK(b <= 1.0);
        prev = b;
    }
}

TEST_CASE("grad_theta hand example") {
    const ParamShape s = linear_shape(1, 1, 1);
    const ParamVector g = grad_theta(PredictorKind::LinearAR, zero_params(s), PairState{Matrix{{1}}},
                                     Matrix{{2}});
    CHECK(g.values == std::vector<double>{-4.0, -4.0});

    ParamVector theta{s, {2.0, 0.0}};
    const ParamVector at_min =
        grad_theta(PredictorKind::LinearAR, theta, PairState{Matrix{{1}}}, Matrix{{2}});
    CHECK(at_min.values == std::vector<double>{0.0, 0.0});
}

TEST_CASE("grad_theta matches finite differences on 100 fixtures per kind") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto kind : {PredictorKind::LinearAR, PredictorKind::TemporalConv}) {
        int failures = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const ParamShape s = random_shape(kind, rng);
            ParamVector theta{s, std::vector<double>(s.size())};
            for (double& v : theta.values) v = u(rng);
            const PairState state{random_matrix(s.window, s.in_width, rng)};
            const Matrix target = random_matrix(s.window, s.out_width, rng);
            failures += finite_difference_failures(s, theta, state, target);
        }
        CHECK(failures == 0);
    }
}

TEST_CASE("linear loss is convex along random segments") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lam(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const ParamShape s = random_shape(PredictorKind::LinearAR, rng);
        std::vector<double> a(s.size()), b(s.size()), mix(s.size());
        for (double& v : a) v = u(rng);
        for (double& v : b) v = u(rng);
        const double l = lam(rng);
        for (std::size_t i = 0; i < s.size(); ++i) mix[i] = l * a[i] + (1.0 - l) * b[i];
        const PairState state{random_matrix(s.window, s.in_width, rng)};
        const Matrix target = random_matrix(s.window, s.out_width, rng);
        auto loss = [&](const std::vector<double>& th) {
            return loss_mse(predict_linear(ParamVector{s, th}, state), target);
        };
        CHECK(loss(mix) <= l * loss(a) + (1.0 - l) * loss(b) + 1e-9);
    }
}

TEST_CASE("init_params draws within the fan-in bound") {
    EngineConfig c;
    c.predictor_kind = PredictorKind::TemporalConv;
    c.hidden_dim = 8;
    const ParamShape s = ParamShape::for_config(c);
    std::mt19937_64 rng(1), rng2(1);
    const ParamVector a = init_params(s, rng);
    const ParamVector b = init_params(s, rng2);
    CHECK(a.values == b.values);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(s.in_width * s.kernel));
    for (std::size_t i = 0; i < s.hidden * s.in_width * s.kernel; ++i)
        CHECK(std::abs(a.values[i]) <= bound1);
}
