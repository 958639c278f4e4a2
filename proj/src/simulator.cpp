#include "cognn/simulator.hpp"

#include <cmath>
#include <sstream>

namespace cognn {

namespace {

constexpr std::size_t kDims = 2;

void sample_adjacency(SpringSystem& s) {
    const std::size_t n = s.params.agents;
    std::bernoulli_distribution edge(s.edge_prob);
    s.adjacency = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = edge(s.rng) ? 1.0 : 0.0;
            s.adjacency(i, j) = a;
            s.adjacency(j, i) = a;
        }
}

void accelerations(const SpringSystem& s, Matrix& acc) {
    const std::size_t n = s.params.agents;
    for (std::size_t i = 0; i < n; ++i) {
        double ax = 0.0, ay = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = s.adjacency(i, j);
            if (a == 0.0) continue;
            ax -= a * (s.positions(i, 0) - s.positions(j, 0));
            ay -= a * (s.positions(i, 1) - s.positions(j, 1));
        }
        acc(i, 0) = s.params.spring_k * ax;
        acc(i, 1) = s.params.spring_k * ay;
    }
}

// Folds a coordinate back into [-box, box], flipping the velocity sign once
// per reflection.
void reflect(double& x, double& v, double box) {
    if (!std::isfinite(x)) return;
    while (x > box || x < -box) {
        if (x > box) x = 2.0 * box - x;
        else x = -2.0 * box - x;
        v = -v;
    }
}

}  // namespace

void SpringParams::validate() const {
    if (agents == 0) throw ConfigError("sim: agents must be positive");
    if (!(spring_k >= 0.0)) throw ConfigError("sim: spring_k must be non-negative");
    if (!(dt > 0.0)) throw ConfigError("sim: dt must be positive");
    if (sample_every == 0) throw ConfigError("sim: sample_every must be positive");
    if (!(box_half > 0.0)) throw ConfigError("sim: box_half must be positive");
    if (!(init_pos_half > 0.0) || init_pos_half > box_half)
        throw ConfigError("sim: init_pos_half must lie in (0, box_half]");
    if (!(init_vel_std >= 0.0)) throw ConfigError("sim: init_vel_std must be non-negative");
    if (!(frame_scale > 0.0) || !std::isfinite(frame_scale))
        throw ConfigError("sim: frame_scale must be positive");
}

void SimSchedule::validate() const {
    if (num_rewirings == 0) throw ConfigError("sim: num_rewirings must be positive");
    if (frames_per_segment == 0) throw ConfigError("sim: frames_per_segment must be positive");
    if (num_runs == 0) throw ConfigError("sim: num_runs must be positive");
    if (!(edge_prob > 0.0 && edge_prob < 1.0)) throw ConfigError("sim: edge_prob must lie in (0, 1)");
}

SpringSystem init_system(const SimSchedule& schedule, const SpringParams& params,
                         std::uint64_t seed) {
    schedule.validate();
    params.validate();
    SpringSystem s;
    s.params = params;
    s.edge_prob = schedule.edge_prob;
    s.rng.seed(seed);
    const std::size_t n = params.agents;
    s.positions = Matrix(n, kDims);
    s.velocities = Matrix(n, kDims);
    std::uniform_real_distribution<double> pos(-params.init_pos_half, params.init_pos_half);
    std::normal_distribution<double> vel(0.0, params.init_vel_std);
    for (double& x : s.positions.values()) x = pos(s.rng);
    for (double& v : s.velocities.values()) v = params.init_vel_std > 0.0 ? vel(s.rng) : 0.0;
    sample_adjacency(s);
    return s;
}

void rewire(SpringSystem& system) { sample_adjacency(system); }

void step_integrate(SpringSystem& s) {
    const std::size_t n = s.params.agents;
    const double dt = s.params.dt;
    Matrix acc(n, kDims);
    accelerations(s, acc);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < kDims; ++k) {
            s.velocities(i, k) += 0.5 * dt * acc(i, k);
            s.positions(i, k) += dt * s.velocities(i, k);
            reflect(s.positions(i, k), s.velocities(i, k), s.params.box_half);
        }
    accelerations(s, acc);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < kDims; ++k) {
            s.velocities(i, k) += 0.5 * dt * acc(i, k);
            if (!std::isfinite(s.positions(i, k)) || !std::isfinite(s.velocities(i, k))) {
                std::ostringstream msg;
                msg << "spring simulation blew up (dt = " << dt << ")";
                throw NumericalError(msg.str());
            }
        }
}

double spring_energy(const SpringSystem& s) {
    const std::size_t n = s.params.agents;
    double kinetic = 0.0, potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        kinetic += 0.5 * (s.velocities(i, 0) * s.velocities(i, 0) +
                          s.velocities(i, 1) * s.velocities(i, 1));
        for (std::size_t j = i + 1; j < n; ++j) {
            if (s.adjacency(i, j) == 0.0) continue;
            const double dx = s.positions(i, 0) - s.positions(j, 0);
            const double dy = s.positions(i, 1) - s.positions(j, 1);
            potential += 0.5 * s.params.spring_k * (dx * dx + dy * dy);
        }
    }
    return kinetic + potential;
}

SimRun simulate_run(const SimSchedule& schedule, const SpringParams& params, std::uint64_t seed) {
    SpringSystem s = init_system(schedule, params, seed);
    const std::size_t n = params.agents;
    const std::size_t frames = schedule.total_frames();
    SimRun run;
    run.frames.agents = n;
    run.frames.features = kDims;
    run.frames.values = Matrix(frames, n * kDims);
    run.adjacencies.push_back(s.adjacency);
    for (std::size_t f = 0; f < frames; ++f) {
        if (f > 0) {
            for (std::size_t k = 0; k < params.sample_every; ++k) step_integrate(s);
            if (f % schedule.frames_per_segment == 0) {
                rewire(s);
                run.adjacencies.push_back(s.adjacency);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < kDims; ++k)
                run.frames.values(f, i * kDims + k) = params.frame_scale * s.positions(i, k);
    }
    return run;
}

std::vector<StreamItem> generate_stream(const SimSchedule& schedule, const SpringParams& params,
                                        std::uint64_t seed, std::size_t delta) {
    const SimRun run = simulate_run(schedule, params, seed);
    std::vector<StreamItem> items;
    const std::size_t count = window_count(run.frames.length(), delta);
    items.reserve(count);
    for (std::size_t w = 0; w < count; ++w)
        items.push_back({run.frames.clip(w, delta), run.frames.clip(w + delta, delta),
                         run.adjacencies[w / schedule.frames_per_segment]});
    return items;
}

}  // namespace cognn
