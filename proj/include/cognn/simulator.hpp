#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cognn/core.hpp"
#include "cognn/dataio.hpp"

namespace cognn {

/// Physical constants of the spring system.
struct SpringParams {
    std::size_t agents = 20;
    double spring_k = 0.1;
    double dt = 0.001;
    std::size_t sample_every = 100;
    double box_half = 5.0;
    /// Initial positions ~ U(-init_pos_half, init_pos_half) per component.
    double init_pos_half = 1.0;
    /// Initial velocities ~ N(0, init_vel_std^2) per component.
    double init_vel_std = 0.5;
    /// Length unit of emitted frames: positions are multiplied by this on output.
    double frame_scale = 50.0;

    void validate() const;
};

struct SimSchedule {
    std::size_t num_rewirings = 20;
    std::size_t frames_per_segment = 250;
    std::size_t num_runs = 10;
    double edge_prob = 0.2;

    void validate() const;
    std::size_t total_frames() const noexcept { return num_rewirings * frames_per_segment; }
};

struct SpringSystem {
    SpringParams params;
    double edge_prob = 0.2;
    Matrix positions;   // N x 2
    Matrix velocities;  // N x 2
    Matrix adjacency;   // N x N, symmetric 0/1, zero diagonal
    std::mt19937_64 rng;
};

SpringSystem init_system(const SimSchedule& schedule, const SpringParams& params,
                         std::uint64_t seed);

/// Resamples the adjacency from the system's own generator.
void rewire(SpringSystem& system);

/// One leapfrog (kick-drift-kick) step with elastic reflection at the walls.
void step_integrate(SpringSystem& system);

double spring_energy(const SpringSystem& system);

/// Frames of one run plus the adjacency of every segment.
struct SimRun {
    SeriesTable frames;
    std::vector<Matrix> adjacencies;
};

SimRun simulate_run(const SimSchedule& schedule, const SpringParams& params, std::uint64_t seed);

struct StreamItem {
    ClipBatch input;
    ClipBatch target;
    /// Adjacency active at the first frame of the input window.
    Matrix adjacency;
};

/// Stride-1 windows of length `delta` in and out over one simulated run.
std::vector<StreamItem> generate_stream(const SimSchedule& schedule, const SpringParams& params,
                                        std::uint64_t seed, std::size_t delta = 10);

}  // namespace cognn
