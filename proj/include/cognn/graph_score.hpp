#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "cognn/core.hpp"

namespace cognn {

/// Probability that a random positive outranks a random negative, ties
/// counting one half. NaN when either class is empty.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct GraphScore {
    double auc = 0.0;
    /// Fraction of true edges among the k highest scores, k = edge count.
    double topk_precision = 0.0;
    std::size_t edges = 0;
};

/// Scores the symmetrized off-diagonal weights (w[p][q] + w[q][p]) / 2
/// against a symmetric 0/1 adjacency, one entry per unordered pair.
GraphScore score_graph(const Matrix& weights, const Matrix& truth);

/// step -> N x N weights, read from `step,p,q,weight` rows.
std::map<std::uint64_t, Matrix> load_snapshots(const std::filesystem::path& path);

/// For each segment, the latest snapshot taken after a window that starts at
/// least `score_after` frames into the segment. A snapshot at step s follows
/// the window starting at frame s - 1.
std::vector<std::optional<std::uint64_t>> select_snapshots(
    const std::vector<std::uint64_t>& steps, std::size_t frames_per_segment,
    std::size_t score_after, std::size_t segments);

}  // namespace cognn
