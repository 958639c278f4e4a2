#include "cognn/graph_score.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace cognn {

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mann-Whitney U with mid-ranks for ties.
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) {
                pos_rank_sum += mid;
                ++pos;
            }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return std::numeric_limits<double>::quiet_NaN();
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

GraphScore score_graph(const Matrix& weights, const Matrix& truth) {
    const std::size_t n = weights.rows();
    if (weights.cols() != n || truth.rows() != n || truth.cols() != n)
        throw DimensionError("graph score: weights and truth must be the same square size");
    std::vector<double> scores;
    std::vector<bool> labels;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
            scores.push_back(0.5 * (weights(p, q) + weights(q, p)));
            labels.push_back(truth(p, q) > 0.0);
        }
    GraphScore out;
    out.edges = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    out.auc = roc_auc(scores, labels);
    if (out.edges == 0) {
        out.topk_precision = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < out.edges; ++i) hits += labels[order[i]] ? 1 : 0;
    out.topk_precision = static_cast<double>(hits) / static_cast<double>(out.edges);
    return out;
}

std::map<std::uint64_t, Matrix> load_snapshots(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    struct Row {
        std::uint64_t step;
        std::size_t p, q;
        double w;
    };
    std::vector<Row> rows;
    std::size_t n = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind("step", 0) == 0) continue;
        std::istringstream ls(line);
        Row r{};
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ls >> r.step >> c1 >> r.p >> c2 >> r.q >> c3 >> r.w) || c1 != ',' || c2 != ',' ||
            c3 != ',')
            throw DataError("snapshot " + path.string() + ": bad row at line " +
                            std::to_string(lineno));
        n = std::max({n, r.p + 1, r.q + 1});
        rows.push_back(r);
    }
    std::map<std::uint64_t, Matrix> out;
    std::map<std::uint64_t, std::size_t> counts;
    for (const Row& r : rows) {
        auto [it, _] = out.try_emplace(r.step, Matrix(n, n));
        it->second(r.p, r.q) = r.w;
        ++counts[r.step];
    }
    for (const auto& [step, count] : counts)
        if (count != n * n)
            throw DataError("snapshot " + path.string() + ": step " + std::to_string(step) +
                            " has " + std::to_string(count) + " entries, expected " +
                            std::to_string(n * n));
    return out;
}

std::vector<std::optional<std::uint64_t>> select_snapshots(
    const std::vector<std::uint64_t>& steps, std::size_t frames_per_segment,
    std::size_t score_after, std::size_t segments) {
    if (frames_per_segment == 0) throw ConfigError("graph score: frames_per_segment must be positive");
    std::vector<std::optional<std::uint64_t>> out(segments);
    for (std::uint64_t s : steps) {
        if (s == 0) continue;
        const std::uint64_t window = s - 1;
        const std::size_t seg = static_cast<std::size_t>(window / frames_per_segment);
        const std::size_t offset = static_cast<std::size_t>(window % frames_per_segment);
        if (seg >= segments || offset < score_after) continue;
        if (!out[seg] || *out[seg] < s) out[seg] = s;
    }
    return out;
}

}  // namespace cognn
