#include "cognn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include "cognn/cognn.hpp"
#include "cognn/regret.hpp"
#include "cognn/simulator.hpp"

namespace cognn {

namespace fs = std::filesystem;

namespace {

// Writes to <path>.tmp and renames on commit, so a crashed run never leaves a
// truncated file under the final name.
class AtomicFile {
public:
    explicit AtomicFile(fs::path path) : path_(std::move(path)), tmp_(path_) {
        tmp_ += ".tmp";
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot write " + tmp_.string());
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        if (!out_) throw IoError("write failed for " + tmp_.string());
        std::error_code ec;
        fs::rename(tmp_, path_, ec);
        if (ec) throw IoError("cannot rename " + tmp_.string() + ": " + ec.message());
    }

private:
    fs::path path_;
    fs::path tmp_;
    std::ofstream out_;
};

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string two_digits(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}

void write_adjacency(const fs::path& path, const Matrix& a) {
    SeriesTable t;
    t.values = a;
    t.agents = a.cols();
    t.features = 1;
    write_csv_series(path, t);
}

ClipBatch zero_velocity(const ClipBatch& input) {
    ClipBatch out(input.agents(), input.window(), input.features(),
                  input.start_time() + static_cast<std::int64_t>(input.window()));
    const std::size_t last = input.window() - 1;
    for (std::size_t p = 0; p < input.agents(); ++p)
        for (std::size_t t = 0; t < input.window(); ++t)
            for (std::size_t f = 0; f < input.features(); ++f)
                out.at(p, t, f) = input.at(p, last, f);
    return out;
}

// Long rows step,agent,horizon,metric,value: per-agent rows use horizon 0,
// per-horizon rows use agent -1, and the step total uses both.
void append_metric_rows(std::string& buf, std::size_t step, const ClipBatch& pred,
                        const ClipBatch& truth, double mape_floor) {
    const std::size_t n = pred.agents(), w = pred.window(), d = pred.features();
    std::vector<double> h_sq(w, 0.0), h_abs(w, 0.0);
    double all_sq = 0.0, all_abs = 0.0, all_pct = 0.0;
    const std::string prefix = std::to_string(step) + ",";
    auto row = [&](const std::string& head, const char* metric, double v) {
        buf += prefix + head + metric + "," + format_number(v) + "\n";
    };
    for (std::size_t p = 0; p < n; ++p) {
        double sq = 0.0, ab = 0.0;
        for (std::size_t t = 0; t < w; ++t)
            for (std::size_t f = 0; f < d; ++f) {
                const double y = truth.at(p, t, f);
                const double e = pred.at(p, t, f) - y;
                sq += e * e;
                ab += std::abs(e);
                h_sq[t] += e * e;
                h_abs[t] += std::abs(e);
                all_pct += std::abs(e) / std::max(std::abs(y), mape_floor);
            }
        all_sq += sq;
        all_abs += ab;
        const double c = static_cast<double>(w * d);
        const std::string head = std::to_string(p) + ",0,";
        row(head, "mse", sq / c);
        row(head, "mae", ab / c);
    }
    for (std::size_t t = 0; t < w; ++t) {
        const double c = static_cast<double>(n * d);
        const std::string head = "-1," + std::to_string(t + 1) + ",";
        row(head, "mse", h_sq[t] / c);
        row(head, "mae", h_abs[t] / c);
    }
    const double c = static_cast<double>(n * w * d);
    row("-1,0,", "mse", all_sq / c);
    row("-1,0,", "mae", all_abs / c);
    row("-1,0,", "rmse", std::sqrt(all_sq / c));
    row("-1,0,", "mape", all_pct / c);
}

void append_snapshot(std::string& buf, std::size_t step, const Matrix& w) {
    const std::string prefix = std::to_string(step) + ",";
    for (std::size_t p = 0; p < w.rows(); ++p)
        for (std::size_t q = 0; q < w.cols(); ++q)
            buf += prefix + std::to_string(p) + "," + std::to_string(q) + "," +
                   format_number(w(p, q)) + "\n";
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

PreparedStream prepare_stream(const ExperimentConfig& config) {
    PreparedStream s;
    const EngineConfig& e = config.engine;
    if (config.run.source == DataSource::Simulate) {
        if (e.feature_dim != 2)
            throw ConfigError("config key 'feature_dim': the spring simulator emits 2 features");
        SpringParams params = config.spring;
        params.agents = e.num_agents;
        SimRun run = simulate_run(config.schedule, params, e.seed + config.run.run_index);
        s.raw = std::move(run.frames);
        s.adjacencies = std::move(run.adjacencies);
    } else {
        CsvOptions opts;
        opts.has_header = config.run.csv_header;
        opts.missing = config.run.csv_forward_fill ? MissingPolicy::ForwardFill : MissingPolicy::Reject;
        s.raw = load_csv_series(config.run.csv_path, e.num_agents, e.feature_dim, opts);
    }
    switch (config.run.normalize) {
        case Normalization::None: {
            const std::size_t cols = s.raw.values.cols();
            s.stats.mean.assign(cols, 0.0);
            s.stats.stddev.assign(cols, 1.0);
            s.stats.constant.assign(cols, false);
            s.normalized = s.raw;
            break;
        }
        case Normalization::ZScoreGlobal:
            std::tie(s.normalized, s.stats) = zscore_fit_transform(s.raw, ZScoreMode::Global);
            break;
        case Normalization::ZScorePerColumn:
            std::tie(s.normalized, s.stats) = zscore_fit_transform(s.raw, ZScoreMode::PerColumn);
            break;
        case Normalization::Range:
            std::tie(s.normalized, s.stats) = range_fit_transform(s.raw);
            break;
    }
    if (window_count(s.raw.length(), e.window) == 0)
        throw DataError("series has " + std::to_string(s.raw.length()) + " rows, at least " +
                        std::to_string(2 * e.window) + " required");
    return s;
}

RunResult run_experiment(const ExperimentConfig& config, const std::optional<fs::path>& out_dir) {
    const EngineConfig& e = config.engine;
    const RunOptions& opt = config.run;
    const PreparedStream stream = prepare_stream(config);
    const std::size_t delta = e.window;
    const std::size_t steps = std::min(window_count(stream.raw.length(), delta), opt.max_steps);
    const bool zerov = opt.baseline == Baseline::ZeroV;
    const bool scoring = opt.score_graph && !zerov && !stream.adjacencies.empty();
    const std::size_t fps = config.schedule.frames_per_segment;

    CognnState state;
    if (!zerov) state = make_cognn(e);
    RegretLedger ledger(e.num_agents);
    MetricsAccumulator all(opt.mape_floor), tail(opt.mape_floor);
    RunResult result;
    result.steps = steps;
    result.has_regret = !zerov;

    std::vector<ClipBatch> replay_inputs, replay_targets;
    const bool replay = opt.replay && !zerov;

    std::string metrics_buf = "step,agent,horizon,metric,value\n";
    std::string regret_buf = "step,agent,regret,bound\n";
    std::vector<std::string> snap_bufs(zerov ? 0 : e.num_copus, "step,p,q,weight\n");
    const bool writing = out_dir.has_value();

    for (std::size_t w = 0; w < steps; ++w) {
        const std::size_t step = w + 1;
        ClipBatch truth = stream.raw.clip(w + delta, delta);
        ClipBatch pred;
        if (zerov) {
            pred = zero_velocity(stream.raw.clip(w, delta));
        } else {
            const ClipBatch input = stream.normalized.clip(w, delta);
            const ClipBatch target = stream.normalized.clip(w + delta, delta);
            if (replay) {
                replay_inputs.push_back(input);
                replay_targets.push_back(target);
            }
            StepMetrics m = cognn_online_step(state, input, target);
            pred = std::move(m.final_prediction);
            stream.stats.inverse(pred);
            const UpdateReport& r = m.reports.back();
            LossMatrix bounded{r.bounded_pair_losses, r.bounded_ensemble_losses};
            ledger.record_step(bounded, r.theta_norm, r.max_pair_grad_norm, &r.weights_used);
            if (step % opt.regret_every == 0 || step == steps) {
                const double bound = theoretical_bound(ledger, e.eta, static_cast<double>(e.num_agents));
                result.regret_curve.push_back({step, ledger.mean_static_regret(), bound});
                if (writing) {
                    const std::string prefix = std::to_string(step) + ",";
                    for (std::size_t p = 0; p < e.num_agents; ++p)
                        regret_buf += prefix + std::to_string(p) + "," +
                                      format_number(ledger.static_regret(p)) + "," +
                                      format_number(bound) + "\n";
                    regret_buf += prefix + "-1," + format_number(ledger.mean_static_regret()) +
                                  "," + format_number(bound) + "\n";
                }
            }
            if (writing && (step % opt.snapshot_every == 0 || step == steps))
                for (std::size_t i = 0; i < state.copus.size(); ++i)
                    append_snapshot(snap_bufs[i], step, state.copus[i].graph.normalized);
            if (scoring) {
                const std::size_t seg = w / fps, offset = w % fps;
                if ((offset + 1 == fps || step == steps) && offset >= opt.score_after &&
                    seg < stream.adjacencies.size())
                    result.segment_scores.push_back(
                        {seg, step, score_graph(state.copus.front().graph.normalized,
                                                stream.adjacencies[seg])});
            }
        }
        all.add(pred, truth);
        if (w + opt.final_window >= steps) tail.add(pred, truth);
        if (writing) append_metric_rows(metrics_buf, step, pred, truth, opt.mape_floor);
    }
    result.metrics = all.report();
    result.final_window = tail.report();

    if (replay) {
        // The last unit observes the cascade of the earlier units, re-run here
        // with their final parameters.
        for (std::size_t i = 0; i + 1 < state.copus.size(); ++i)
            for (auto& clip : replay_inputs) clip = copu_forward(state.copus[i], clip).prediction;
        const Matrix replayed = replay_pair_losses(state.copus.back(), replay_inputs, replay_targets);
        double acc = 0.0;
        for (std::size_t p = 0; p < e.num_agents; ++p) acc += replay_static_regret(ledger, replayed, p);
        result.replay_regret = acc / static_cast<double>(e.num_agents);
        result.has_replay = true;
    }

    result.mean_auc = nan();
    result.mean_topk = nan();
    {
        double auc = 0.0, topk = 0.0;
        std::size_t na = 0, nt = 0;
        for (const auto& s : result.segment_scores) {
            if (std::isfinite(s.score.auc)) {
                auc += s.score.auc;
                ++na;
            }
            if (std::isfinite(s.score.topk_precision)) {
                topk += s.score.topk_precision;
                ++nt;
            }
        }
        if (na) result.mean_auc = auc / static_cast<double>(na);
        if (nt) result.mean_topk = topk / static_cast<double>(nt);
    }

    if (writing) {
        const fs::path& dir = *out_dir;
        make_dirs(dir);
        {
            AtomicFile f(dir / "metrics.csv");
            f.stream() << metrics_buf;
            f.commit();
        }
        if (!zerov) {
            AtomicFile f(dir / "regret.csv");
            f.stream() << regret_buf;
            f.commit();
            for (std::size_t i = 0; i < snap_bufs.size(); ++i) {
                AtomicFile g(dir / ("graph_copu" + std::to_string(i) + ".csv"));
                g.stream() << snap_bufs[i];
                g.commit();
            }
        }
        if (!stream.adjacencies.empty()) {
            make_dirs(dir / "truth");
            for (std::size_t s = 0; s < stream.adjacencies.size(); ++s)
                write_adjacency(dir / "truth" / ("adjacency_" + two_digits(s) + ".csv"),
                                stream.adjacencies[s]);
        }
        if (scoring) {
            AtomicFile f(dir / "graph_score.csv");
            f.stream() << "segment,step,auc,topk_precision,edges\n";
            for (const auto& s : result.segment_scores)
                f.stream() << s.segment << ',' << s.step << ',' << format_number(s.score.auc) << ','
                           << format_number(s.score.topk_precision) << ',' << s.score.edges << '\n';
            f.commit();
        }
        AtomicFile f(dir / "summary.txt");
        f.stream() << format_summary(config, result);
        f.commit();
    }
    return result;
}

std::string format_summary(const ExperimentConfig& config, const RunResult& r) {
    std::ostringstream out;
    out << "source = " << (config.run.source == DataSource::Simulate ? "simulate" : "csv") << '\n';
    out << "model = "
        << (config.run.baseline == Baseline::ZeroV ? "zerov" : to_string(config.engine.graph_mode))
        << '\n';
    out << "steps = " << r.steps << '\n';
    out << "mse = " << format_number(r.metrics.mse) << '\n';
    out << "mae = " << format_number(r.metrics.mae) << '\n';
    out << "rmse = " << format_number(r.metrics.rmse) << '\n';
    out << "mape = " << format_number(r.metrics.mape) << '\n';
    out << "euclid = " << format_number(r.metrics.euclid) << '\n';
    for (std::size_t t = 0; t < r.metrics.mse_per_horizon.size(); ++t)
        out << "mse_step_" << t + 1 << " = " << format_number(r.metrics.mse_per_horizon[t]) << '\n';
    out << "final_window_mse = " << format_number(r.final_window.mse) << '\n';
    if (r.has_regret && !r.regret_curve.empty()) {
        out << "mean_static_regret = " << format_number(r.regret_curve.back().mean_regret) << '\n';
        out << "regret_bound = " << format_number(r.regret_curve.back().bound) << '\n';
    }
    if (r.has_replay) out << "replay_static_regret = " << format_number(r.replay_regret) << '\n';
    if (!r.segment_scores.empty()) {
        out << "mean_auc = " << format_number(r.mean_auc) << '\n';
        out << "mean_topk_precision = " << format_number(r.mean_topk) << '\n';
    }
    return out.str();
}

void cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    SpringParams params = config.spring;
    params.agents = config.engine.num_agents;
    make_dirs(out_dir);
    std::ostringstream manifest;
    manifest << "run,series,frames,agents,features,adjacency_files\n";
    for (std::size_t r = 0; r < config.schedule.num_runs; ++r) {
        const SimRun run = simulate_run(config.schedule, params, config.engine.seed + r);
        const std::string name = "run_" + two_digits(r);
        const fs::path dir = out_dir / name;
        make_dirs(dir);
        write_csv_series(dir / "series.csv", run.frames);
        for (std::size_t s = 0; s < run.adjacencies.size(); ++s)
            write_adjacency(dir / ("adjacency_" + two_digits(s) + ".csv"), run.adjacencies[s]);
        manifest << r << ',' << name << "/series.csv," << run.frames.length() << ','
                 << run.frames.agents << ',' << run.frames.features << ','
                 << run.adjacencies.size() << '\n';
    }
    AtomicFile f(out_dir / "manifest.csv");
    f.stream() << manifest.str();
    f.commit();
    log << manifest.str();
}

RunResult cmd_run(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    RunResult r = run_experiment(config, out_dir);
    log << format_summary(config, r);
    return r;
}

SweepKind parse_sweep_kind(const std::string& s) {
    if (s == "eta") return SweepKind::Eta;
    if (s == "num_copus") return SweepKind::NumCopus;
    throw ConfigError("unknown sweep '" + s + "' (expected eta or num_copus)");
}

void cmd_sweep(const ExperimentConfig& config, SweepKind kind, const fs::path& out_dir,
               std::ostream& log) {
    const auto& grid = kind == SweepKind::Eta ? config.sweep.eta_grid : config.sweep.copus_grid;
    const std::string name = kind == SweepKind::Eta ? "eta" : "num_copus";
    std::ostringstream rows;
    rows << name << ",runs,mse,final_window_mse,mse_step_1,mse_step_" << config.engine.window
         << ",mean_static_regret\n";
    for (double value : grid) {
        double mse = 0.0, tail = 0.0, first = 0.0, last = 0.0, regret = 0.0;
        for (std::size_t r = 0; r < config.sweep.runs; ++r) {
            ExperimentConfig c = config;
            if (kind == SweepKind::Eta) c.engine.eta = value;
            else c.engine.num_copus = static_cast<std::size_t>(value);
            c.engine.validate();
            c.run.run_index = config.run.run_index + r;
            const RunResult res = run_experiment(c, std::nullopt);
            mse += res.metrics.mse;
            tail += res.final_window.mse;
            first += res.metrics.mse_per_horizon.front();
            last += res.metrics.mse_per_horizon.back();
            if (res.has_regret && !res.regret_curve.empty())
                regret += res.regret_curve.back().mean_regret;
        }
        const double k = static_cast<double>(config.sweep.runs);
        rows << format_number(value) << ',' << config.sweep.runs << ',' << format_number(mse / k)
             << ',' << format_number(tail / k) << ',' << format_number(first / k) << ','
             << format_number(last / k) << ','
             << (config.run.baseline == Baseline::ZeroV ? std::string("nan")
                                                       : format_number(regret / k))
             << '\n';
    }
    make_dirs(out_dir);
    AtomicFile f(out_dir / ("sweep_" + name + ".csv"));
    f.stream() << rows.str();
    f.commit();
    log << rows.str();
}

void cmd_graph_score(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    if (config.score.snapshots.empty()) throw ConfigError("config key 'snapshots' is required");
    if (config.score.truth_dir.empty()) throw ConfigError("config key 'truth_dir' is required");
    const auto snapshots = load_snapshots(config.score.snapshots);
    std::vector<Matrix> truth;
    for (std::size_t s = 0;; ++s) {
        const fs::path p = fs::path(config.score.truth_dir) / ("adjacency_" + two_digits(s) + ".csv");
        if (!fs::exists(p)) break;
        const std::size_t n = config.engine.num_agents;
        truth.push_back(load_csv_series(p, n, 1).values);
        if (truth.back().rows() != n)
            throw DataError(p.string() + ": expected " + std::to_string(n) + " rows");
    }
    if (truth.empty()) throw DataError("no adjacency_XX.csv files in " + config.score.truth_dir);
    const std::size_t fps = config.schedule.frames_per_segment;
    std::vector<std::uint64_t> steps;
    for (const auto& [step, w] : snapshots) {
        if (step > 0 && (step - 1) / fps >= truth.size())
            throw DataError("snapshot step " + std::to_string(step) + " lies past the last of " +
                            std::to_string(truth.size()) + " truth segments");
        if (w.rows() != truth.front().rows())
            throw DimensionError("snapshot and truth agent counts differ");
        steps.push_back(step);
    }
    const auto chosen = select_snapshots(steps, fps, config.run.score_after, truth.size());

    std::ostringstream rows;
    rows << "segment,step,auc,topk_precision,edges\n";
    double auc = 0.0, topk = 0.0;
    std::size_t na = 0, nt = 0;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        if (!chosen[s]) continue;
        const GraphScore g = score_graph(snapshots.at(*chosen[s]), truth[s]);
        rows << s << ',' << *chosen[s] << ',' << format_number(g.auc) << ','
             << format_number(g.topk_precision) << ',' << g.edges << '\n';
        if (std::isfinite(g.auc)) {
            auc += g.auc;
            ++na;
        }
        if (std::isfinite(g.topk_precision)) {
            topk += g.topk_precision;
            ++nt;
        }
    }
    if (na == 0) throw DataError("no snapshot lies at least score_after steps into any segment");
    rows << "-1,0," << format_number(auc / static_cast<double>(na)) << ','
         << format_number(nt ? topk / static_cast<double>(nt) : nan()) << ",0\n";
    make_dirs(out_dir);
    AtomicFile f(out_dir / "graph_score.csv");
    f.stream() << rows.str();
    f.commit();
    log << rows.str();
}

}  // namespace cognn
