#include "btlab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <set>
#include <stdexcept>

#include "btlab/backtest.hpp"
#include "btlab/errors.hpp"
#include "btlab/evaluation.hpp"
#include "btlab/io.hpp"
#include "btlab/processes.hpp"
#include "btlab/rgan.hpp"
#include "btlab/sha256.hpp"
#include "btlab/stats.hpp"
#include "btlab/strategies.hpp"

namespace btlab::cmd {

const char* kToolVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Malformed invocations are usage errors (std::invalid_argument), distinct
// from domain validation failures.
void check_keys(const json& options, const std::set<std::string>& allowed) {
    if (!options.is_object()) throw std::invalid_argument("options must be a JSON object");
    for (const auto& [key, _] : options.items())
        if (!allowed.count(key)) throw std::invalid_argument("unknown option: '" + key + "'");
}

// Collects inputs/outputs and writes the run manifest.
struct Run {
    std::string command;
    json options;
    fs::path out_dir;
    std::string started;
    json inputs = json::array();
    json outputs = json::array();

    Run(std::string cmd, const json& opts) : command(std::move(cmd)), options(opts) {
        if (!options.contains("out_dir") || !options.at("out_dir").is_string())
            throw std::invalid_argument("options require an \"out_dir\" string");
        out_dir = fs::path(options.at("out_dir").get<std::string>());
        fs::create_directories(out_dir);
        started = utc_now();
    }

    void input(const fs::path& path) {
        inputs.push_back({{"path", path.string()}, {"sha256", sha256_file_hex(path)}});
    }
    void output(const fs::path& path) {
        outputs.push_back({{"path", fs::relative(path, out_dir).string()},
                           {"sha256", sha256_file_hex(path)}});
    }
    fs::path file(const std::string& name) const { return out_dir / name; }

    json finish(json summary) {
        json manifest;
        manifest["command"] = command;
        manifest["tool_version"] = kToolVersion;
        manifest["master_seed"] = options.value("seed", std::uint64_t{0});
        manifest["options"] = options;
        manifest["inputs"] = inputs;
        manifest["outputs"] = outputs;
        manifest["started_at"] = started;
        manifest["finished_at"] = utc_now();
        io::write_json_file(out_dir / (command + "_manifest.json"), manifest);
        summary["manifest"] = (out_dir / (command + "_manifest.json")).string();
        summary["out_dir"] = out_dir.string();
        return summary;
    }
};

ProcessSpec spec_from_options(const json& options, const char* key = "process") {
    if (!options.contains(key)) throw std::invalid_argument("options require a \"process\" object");
    return io::process_spec_from_json(options.at(key));
}

int threads_of(const json& options) { return options.value("threads", 0); }

// Sharpe-distribution CSV: path_id,sharpe with NaN for undefined entries.
void save_sharpe_csv(const StrategyConfig& config, const PathSet& set, int threads,
                     const fs::path& path, SharpeSample* out_sample) {
    std::string csv = "path_id,sharpe\n";
    std::size_t id = 0;
    SharpeSample sample;
    // per-path values in path order, undefined kept in place for the CSV
    for (const auto& p : set.paths) {
        const auto report = run_backtest(p, config);
        csv += std::to_string(id++);
        csv += ',';
        csv += report.sharpe ? io::fmt_double(*report.sharpe) : "NaN";
        csv += '\n';
        if (report.sharpe)
            sample.values.push_back(*report.sharpe);
        else
            ++sample.n_undefined;
    }
    (void)threads;
    io::write_text_file(path, csv);
    if (out_sample) *out_sample = std::move(sample);
}

}  // namespace

json cmd_simulate(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "process", "steps", "paths",
                         "allow_nonstationary"});
    Run run("simulate", options);
    const ProcessSpec spec = spec_from_options(options);
    const std::int64_t steps = options.value("steps", std::int64_t{600});
    const std::int64_t n_paths = options.value("paths", std::int64_t{1});
    const std::uint64_t seed = options.value("seed", std::uint64_t{1});
    const std::string name = options.value("name", std::string{"paths"});

    SimulateOptions sim_opts;
    sim_opts.threads = threads_of(options);
    sim_opts.stationarity_guard = !options.value("allow_nonstationary", false);
    const PathSet set = simulate(spec, steps, n_paths, seed, sim_opts);

    const fs::path csv = run.file(name + ".csv");
    io::save_pathset_csv(set, csv);
    run.output(csv);
    run.output(io::sidecar_path(csv));
    return run.finish({{"csv", csv.string()},
                       {"n_paths", n_paths},
                       {"steps", steps},
                       {"source", set.source}});
}

json cmd_backtest(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "paths_csv", "path_index",
                         "strategy"});
    Run run("backtest", options);
    if (!options.contains("paths_csv")) throw std::invalid_argument("options require \"paths_csv\"");
    const fs::path csv = options.at("paths_csv").get<std::string>();
    run.input(csv);
    const PathSet set = io::load_pathset_csv(csv);
    const auto index = options.value("path_index", std::int64_t{0});
    if (index < 0 || index >= static_cast<std::int64_t>(set.size()))
        throw ValidationError("path_index out of range");
    if (!options.contains("strategy")) throw std::invalid_argument("options require \"strategy\"");
    const StrategyConfig config = io::strategy_config_from_json(options.at("strategy"));
    const std::string name = options.value("name", std::string{"backtest"});

    const BacktestReport report = run_backtest(set.paths[static_cast<std::size_t>(index)], config);
    json j = io::backtest_report_to_json(report);
    j["strategy"] = io::strategy_config_to_json(config);
    j["path_index"] = index;
    const fs::path out = run.file(name + ".json");
    io::write_json_file(out, j);
    run.output(out);
    return run.finish({{"report", out.string()},
                       {"sharpe", report.sharpe ? json(*report.sharpe) : json(nullptr)},
                       {"n_trades", report.n_trades}});
}

json cmd_grid(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "paths_csv", "strategy_kind"});
    Run run("grid", options);
    if (!options.contains("paths_csv")) throw std::invalid_argument("options require \"paths_csv\"");
    const fs::path csv = options.at("paths_csv").get<std::string>();
    run.input(csv);
    const PathSet set = io::load_pathset_csv(csv);
    const StrategyKind kind =
        strategy_kind_from_name(options.value("strategy_kind", std::string{"mac"}));
    const std::string name = options.value("name", std::string{"grid"});

    const ParamGrid grid = enumerate_grid(kind);
    const GridResult result = select_best(set, grid, threads_of(options));

    const fs::path scores = run.file(name + "_scores.csv");
    io::save_grid_csv(result, grid, scores);
    run.output(scores);
    json best;
    best["viable"] = result.viable;
    best["paths_used"] = result.paths_used;
    if (result.viable) {
        best["best_config"] = io::strategy_config_to_json(result.best_config);
        best["best_score"] = result.best_score;
        best["best_index"] = result.best_index;
    }
    const fs::path best_path = run.file(name + "_best.json");
    io::write_json_file(best_path, best);
    run.output(best_path);
    return run.finish({{"scores", scores.string()}, {"best", best}});
}

json cmd_heatmap(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "process", "steps"});
    Run run("heatmap", options);
    const ProcessSpec spec = spec_from_options(options);
    if (spec.kind != ProcessKind::RandomWalk && spec.kind != ProcessKind::WhiteNoise)
        throw ValidationError("heatmap process must be random-walk or white-noise");
    const std::int64_t steps = options.value("steps", std::int64_t{600});
    const std::uint64_t seed = options.value("seed", std::uint64_t{1});
    const std::string name =
        options.value("name", std::string{"heatmap_"} + process_kind_name(spec.kind));

    const PathSet set = simulate(spec, steps, 1, seed);
    const HeatmapMatrix m = mac_heatmap(set.paths[0], threads_of(options));
    const double smoothness = heatmap_smoothness(m);
    const double scatter = heatmap_top_decile_scatter(m);

    const fs::path csv = run.file(name + ".csv");
    io::save_heatmap_csv(m, csv);
    run.output(csv);
    const fs::path summary_path = run.file(name + "_summary.json");
    io::write_json_file(summary_path, {{"process", process_kind_name(spec.kind)},
                                       {"steps", steps},
                                       {"seed", seed},
                                       {"smoothness", smoothness},
                                       {"top_decile_scatter", scatter}});
    run.output(summary_path);
    return run.finish({{"csv", csv.string()},
                       {"smoothness", smoothness},
                       {"top_decile_scatter", scatter}});
}

json cmd_demo_overfit(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "steps", "split",
                         "strategy_kind", "eval_paths", "sigma"});
    Run run("demo-overfit", options);
    const std::int64_t steps = options.value("steps", std::int64_t{600});
    const std::int64_t split = options.value("split", std::int64_t{300});
    const std::int64_t eval_paths = options.value("eval_paths", std::int64_t{2000});
    const double sigma = options.value("sigma", 1.0);
    const std::uint64_t seed = options.value("seed", std::uint64_t{1});
    const StrategyKind kind =
        strategy_kind_from_name(options.value("strategy_kind", std::string{"bh"}));
    const std::string name = options.value("name", std::string{"demo"});
    const int threads = threads_of(options);

    const ProcessSpec spec = ProcessSpec::random_walk(sigma);
    const PathSet history = simulate(spec, steps, 1, substream_seed(seed, 1));
    const auto [is_path, oos_path] = split_is_oos(history.paths[0], split);

    PathSet is_set;
    is_set.paths = {is_path};
    is_set.source = history.source;
    is_set.spec = spec;
    const ParamGrid grid = enumerate_grid(kind);
    const GridResult selected = select_best(is_set, grid, threads);
    if (!selected.viable) throw TrainingError("no viable strategy on the in-sample segment");

    const BacktestReport is_report = run_backtest(is_path, selected.best_config);
    const BacktestReport oos_report = run_backtest(oos_path, selected.best_config);

    // Fig-1-style data: price and equity per segment, global time indices.
    std::string eq = "segment,t,price,equity\n";
    for (std::size_t t = 0; t < is_path.values.size(); ++t) {
        eq += "is," + std::to_string(t) + ',' + io::fmt_double(is_path.values[t]) + ',' +
              io::fmt_double(is_report.equity[t]) + '\n';
    }
    for (std::size_t t = 0; t < oos_path.values.size(); ++t) {
        eq += "oos," + std::to_string(static_cast<std::size_t>(split) + t) + ',' +
              io::fmt_double(oos_path.values[t]) + ',' + io::fmt_double(oos_report.equity[t]) +
              '\n';
    }
    const fs::path eq_path = run.file(name + "_equity.csv");
    io::write_text_file(eq_path, eq);
    run.output(eq_path);

    // Fig-2-style data: the chosen config's Sharpe over fresh paths.
    const PathSet fresh = simulate(spec, steps, eval_paths, substream_seed(seed, 2),
                                   {.stationarity_guard = true, .threads = threads});
    SharpeSample sample;
    const fs::path dist_path = run.file(name + "_sharpe_dist.csv");
    save_sharpe_csv(selected.best_config, fresh, threads, dist_path, &sample);
    run.output(dist_path);

    json report;
    report["best_config"] = io::strategy_config_to_json(selected.best_config);
    report["is_sharpe"] = selected.best_score;
    report["oos_sharpe"] = oos_report.sharpe ? json(*oos_report.sharpe) : json(nullptr);
    report["eval_paths"] = eval_paths;
    report["eval_undefined"] = sample.n_undefined;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    bool within = false;
    if (sample.values.size() >= 2) {
        mean = stats::mean(sample.values);
        se = stats::sample_stdev(sample.values) / std::sqrt(static_cast<double>(sample.values.size()));
        within = std::abs(mean) <= 3.0 * se;
    }
    report["eval_mean_sharpe"] = std::isfinite(mean) ? json(mean) : json(nullptr);
    report["eval_stderr"] = std::isfinite(se) ? json(se) : json(nullptr);
    report["eval_mean_within_3se_of_zero"] = within;
    const fs::path report_path = run.file(name + "_report.json");
    io::write_json_file(report_path, report);
    run.output(report_path);

    return run.finish({{"report", report_path.string()},
                       {"is_sharpe", selected.best_score},
                       {"eval_mean_sharpe", report["eval_mean_sharpe"]},
                       {"eval_mean_within_3se_of_zero", within}});
}

json cmd_gan_train(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "data_csv", "gan",
                         "eval_process", "checkpoint_dir"});
    Run run("gan-train", options);
    if (!options.contains("data_csv")) throw std::invalid_argument("options require \"data_csv\"");
    const fs::path data_csv = options.at("data_csv").get<std::string>();
    run.input(data_csv);
    const PathSet data = io::load_pathset_csv(data_csv);

    gan::GanConfig cfg = io::gan_config_from_json(options.value("gan", json::object()));
    if (options.contains("seed")) cfg.seed = options.at("seed").get<std::uint64_t>();
    // seq_len follows the data unless explicitly configured
    if (!options.contains("gan") || !options.at("gan").contains("seq_len"))
        cfg.seq_len = static_cast<int>(data.length()) - 1;
    cfg.validate();

    std::optional<ProcessSpec> eval_spec;
    if (options.contains("eval_process"))
        eval_spec = io::process_spec_from_json(options.at("eval_process"));
    else if (data.spec && data.spec->kind == ProcessKind::GBM)
        eval_spec = data.spec;
    gan::EvalHook hook;
    if (eval_spec && eval_spec->kind == ProcessKind::GBM)
        hook = eval::make_gbm_r2_hook(*eval_spec, cfg.eval_paths, substream_seed(cfg.seed, 0x77));

    const std::string name = options.value("name", std::string{"gan"});
    const auto progress = [](const gan::TrainRecord& rec) {
        std::fprintf(stderr, "batches %lld  d_loss %.4f  g_loss %.4f  r2_mean %.4f  r2_var %.4f\n",
                     static_cast<long long>(rec.batches), rec.d_loss, rec.g_loss, rec.r2_mean,
                     rec.r2_var);
    };
    const gan::TrainOutcome outcome = gan::train(cfg, data, hook, progress);

    const fs::path log_path = run.file(name + "_trainlog.csv");
    io::save_trainlog_csv(outcome.log, log_path);
    run.output(log_path);
    const fs::path ckpt =
        options.contains("checkpoint_dir")
            ? fs::path(options.at("checkpoint_dir").get<std::string>())
            : run.file(name + "_checkpoint");
    gan::save_checkpoint(outcome.model, ckpt);
    run.output(ckpt / "manifest.json");
    run.output(ckpt / "params.bin");

    // the written copy stays rerun-stable: file references are relative
    json summary{{"checkpoint", fs::relative(ckpt, run.out_dir).string()},
                 {"trainlog", fs::relative(log_path, run.out_dir).string()},
                 {"trained_batches", outcome.model.trained_batches},
                 {"diverged", outcome.diverged}};
    if (!outcome.log.records.empty()) {
        const auto& last = outcome.log.records.back();
        summary["r2_mean"] = std::isfinite(last.r2_mean) ? json(last.r2_mean) : json(nullptr);
        summary["r2_var"] = std::isfinite(last.r2_var) ? json(last.r2_var) : json(nullptr);
        summary["d_loss"] = last.d_loss;
        summary["g_loss"] = last.g_loss;
    }
    const fs::path summary_path = run.file(name + "_summary.json");
    io::write_json_file(summary_path, summary);
    run.output(summary_path);
    summary["checkpoint"] = ckpt.string();
    summary["trainlog"] = log_path.string();
    json finished = run.finish(summary);
    if (outcome.diverged)
        throw TrainingError("training diverged after " +
                            std::to_string(outcome.model.trained_batches) +
                            " batches (partial log kept): " + outcome.error);
    return finished;
}

json cmd_gan_sample(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "checkpoint_dir", "paths",
                         "steps"});
    Run run("gan-sample", options);
    if (!options.contains("checkpoint_dir"))
        throw std::invalid_argument("options require \"checkpoint_dir\"");
    const fs::path ckpt = options.at("checkpoint_dir").get<std::string>();
    run.input(ckpt / "manifest.json");
    run.input(ckpt / "params.bin");
    const gan::GanModel model = gan::load_checkpoint(ckpt);
    const std::int64_t n = options.value("paths", std::int64_t{1000});
    const std::int64_t steps = options.value("steps", std::int64_t{model.config.seq_len});
    const std::uint64_t seed = options.value("seed", std::uint64_t{1});
    const std::string name = options.value("name", std::string{"gan_paths"});

    const PathSet set = gan::generate(model, n, steps, seed);
    const fs::path csv = run.file(name + ".csv");
    io::save_pathset_csv(set, csv);
    run.output(csv);
    run.output(io::sidecar_path(csv));
    const bool extrapolated = steps != model.config.seq_len;
    return run.finish({{"csv", csv.string()},
                       {"n_paths", n},
                       {"steps", steps},
                       {"extrapolated_beyond_training_length", extrapolated}});
}

json cmd_gan_eval(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "paths_csv", "process",
                         "alpha", "min_paths"});
    Run run("gan-eval", options);
    if (!options.contains("paths_csv")) throw std::invalid_argument("options require \"paths_csv\"");
    const fs::path csv = options.at("paths_csv").get<std::string>();
    run.input(csv);
    const PathSet raw = io::load_pathset_csv(csv);
    ProcessSpec spec;
    if (options.contains("process"))
        spec = io::process_spec_from_json(options.at("process"));
    else if (raw.spec && raw.spec->kind == ProcessKind::GBM)
        spec = *raw.spec;
    else
        throw ValidationError("gan-eval needs a GBM \"process\" (none in the sidecar)");
    const double alpha = options.value("alpha", 0.01);
    const auto min_paths = options.value("min_paths", std::int64_t{100});
    const std::string name = options.value("name", std::string{"gan_eval"});

    // generated data may contain non-positive values; evaluate the positive subset
    PathSet positive;
    positive.source = raw.source;
    positive.seed = raw.seed;
    positive.spec = raw.spec;
    for (const auto& p : raw.paths)
        if (std::all_of(p.values.begin(), p.values.end(), [](double v) { return v > 0.0; }))
            positive.paths.push_back(p);
    const std::int64_t dropped =
        static_cast<std::int64_t>(raw.size()) - static_cast<std::int64_t>(positive.size());
    if (static_cast<std::int64_t>(positive.size()) < min_paths)
        throw ValidationError("only " + std::to_string(positive.size()) +
                              " strictly positive paths; need " + std::to_string(min_paths));

    const eval::MomentFit fit = eval::moment_r2(positive, spec);
    const eval::NormalityReport normality = eval::normality_test(positive, spec, alpha);

    json j;
    j["process"] = io::process_spec_to_json(spec);
    j["paths_total"] = raw.size();
    j["paths_dropped_nonpositive"] = dropped;
    j["moment_fit"] = eval::moment_fit_to_json(fit);
    j["normality"] = eval::normality_report_to_json(normality);
    const fs::path out = run.file(name + ".json");
    io::write_json_file(out, j);
    run.output(out);
    return run.finish({{"report", out.string()},
                       {"r2_mean", j["moment_fit"]["r2_mean"]},
                       {"r2_var", j["moment_fit"]["r2_var"]},
                       {"normality_overall", normality.overall}});
}

json cmd_pipeline(const json& options) {
    check_keys(options, {"out_dir", "seed", "threads", "name", "runs", "process",
                         "strategy_kind", "gan", "counts", "threshold"});
    Run run("pipeline", options);
    const std::int64_t runs = options.value("runs", std::int64_t{10});
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    const ProcessSpec spec = spec_from_options(options);
    const StrategyKind kind =
        strategy_kind_from_name(options.value("strategy_kind", std::string{"bh"}));
    gan::GanConfig cfg = io::gan_config_from_json(options.value("gan", json::object()));
    eval::PipelineCounts counts;
    if (options.contains("counts")) {
        const json& c = options.at("counts");
        counts.n_train = c.value("n_train", counts.n_train);
        counts.n_eval = c.value("n_eval", counts.n_eval);
        counts.n_synth = c.value("n_synth", counts.n_synth);
    }
    const double threshold = options.value("threshold", 0.75);
    const std::uint64_t seed = options.value("seed", std::uint64_t{1});
    const int threads = threads_of(options);
    const std::string name = options.value("name", std::string{"pipeline"});

    std::vector<eval::PipelineReport> reports;
    json run_index = json::array();
    for (std::int64_t k = 0; k < runs; ++k) {
        const fs::path run_dir = run.file(name + "_run_" + std::to_string(k));
        fs::create_directories(run_dir);
        json entry{{"run", k}};
        try {
            eval::PipelineReport report = eval::run_pipeline(
                spec, kind, cfg, counts, substream_seed(seed, static_cast<std::uint64_t>(k)),
                threads, threshold);

            io::save_trainlog_csv(report.train_log, run_dir / "trainlog.csv");
            run.output(run_dir / "trainlog.csv");
            if (report.viable) {
                std::string tcsv = "sharpe\n", ecsv = "sharpe\n";
                for (double s : report.target_sample.values)
                    tcsv += io::fmt_double(s) + '\n';
                for (double s : report.experimental_sample.values)
                    ecsv += io::fmt_double(s) + '\n';
                io::write_text_file(run_dir / "sharpe_target.csv", tcsv);
                io::write_text_file(run_dir / "sharpe_experimental.csv", ecsv);
                io::write_json_file(run_dir / "comparison.json",
                                    eval::dist_comparison_to_json(report.comparison));
                run.output(run_dir / "sharpe_target.csv");
                run.output(run_dir / "sharpe_experimental.csv");
                run.output(run_dir / "comparison.json");
            }
            json rj = eval::pipeline_report_to_json(report);
            rj["files"] = {{"trainlog", "trainlog.csv"},
                           {"sharpe_target", "sharpe_target.csv"},
                           {"sharpe_experimental", "sharpe_experimental.csv"},
                           {"comparison", "comparison.json"}};
            io::write_json_file(run_dir / "report.json", rj);
            run.output(run_dir / "report.json");
            entry["ok"] = true;
            entry["rgan_verdict"] = report.viable ? json(report.verdict_rgan.verdict) : json(nullptr);
            entry["mc_verdict"] = report.viable ? json(report.verdict_mc.verdict) : json(nullptr);
            reports.push_back(std::move(report));
        } catch (const std::exception& e) {
            entry["ok"] = false;
            entry["error"] = e.what();
        }
        run_index.push_back(entry);
    }
    if (reports.empty()) throw TrainingError("every pipeline run failed");

    const eval::ConfusionMatrix m = eval::confusion(reports);
    std::string ccsv = "rgan,mc,count\n";
    ccsv += "positive,positive," + std::to_string(m.pos_pos) + '\n';
    ccsv += "positive,negative," + std::to_string(m.pos_neg) + '\n';
    ccsv += "negative,positive," + std::to_string(m.neg_pos) + '\n';
    ccsv += "negative,negative," + std::to_string(m.neg_neg) + '\n';
    const fs::path confusion_path = run.file(name + "_confusion.csv");
    io::write_text_file(confusion_path, ccsv);
    run.output(confusion_path);

    json summary{{"runs", run_index},
                 {"confusion",
                  {{"pos_pos", m.pos_pos},
                   {"pos_neg", m.pos_neg},
                   {"neg_pos", m.neg_pos},
                   {"neg_neg", m.neg_neg}}},
                 {"confusion_csv", fs::relative(confusion_path, run.out_dir).string()}};
    const fs::path summary_path = run.file(name + "_summary.json");
    io::write_json_file(summary_path, summary);
    run.output(summary_path);
    summary["confusion_csv"] = confusion_path.string();
    return run.finish(summary);
}

}  // namespace btlab::cmd
