#include "btlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "btlab/errors.hpp"
#include "btlab/io.hpp"
#include "btlab/stats.hpp"

namespace btlab::eval {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Pipeline substream purposes.
constexpr std::uint64_t kTagTrainData = 0x20;
constexpr std::uint64_t kTagEvalData = 0x21;
constexpr std::uint64_t kTagHook = 0x22;
constexpr std::uint64_t kTagGan = 0x23;
constexpr std::uint64_t kTagSynth = 0x24;

MomentFit moments_of(const std::vector<const PricePath*>& paths, const ProcessSpec& gbm_spec) {
    const std::size_t len = paths[0]->values.size();
    MomentFit fit;
    fit.paths_used = static_cast<std::int64_t>(paths.size());
    fit.mean_empirical.resize(len);
    fit.var_empirical.resize(len);
    fit.mean_theoretical.resize(len);
    fit.var_theoretical.resize(len);
    std::vector<double> logs(paths.size());
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t i = 0; i < paths.size(); ++i) logs[i] = std::log(paths[i]->values[t]);
        fit.mean_empirical[t] = stats::mean(logs);
        fit.var_empirical[t] = stats::sample_variance(logs);
        const auto [m, v] = gbm_log_moments(gbm_spec, static_cast<double>(t));
        fit.mean_theoretical[t] = m;
        fit.var_theoretical[t] = v;
    }
    fit.r2_mean = stats::r2_against(fit.mean_empirical, fit.mean_theoretical);
    fit.r2_var = stats::r2_against(fit.var_empirical, fit.var_theoretical);
    return fit;
}

}  // namespace

MomentFit moment_r2(const PathSet& paths, const ProcessSpec& gbm_spec) {
    paths.validate();
    if (gbm_spec.kind != ProcessKind::GBM)
        throw ValidationError("moment_r2 requires a GBM spec");
    if (paths.size() < 100) throw ValidationError("moment_r2 needs at least 100 paths");
    std::vector<const PricePath*> refs;
    refs.reserve(paths.size());
    for (const auto& p : paths.paths) {
        for (double v : p.values)
            if (!(v > 0.0))
                throw ValidationError("moment_r2 requires strictly positive path values");
        refs.push_back(&p);
    }
    return moments_of(refs, gbm_spec);
}

MomentFit moment_r2_filtered(const PathSet& paths, const ProcessSpec& gbm_spec,
                             std::int64_t min_paths) {
    paths.validate();
    if (gbm_spec.kind != ProcessKind::GBM)
        throw ValidationError("moment_r2 requires a GBM spec");
    std::vector<const PricePath*> refs;
    refs.reserve(paths.size());
    for (const auto& p : paths.paths) {
        const bool positive =
            std::all_of(p.values.begin(), p.values.end(), [](double v) { return v > 0.0; });
        if (positive) refs.push_back(&p);
    }
    if (static_cast<std::int64_t>(refs.size()) < std::max<std::int64_t>(min_paths, 2)) {
        MomentFit fit;
        fit.paths_used = static_cast<std::int64_t>(refs.size());
        return fit;  // undefined R^2
    }
    return moments_of(refs, gbm_spec);
}

NormalityReport normality_test(const PathSet& paths, const ProcessSpec& gbm_spec, double alpha) {
    paths.validate();
    if (gbm_spec.kind != ProcessKind::GBM)
        throw ValidationError("normality_test requires a GBM spec");
    if (paths.size() < 100) throw ValidationError("normality_test needs at least 100 paths");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    for (const auto& p : paths.paths)
        for (double v : p.values)
            if (!(v > 0.0))
                throw ValidationError("normality_test requires strictly positive path values");

    const std::size_t len = paths.length();
    const std::size_t tested = len - 1;  // t = 0 excluded (zero variance)
    NormalityReport report;
    report.alpha = alpha;
    report.corrected_alpha = alpha / static_cast<double>(tested);
    std::vector<double> logs(paths.size());
    for (std::size_t t = 1; t < len; ++t) {
        for (std::size_t i = 0; i < paths.size(); ++i)
            logs[i] = std::log(paths.paths[i].values[t]);
        const auto [m, v] = gbm_log_moments(gbm_spec, static_cast<double>(t));
        const double d = stats::ks_statistic_normal(logs, m, std::sqrt(v));
        const double p = stats::ks_pvalue(d, logs.size());
        report.statistic.push_back(d);
        report.p_value.push_back(p);
        const bool ok = p >= report.corrected_alpha;
        report.pass.push_back(ok);
        if (ok) ++report.n_pass;
    }
    report.overall =
        static_cast<double>(report.n_pass) >= 0.95 * static_cast<double>(tested);
    return report;
}

DistComparison compare_sharpe_dists(std::span<const double> target,
                                    std::span<const double> experimental, int bins) {
    if (target.empty() || experimental.empty())
        throw ValidationError("compare_sharpe_dists needs two non-empty samples");
    std::vector<double> pooled(target.begin(), target.end());
    pooled.insert(pooled.end(), experimental.begin(), experimental.end());
    std::sort(pooled.begin(), pooled.end());
    if (bins <= 0) bins = stats::fd_bin_count(pooled);

    DistComparison cmp;
    cmp.bin_edges = stats::linspace_edges(pooled.front(), pooled.back(), bins);
    cmp.pdf_target = stats::histogram(target, cmp.bin_edges).mass;
    cmp.pdf_experimental = stats::histogram(experimental, cmp.bin_edges).mass;
    cmp.cdf_grid = cmp.bin_edges;
    auto ecdf = [](std::span<const double> xs, double at) {
        std::size_t n = 0;
        for (double x : xs)
            if (x <= at) ++n;
        return static_cast<double>(n) / static_cast<double>(xs.size());
    };
    for (double g : cmp.cdf_grid) {
        cmp.cdf_target.push_back(ecdf(target, g));
        cmp.cdf_experimental.push_back(ecdf(experimental, g));
    }
    cmp.ks = stats::ks_statistic_two_sample(target, experimental);
    return cmp;
}

EffectivenessVerdict effectiveness(const SharpeSample& sharpes, double threshold) {
    if (sharpes.total() == 0) throw ValidationError("effectiveness needs a non-empty sample");
    EffectivenessVerdict v;
    v.threshold = threshold;
    v.n_defined = static_cast<std::int64_t>(sharpes.values.size());
    v.n_total = sharpes.total();
    std::int64_t positive = 0;
    for (double s : sharpes.values)
        if (s > 0.0) ++positive;
    v.fraction = static_cast<double>(positive) / static_cast<double>(v.n_total);
    v.verdict = v.fraction > threshold;
    return v;
}

gan::EvalHook make_gbm_r2_hook(const ProcessSpec& gbm_spec, std::int64_t eval_paths,
                               std::uint64_t eval_seed) {
    if (gbm_spec.kind != ProcessKind::GBM)
        throw ValidationError("the R^2 hook requires a GBM spec");
    return [gbm_spec, eval_paths, eval_seed](const gan::GanModel& model,
                                             std::int64_t) -> std::pair<double, double> {
        const PathSet sample = gan::generate(model, eval_paths, model.config.seq_len, eval_seed);
        const MomentFit fit = moment_r2_filtered(sample, gbm_spec, 100);
        return {fit.r2_mean.value_or(kNan), fit.r2_var.value_or(kNan)};
    };
}

PipelineReport run_pipeline(const ProcessSpec& process, StrategyKind strategy,
                            const gan::GanConfig& gan_config, const PipelineCounts& counts,
                            std::uint64_t seed, int threads, double effectiveness_threshold) {
    process.validate();
    gan_config.validate();
    if (counts.n_train < 1 || counts.n_eval < 1 || counts.n_synth < 1)
        throw ValidationError("pipeline counts must be >= 1");

    PipelineReport report;
    report.process = process;
    report.strategy = strategy;
    report.gan_config = gan_config;
    report.counts = counts;
    report.seed = seed;

    const std::int64_t steps = gan_config.seq_len;
    SimulateOptions sim_opts;
    sim_opts.threads = threads;
    const PathSet train_data =
        simulate(process, steps, counts.n_train, substream_seed(seed, kTagTrainData), sim_opts);
    const PathSet eval_data =
        simulate(process, steps, counts.n_eval, substream_seed(seed, kTagEvalData), sim_opts);

    gan::GanConfig cfg = gan_config;
    cfg.seed = substream_seed(seed, kTagGan);
    gan::EvalHook hook;
    if (process.kind == ProcessKind::GBM)
        hook = make_gbm_r2_hook(process, cfg.eval_paths, substream_seed(seed, kTagHook));

    gan::TrainOutcome outcome = gan::train(cfg, train_data, hook);
    report.gan_diverged = outcome.diverged;
    report.gan_error = outcome.error;
    report.trained_batches = outcome.model.trained_batches;
    report.untrained = outcome.model.trained_batches == 0;
    report.train_log = std::move(outcome.log);
    if (!report.train_log.records.empty()) {
        report.final_r2_mean = report.train_log.records.back().r2_mean;
        report.final_r2_var = report.train_log.records.back().r2_var;
    } else {
        report.final_r2_mean = report.final_r2_var = kNan;
    }

    const PathSet synth =
        gan::generate(outcome.model, counts.n_synth, steps, substream_seed(seed, kTagSynth));

    const ParamGrid grid = enumerate_grid(strategy);
    const GridResult selected = select_best(synth, grid, threads);
    report.viable = selected.viable;
    if (!selected.viable) return report;
    report.best_config = selected.best_config;
    report.best_score = selected.best_score;

    report.target_sample = sharpe_distribution(selected.best_config, eval_data, threads);
    report.experimental_sample = sharpe_distribution(selected.best_config, synth, threads);
    if (!report.target_sample.values.empty() && !report.experimental_sample.values.empty())
        report.comparison =
            compare_sharpe_dists(report.target_sample.values, report.experimental_sample.values);
    report.verdict_mc = effectiveness(report.target_sample, effectiveness_threshold);
    report.verdict_rgan = effectiveness(report.experimental_sample, effectiveness_threshold);
    report.agreement = report.verdict_mc.verdict == report.verdict_rgan.verdict;
    return report;
}

ConfusionMatrix confusion(const std::vector<PipelineReport>& runs) {
    if (runs.empty()) throw ValidationError("confusion needs at least one run");
    ConfusionMatrix m;
    for (const auto& r : runs) {
        if (!r.viable) continue;
        if (r.verdict_rgan.verdict) {
            if (r.verdict_mc.verdict)
                ++m.pos_pos;
            else
                ++m.pos_neg;
        } else {
            if (r.verdict_mc.verdict)
                ++m.neg_pos;
            else
                ++m.neg_neg;
        }
    }
    return m;
}

json moment_fit_to_json(const MomentFit& fit) {
    json j;
    j["mean_empirical"] = fit.mean_empirical;
    j["mean_theoretical"] = fit.mean_theoretical;
    j["var_empirical"] = fit.var_empirical;
    j["var_theoretical"] = fit.var_theoretical;
    j["r2_mean"] = fit.r2_mean ? json(*fit.r2_mean) : json(nullptr);
    j["r2_var"] = fit.r2_var ? json(*fit.r2_var) : json(nullptr);
    j["paths_used"] = fit.paths_used;
    return j;
}

json normality_report_to_json(const NormalityReport& report) {
    json j;
    j["statistic"] = report.statistic;
    j["p_value"] = report.p_value;
    j["pass"] = report.pass;
    j["alpha"] = report.alpha;
    j["corrected_alpha"] = report.corrected_alpha;
    j["n_pass"] = report.n_pass;
    j["overall"] = report.overall;
    return j;
}

json dist_comparison_to_json(const DistComparison& cmp) {
    json j;
    j["bin_edges"] = cmp.bin_edges;
    j["pdf_target"] = cmp.pdf_target;
    j["pdf_experimental"] = cmp.pdf_experimental;
    j["cdf_grid"] = cmp.cdf_grid;
    j["cdf_target"] = cmp.cdf_target;
    j["cdf_experimental"] = cmp.cdf_experimental;
    j["ks"] = cmp.ks;
    return j;
}

json effectiveness_to_json(const EffectivenessVerdict& verdict) {
    json j;
    j["fraction"] = verdict.fraction;
    j["threshold"] = verdict.threshold;
    j["verdict"] = verdict.verdict;
    j["n_defined"] = verdict.n_defined;
    j["n_total"] = verdict.n_total;
    return j;
}

json pipeline_report_to_json(const PipelineReport& report) {
    json j;
    j["process"] = io::process_spec_to_json(report.process);
    j["strategy_kind"] = strategy_kind_name(report.strategy);
    j["gan_config"] = io::gan_config_to_json(report.gan_config);
    j["counts"] = {{"n_train", report.counts.n_train},
                   {"n_eval", report.counts.n_eval},
                   {"n_synth", report.counts.n_synth}};
    j["seed"] = report.seed;
    j["gan_diverged"] = report.gan_diverged;
    if (!report.gan_error.empty()) j["gan_error"] = report.gan_error;
    j["untrained"] = report.untrained;
    j["trained_batches"] = report.trained_batches;
    j["final_r2_mean"] = std::isfinite(report.final_r2_mean) ? json(report.final_r2_mean) : json(nullptr);
    j["final_r2_var"] = std::isfinite(report.final_r2_var) ? json(report.final_r2_var) : json(nullptr);
    j["viable"] = report.viable;
    if (report.viable) {
        j["best_config"] = io::strategy_config_to_json(report.best_config);
        j["best_score"] = report.best_score;
        j["verdict_mc"] = effectiveness_to_json(report.verdict_mc);
        j["verdict_rgan"] = effectiveness_to_json(report.verdict_rgan);
        j["agreement"] = report.agreement;
        j["ks"] = report.comparison.ks;
        j["target_undefined"] = report.target_sample.n_undefined;
        j["experimental_undefined"] = report.experimental_sample.n_undefined;
    }
    return j;
}

}  // namespace btlab::eval
