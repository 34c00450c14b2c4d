#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btlab/backtest.hpp"
#include "btlab/processes.hpp"
#include "btlab/rgan.hpp"
#include "btlab/strategies.hpp"

namespace btlab::eval {

using nlohmann::json;

// Per-timestep sample moments of ln y_t against the theoretical lines.
// R^2 uses the theoretical line as the predictor (no refitting).
struct MomentFit {
    std::vector<double> mean_empirical, mean_theoretical;
    std::vector<double> var_empirical, var_theoretical;
    std::optional<double> r2_mean, r2_var;  // nullopt when SS_tot degenerates
    std::int64_t paths_used = 0;
};

// Strict form: every value of every path must be > 0 (domain error otherwise);
// needs >= 100 paths.
MomentFit moment_r2(const PathSet& paths, const ProcessSpec& gbm_spec);

// Filtered form for generated data: drops paths with any non-positive value;
// returns undefined R^2 when fewer than min_paths survive.
MomentFit moment_r2_filtered(const PathSet& paths, const ProcessSpec& gbm_spec,
                             std::int64_t min_paths = 100);

struct NormalityReport {
    std::vector<double> statistic;  // per tested timestep (t = 1..T)
    std::vector<double> p_value;
    std::vector<bool> pass;         // at the Bonferroni-corrected level
    double alpha = 0.0;
    double corrected_alpha = 0.0;
    std::int64_t n_pass = 0;
    bool overall = false;           // >= 95% of timesteps pass
};

// Per-t one-sample KS of ln y_t against the theoretical normal; t = 0 is
// excluded (zero variance).
NormalityReport normality_test(const PathSet& paths, const ProcessSpec& gbm_spec, double alpha);

struct DistComparison {
    std::vector<double> bin_edges;     // shared bins over the pooled support
    std::vector<double> pdf_target;    // mass per bin, sums to 1
    std::vector<double> pdf_experimental;
    std::vector<double> cdf_grid;      // evaluation points (the bin edges)
    std::vector<double> cdf_target;
    std::vector<double> cdf_experimental;
    double ks = 0.0;                   // exact two-sample statistic
};

// bins <= 0 selects Freedman-Diaconis on the pooled sample.
DistComparison compare_sharpe_dists(std::span<const double> target,
                                    std::span<const double> experimental, int bins = 0);

// The paper's effectiveness rule: a strategy works on an ensemble when the
// fraction of paths with Sharpe > 0 strictly exceeds the threshold. Undefined
// Sharpe values count in the denominator as not-positive.
struct EffectivenessVerdict {
    double fraction = 0.0;
    double threshold = 0.75;
    bool verdict = false;
    std::int64_t n_defined = 0;
    std::int64_t n_total = 0;
};

EffectivenessVerdict effectiveness(const SharpeSample& sharpes, double threshold = 0.75);

// Training hook computing moment R^2 of freshly generated paths against the
// GBM lines; reports NaN until at least 100 strictly positive paths emerge.
gan::EvalHook make_gbm_r2_hook(const ProcessSpec& gbm_spec, std::int64_t eval_paths,
                               std::uint64_t eval_seed);

struct PipelineCounts {
    std::int64_t n_train = 1000;  // GAN training paths
    std::int64_t n_eval = 2000;   // fresh true-process paths (target sample)
    std::int64_t n_synth = 500;   // generated paths (experimental sample)
};

// Full backtest-on-generated-paths run: simulate, train, generate, pick the
// best config on the synthetic ensemble, and compare its Sharpe distribution
// on true vs generated paths.
struct PipelineReport {
    ProcessSpec process;
    StrategyKind strategy = StrategyKind::BH;
    gan::GanConfig gan_config;
    PipelineCounts counts;
    std::uint64_t seed = 0;

    bool gan_diverged = false;
    std::string gan_error;
    bool untrained = false;            // generator never saw a batch
    std::int64_t trained_batches = 0;
    double final_r2_mean = 0.0;        // NaN when no evaluator ran
    double final_r2_var = 0.0;

    bool viable = false;               // grid search found a defined config
    StrategyConfig best_config;
    double best_score = 0.0;

    SharpeSample target_sample;        // true-process paths
    SharpeSample experimental_sample;  // GAN paths
    DistComparison comparison;
    EffectivenessVerdict verdict_mc;
    EffectivenessVerdict verdict_rgan;
    bool agreement = false;

    gan::TrainLog train_log;
};

PipelineReport run_pipeline(const ProcessSpec& process, StrategyKind strategy,
                            const gan::GanConfig& gan_config, const PipelineCounts& counts,
                            std::uint64_t seed, int threads = 0,
                            double effectiveness_threshold = 0.75);

// RGAN verdict vs Monte Carlo verdict over completed runs.
struct ConfusionMatrix {
    std::int64_t pos_pos = 0;  // rgan+ / mc+
    std::int64_t pos_neg = 0;  // rgan+ / mc-
    std::int64_t neg_pos = 0;  // rgan- / mc+
    std::int64_t neg_neg = 0;  // rgan- / mc-
    std::int64_t total() const { return pos_pos + pos_neg + neg_pos + neg_neg; }
};

ConfusionMatrix confusion(const std::vector<PipelineReport>& runs);

json moment_fit_to_json(const MomentFit& fit);
json normality_report_to_json(const NormalityReport& report);
json dist_comparison_to_json(const DistComparison& cmp);
json effectiveness_to_json(const EffectivenessVerdict& verdict);
json pipeline_report_to_json(const PipelineReport& report);

}  // namespace btlab::eval
