#include "btlab.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <span>
#include <string>

#include "btlab/backtest.hpp"
#include "btlab/commands.hpp"
#include "btlab/errors.hpp"
#include "btlab/evaluation.hpp"
#include "btlab/io.hpp"
#include "btlab/nn.hpp"
#include "btlab/processes.hpp"
#include "btlab/rgan.hpp"
#include "btlab/strategies.hpp"

struct btlab_pathset {
    btlab::PathSet set;
};

struct btlab_gan {
    btlab::gan::GanModel model;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

btlab_status status_of(const std::exception& e) {
    if (dynamic_cast<const btlab::ValidationError*>(&e)) return BTLAB_ERROR_VALIDATION;
    if (dynamic_cast<const btlab::IoError*>(&e)) return BTLAB_ERROR_IO;
    if (dynamic_cast<const btlab::TrainingError*>(&e)) return BTLAB_ERROR_RUNTIME;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return BTLAB_ERROR_INVALID_ARGUMENT;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return BTLAB_ERROR_INVALID_ARGUMENT;
    return BTLAB_ERROR_RUNTIME;
}

template <typename Fn>
btlab_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return BTLAB_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return status_of(e);
    } catch (...) {
        set_error("unknown error");
        return BTLAB_ERROR_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

nlohmann::json parse_json_arg(const char* text, const char* what) {
    if (!text) throw std::invalid_argument(std::string(what) + " must not be null");
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON for ") + what + ": " + e.what());
    }
}

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

btlab_status run_command(nlohmann::json (*cmd)(const nlohmann::json&), const char* options_json,
                         char** summary_json_out) {
    return guarded([&] {
        const auto options = parse_json_arg(options_json, "options");
        const auto summary = cmd(options);
        if (summary_json_out) *summary_json_out = dup_string(summary.dump(2));
    });
}

}  // namespace

extern "C" {

const char* btlab_version(void) { return btlab::cmd::kToolVersion; }

const char* btlab_last_error(void) { return g_last_error.c_str(); }

void btlab_string_free(char* s) { delete[] s; }

btlab_status btlab_simulate(const char* process_json, int64_t steps, int64_t n_paths,
                            uint64_t seed, btlab_pathset** out) {
    return guarded([&] {
        require(out != nullptr, "out must not be null");
        const auto spec = btlab::io::process_spec_from_json(
            parse_json_arg(process_json, "process spec"));
        auto* handle = new btlab_pathset{btlab::simulate(spec, steps, n_paths, seed)};
        *out = handle;
    });
}

int64_t btlab_pathset_n_paths(const btlab_pathset* set) {
    return set ? static_cast<int64_t>(set->set.size()) : 0;
}

int64_t btlab_pathset_length(const btlab_pathset* set) {
    return set ? static_cast<int64_t>(set->set.length()) : 0;
}

btlab_status btlab_pathset_values(const btlab_pathset* set, int64_t index, double* buf,
                                  int64_t buf_len) {
    return guarded([&] {
        require(set != nullptr && buf != nullptr, "set and buf must not be null");
        require(index >= 0 && index < static_cast<int64_t>(set->set.size()),
                "path index out of range");
        const auto& values = set->set.paths[static_cast<std::size_t>(index)].values;
        require(buf_len >= static_cast<int64_t>(values.size()), "buffer too small");
        std::memcpy(buf, values.data(), values.size() * sizeof(double));
    });
}

btlab_status btlab_pathset_save_csv(const btlab_pathset* set, const char* csv_path) {
    return guarded([&] {
        require(set != nullptr && csv_path != nullptr, "set and csv_path must not be null");
        btlab::io::save_pathset_csv(set->set, csv_path);
    });
}

btlab_status btlab_pathset_load_csv(const char* csv_path, btlab_pathset** out) {
    return guarded([&] {
        require(csv_path != nullptr && out != nullptr, "csv_path and out must not be null");
        *out = new btlab_pathset{btlab::io::load_pathset_csv(csv_path)};
    });
}

void btlab_pathset_free(btlab_pathset* set) { delete set; }

btlab_status btlab_gbm_log_moments(const char* process_json, double t, double* mean_out,
                                   double* var_out) {
    return guarded([&] {
        require(mean_out != nullptr && var_out != nullptr, "outputs must not be null");
        const auto spec = btlab::io::process_spec_from_json(
            parse_json_arg(process_json, "process spec"));
        const auto [m, v] = btlab::gbm_log_moments(spec, t);
        *mean_out = m;
        *var_out = v;
    });
}

btlab_status btlab_ar2_char_roots(const char* process_json, double* hi_out, double* lo_out) {
    return guarded([&] {
        require(hi_out != nullptr && lo_out != nullptr, "outputs must not be null");
        const auto spec = btlab::io::process_spec_from_json(
            parse_json_arg(process_json, "process spec"));
        const auto [hi, lo] = btlab::ar2_char_roots(spec);
        *hi_out = hi;
        *lo_out = lo;
    });
}

btlab_status btlab_ar2_stationary_variance(const char* process_json, double* out) {
    return guarded([&] {
        require(out != nullptr, "out must not be null");
        const auto spec = btlab::io::process_spec_from_json(
            parse_json_arg(process_json, "process spec"));
        *out = btlab::ar2_stationary_variance(spec);
    });
}

btlab_status btlab_positions(const double* path, int64_t n_values, const char* strategy_json,
                             int8_t* positions_out) {
    return guarded([&] {
        require(path != nullptr && positions_out != nullptr, "path and output must not be null");
        require(n_values >= 2, "path needs at least 2 values");
        const auto config = btlab::io::strategy_config_from_json(
            parse_json_arg(strategy_json, "strategy config"));
        btlab::positions_into(std::span<const double>(path, static_cast<std::size_t>(n_values)),
                              config,
                              std::span<int8_t>(positions_out,
                                                static_cast<std::size_t>(n_values - 1)));
    });
}

btlab_status btlab_backtest(const double* path, int64_t n_values, const char* strategy_json,
                            char** report_json_out) {
    return guarded([&] {
        require(path != nullptr && report_json_out != nullptr,
                "path and output must not be null");
        require(n_values >= 2, "path needs at least 2 values");
        const auto config = btlab::io::strategy_config_from_json(
            parse_json_arg(strategy_json, "strategy config"));
        const auto report = btlab::run_backtest(
            std::span<const double>(path, static_cast<std::size_t>(n_values)), config);
        *report_json_out = dup_string(btlab::io::backtest_report_to_json(report).dump(2));
    });
}

btlab_status btlab_grid_size(const char* strategy_kind, int64_t* out) {
    return guarded([&] {
        require(strategy_kind != nullptr && out != nullptr, "arguments must not be null");
        *out = static_cast<int64_t>(
            btlab::enumerate_grid(btlab::strategy_kind_from_name(strategy_kind)).size());
    });
}

btlab_status btlab_grid_config(const char* strategy_kind, int64_t index,
                               char** config_json_out) {
    return guarded([&] {
        require(strategy_kind != nullptr && config_json_out != nullptr,
                "arguments must not be null");
        const auto grid = btlab::enumerate_grid(btlab::strategy_kind_from_name(strategy_kind));
        require(index >= 0 && index < static_cast<int64_t>(grid.size()),
                "grid index out of range");
        *config_json_out = dup_string(
            btlab::io::strategy_config_to_json(grid.configs[static_cast<std::size_t>(index)])
                .dump());
    });
}

btlab_status btlab_select_best(const btlab_pathset* set, const char* strategy_kind, int threads,
                               const char* scores_csv_path, char** result_json_out) {
    return guarded([&] {
        require(set != nullptr && strategy_kind != nullptr, "arguments must not be null");
        const auto grid = btlab::enumerate_grid(btlab::strategy_kind_from_name(strategy_kind));
        const auto result = btlab::select_best(set->set, grid, threads);
        if (scores_csv_path) btlab::io::save_grid_csv(result, grid, scores_csv_path);
        nlohmann::json j;
        j["viable"] = result.viable;
        j["paths_used"] = result.paths_used;
        if (result.viable) {
            j["best_config"] = btlab::io::strategy_config_to_json(result.best_config);
            j["best_score"] = result.best_score;
            j["best_index"] = result.best_index;
        }
        if (result_json_out) *result_json_out = dup_string(j.dump(2));
    });
}

btlab_status btlab_mac_heatmap(const double* path, int64_t n_values, int threads,
                               const char* out_csv_path, double* smoothness_out) {
    return guarded([&] {
        require(path != nullptr, "path must not be null");
        btlab::PricePath p;
        p.values.assign(path, path + n_values);
        const auto m = btlab::mac_heatmap(p, threads);
        if (out_csv_path) btlab::io::save_heatmap_csv(m, out_csv_path);
        if (smoothness_out) *smoothness_out = btlab::heatmap_smoothness(m);
    });
}

btlab_status btlab_sharpe_distribution(const btlab_pathset* set, const char* strategy_json,
                                       int threads, double* out, int64_t* n_undefined_out) {
    return guarded([&] {
        require(set != nullptr && out != nullptr, "set and out must not be null");
        const auto config = btlab::io::strategy_config_from_json(
            parse_json_arg(strategy_json, "strategy config"));
        // keep per-path alignment: undefined entries surface as NaN
        std::size_t i = 0;
        int64_t undefined = 0;
        for (const auto& path : set->set.paths) {
            const auto report = btlab::run_backtest(path, config);
            if (report.sharpe) {
                out[i++] = *report.sharpe;
            } else {
                out[i++] = std::numeric_limits<double>::quiet_NaN();
                ++undefined;
            }
        }
        (void)threads;
        if (n_undefined_out) *n_undefined_out = undefined;
    });
}

btlab_status btlab_gan_count_params(const char* arch, int64_t hidden, int64_t* out) {
    return guarded([&] {
        require(arch != nullptr && out != nullptr, "arguments must not be null");
        const std::string a = arch;
        if (a == "generator")
            *out = btlab::nn::count_params(btlab::nn::Architecture::Generator,
                                           static_cast<int>(hidden));
        else if (a == "discriminator")
            *out = btlab::nn::count_params(btlab::nn::Architecture::Discriminator,
                                           static_cast<int>(hidden));
        else
            throw std::invalid_argument("arch must be \"generator\" or \"discriminator\"");
    });
}

btlab_status btlab_gan_train(const char* gan_config_json, const btlab_pathset* data,
                             const char* eval_process_json, const char* trainlog_csv_path,
                             btlab_gan** out) {
    return guarded([&] {
        require(data != nullptr && out != nullptr, "data and out must not be null");
        const auto cfg = btlab::io::gan_config_from_json(
            gan_config_json ? parse_json_arg(gan_config_json, "gan config")
                            : nlohmann::json::object());
        btlab::gan::EvalHook hook;
        if (eval_process_json) {
            const auto spec = btlab::io::process_spec_from_json(
                parse_json_arg(eval_process_json, "eval process"));
            hook = btlab::eval::make_gbm_r2_hook(spec, cfg.eval_paths,
                                               btlab::substream_seed(cfg.seed, 0x77));
        }
        auto outcome = btlab::gan::train(cfg, data->set, hook);
        if (trainlog_csv_path) btlab::io::save_trainlog_csv(outcome.log, trainlog_csv_path);
        if (outcome.diverged)
            throw btlab::TrainingError("training diverged after " +
                                       std::to_string(outcome.model.trained_batches) +
                                       " batches: " + outcome.error);
        *out = new btlab_gan{std::move(outcome.model)};
    });
}

btlab_status btlab_gan_generate(const btlab_gan* model, int64_t n_paths, int64_t steps,
                                uint64_t seed, btlab_pathset** out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "model and out must not be null");
        *out = new btlab_pathset{btlab::gan::generate(model->model, n_paths, steps, seed)};
    });
}

btlab_status btlab_gan_save(const btlab_gan* model, const char* dir) {
    return guarded([&] {
        require(model != nullptr && dir != nullptr, "model and dir must not be null");
        btlab::gan::save_checkpoint(model->model, dir);
    });
}

btlab_status btlab_gan_load(const char* dir, btlab_gan** out) {
    return guarded([&] {
        require(dir != nullptr && out != nullptr, "dir and out must not be null");
        *out = new btlab_gan{btlab::gan::load_checkpoint(dir)};
    });
}

void btlab_gan_free(btlab_gan* model) { delete model; }

btlab_status btlab_moment_r2(const btlab_pathset* set, const char* gbm_json,
                             char** fit_json_out) {
    return guarded([&] {
        require(set != nullptr && fit_json_out != nullptr, "arguments must not be null");
        const auto spec =
            btlab::io::process_spec_from_json(parse_json_arg(gbm_json, "gbm spec"));
        const auto fit = btlab::eval::moment_r2(set->set, spec);
        *fit_json_out = dup_string(btlab::eval::moment_fit_to_json(fit).dump(2));
    });
}

btlab_status btlab_normality_test(const btlab_pathset* set, const char* gbm_json, double alpha,
                                  char** report_json_out) {
    return guarded([&] {
        require(set != nullptr && report_json_out != nullptr, "arguments must not be null");
        const auto spec =
            btlab::io::process_spec_from_json(parse_json_arg(gbm_json, "gbm spec"));
        const auto report = btlab::eval::normality_test(set->set, spec, alpha);
        *report_json_out = dup_string(btlab::eval::normality_report_to_json(report).dump(2));
    });
}

btlab_status btlab_compare_sharpe_dists(const double* target, int64_t n_target,
                                        const double* experimental, int64_t n_experimental,
                                        int bins, char** comparison_json_out) {
    return guarded([&] {
        require(target != nullptr && experimental != nullptr && comparison_json_out != nullptr,
                "arguments must not be null");
        const auto cmp = btlab::eval::compare_sharpe_dists(
            std::span<const double>(target, static_cast<std::size_t>(n_target)),
            std::span<const double>(experimental, static_cast<std::size_t>(n_experimental)),
            bins);
        *comparison_json_out = dup_string(btlab::eval::dist_comparison_to_json(cmp).dump(2));
    });
}

btlab_status btlab_effectiveness(const double* sharpes, int64_t n, double threshold,
                                 char** verdict_json_out) {
    return guarded([&] {
        require(sharpes != nullptr && verdict_json_out != nullptr,
                "arguments must not be null");
        btlab::SharpeSample sample;
        for (int64_t i = 0; i < n; ++i) {
            if (std::isnan(sharpes[i]))
                ++sample.n_undefined;
            else
                sample.values.push_back(sharpes[i]);
        }
        const auto verdict = btlab::eval::effectiveness(sample, threshold);
        *verdict_json_out = dup_string(btlab::eval::effectiveness_to_json(verdict).dump(2));
    });
}

btlab_status btlab_cmd_simulate(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_simulate, options_json, summary_json_out);
}
btlab_status btlab_cmd_backtest(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_backtest, options_json, summary_json_out);
}
btlab_status btlab_cmd_grid(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_grid, options_json, summary_json_out);
}
btlab_status btlab_cmd_heatmap(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_heatmap, options_json, summary_json_out);
}
btlab_status btlab_cmd_demo_overfit(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_demo_overfit, options_json, summary_json_out);
}
btlab_status btlab_cmd_gan_train(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_gan_train, options_json, summary_json_out);
}
btlab_status btlab_cmd_gan_sample(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_gan_sample, options_json, summary_json_out);
}
btlab_status btlab_cmd_gan_eval(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_gan_eval, options_json, summary_json_out);
}
btlab_status btlab_cmd_pipeline(const char* options_json, char** summary_json_out) {
    return run_command(btlab::cmd::cmd_pipeline, options_json, summary_json_out);
}

}  // extern "C"
