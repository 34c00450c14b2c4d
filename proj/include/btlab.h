/* btlab — backtest-overfitting laboratory.
 *
 * C interface to the btlab shared library. All functions return a
 * btlab_status; non-OK calls leave a thread-local message readable via
 * btlab_last_error(). Objects returned through out-parameters are owned by
 * the caller and released with the matching *_free function. Strings
 * returned through char** out-parameters are released with
 * btlab_string_free().
 *
 * Structured arguments (process specs, strategy configs, GAN configs,
 * command options) are JSON strings; the schemas match the btlab CLI config
 * files and are documented in the project README.
 */

#ifndef BTLAB_H
#define BTLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum btlab_status {
    BTLAB_OK = 0,
    BTLAB_ERROR_INVALID_ARGUMENT = 1, /* malformed JSON, null pointers, bad enum names */
    BTLAB_ERROR_VALIDATION = 2,       /* domain precondition violated */
    BTLAB_ERROR_RUNTIME = 3,          /* numeric failure, training divergence */
    BTLAB_ERROR_IO = 4                /* file errors */
} btlab_status;

const char* btlab_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* btlab_last_error(void);

void btlab_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Path sets                                                           */

typedef struct btlab_pathset btlab_pathset;

/* Simulates n_paths of `steps` steps from a process spec JSON, e.g.
 * {"kind":"gbm","mu":0.02,"sigma":0.1,"y0":1}. Identical arguments yield
 * bit-identical results for a fixed build. */
btlab_status btlab_simulate(const char* process_json, int64_t steps, int64_t n_paths,
                            uint64_t seed, btlab_pathset** out);

int64_t btlab_pathset_n_paths(const btlab_pathset* set);
int64_t btlab_pathset_length(const btlab_pathset* set); /* values per path */

/* Copies path `index` into buf (buf_len >= length). */
btlab_status btlab_pathset_values(const btlab_pathset* set, int64_t index, double* buf,
                                  int64_t buf_len);

/* CSV format: header path_id,t,value; a .meta.json sidecar is written next
 * to the CSV. */
btlab_status btlab_pathset_save_csv(const btlab_pathset* set, const char* csv_path);
btlab_status btlab_pathset_load_csv(const char* csv_path, btlab_pathset** out);
void btlab_pathset_free(btlab_pathset* set);

/* ------------------------------------------------------------------ */
/* Process oracles                                                     */

/* Mean and variance of ln y_t under a GBM spec. */
btlab_status btlab_gbm_log_moments(const char* process_json, double t, double* mean_out,
                                   double* var_out);

/* Moduli of the AR(2) characteristic roots, descending. */
btlab_status btlab_ar2_char_roots(const char* process_json, double* hi_out, double* lo_out);

/* Yule-Walker stationary variance of an AR(2) spec. */
btlab_status btlab_ar2_stationary_variance(const char* process_json, double* out);

/* ------------------------------------------------------------------ */
/* Strategies and backtests                                            */

/* Positions over a price path for a strategy config JSON, e.g.
 * {"kind":"mac","p1":5,"p2":20} or
 * {"kind":"bh","entry":3,"hold":7,"stop_loss":5,"side":1}.
 * positions_out must hold n_values - 1 entries in {-1,0,+1}. */
btlab_status btlab_positions(const double* path, int64_t n_values, const char* strategy_json,
                             int8_t* positions_out);

/* Full report as JSON: pnl, equity, sharpe (null when undefined), n_trades. */
btlab_status btlab_backtest(const double* path, int64_t n_values, const char* strategy_json,
                            char** report_json_out);

/* Grid family size and the config JSON at one grid index ("mac" or "bh"). */
btlab_status btlab_grid_size(const char* strategy_kind, int64_t* out);
btlab_status btlab_grid_config(const char* strategy_kind, int64_t index,
                               char** config_json_out);

/* Grid search over a path set. Result JSON: {viable, best_config, best_score,
 * paths_used}. When scores_csv_path is non-null the per-config score table is
 * written there (config_json,score; NaN for excluded configs). */
btlab_status btlab_select_best(const btlab_pathset* set, const char* strategy_kind,
                               int threads, const char* scores_csv_path,
                               char** result_json_out);

/* Sharpe of every MAC (p1,p2) on one path, written as CSV (p1,p2,sharpe with
 * NaN sentinels); smoothness_out receives the mean absolute 4-neighbor
 * difference over defined cells. */
btlab_status btlab_mac_heatmap(const double* path, int64_t n_values, int threads,
                               const char* out_csv_path, double* smoothness_out);

/* Per-path Sharpe of one config over a set. out must hold n_paths entries;
 * undefined values are returned as NaN and counted in n_undefined_out. */
btlab_status btlab_sharpe_distribution(const btlab_pathset* set, const char* strategy_json,
                                       int threads, double* out, int64_t* n_undefined_out);

/* ------------------------------------------------------------------ */
/* Recurrent GAN                                                       */

typedef struct btlab_gan btlab_gan;

/* Parameter-count oracle; arch is "generator" or "discriminator". */
btlab_status btlab_gan_count_params(const char* arch, int64_t hidden, int64_t* out);

/* Trains on a path set. gan_config_json fields (all optional) include hidden,
 * seq_len, batch_size, scaling, lr, lr_d, lr_g, d_steps, beta1, beta2,
 * grad_clip, max_batches, eval_every, eval_paths, r2_stop_mean, r2_stop_var,
 * seed. When eval_process_json is a GBM spec, moment-R^2 evaluation and early
 * stopping are enabled. trainlog_csv_path may be null. A diverged run returns
 * BTLAB_ERROR_RUNTIME and keeps the partial log. */
btlab_status btlab_gan_train(const char* gan_config_json, const btlab_pathset* data,
                             const char* eval_process_json, const char* trainlog_csv_path,
                             btlab_gan** out);

btlab_status btlab_gan_generate(const btlab_gan* model, int64_t n_paths, int64_t steps,
                                uint64_t seed, btlab_pathset** out);

/* Checkpoint directory: manifest.json + params.bin; round trips bit-exact. */
btlab_status btlab_gan_save(const btlab_gan* model, const char* dir);
btlab_status btlab_gan_load(const char* dir, btlab_gan** out);
void btlab_gan_free(btlab_gan* model);

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */

/* R^2 of per-t mean/variance of ln y_t against the GBM lines (strict: every
 * value must be positive, >= 100 paths). */
btlab_status btlab_moment_r2(const btlab_pathset* set, const char* gbm_json,
                             char** fit_json_out);

/* Per-t one-sample KS against the GBM log-normal lines at Bonferroni-corrected
 * alpha. */
btlab_status btlab_normality_test(const btlab_pathset* set, const char* gbm_json,
                                  double alpha, char** report_json_out);

/* Shared-bin PDFs, CDF grids and the two-sample KS statistic. bins <= 0
 * selects Freedman-Diaconis. */
btlab_status btlab_compare_sharpe_dists(const double* target, int64_t n_target,
                                        const double* experimental, int64_t n_experimental,
                                        int bins, char** comparison_json_out);

/* Effectiveness rule: fraction of Sharpe > 0 strictly above threshold.
 * NaN entries count as not-positive. */
btlab_status btlab_effectiveness(const double* sharpes, int64_t n, double threshold,
                                 char** verdict_json_out);

/* ------------------------------------------------------------------ */
/* Commands                                                            */
/* Each command takes a resolved options JSON (see README), writes its
 * artifacts and a manifest under options["out_dir"], and returns a summary
 * JSON. These back the btlab CLI subcommands one-to-one. */

btlab_status btlab_cmd_simulate(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_backtest(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_grid(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_heatmap(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_demo_overfit(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_gan_train(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_gan_sample(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_gan_eval(const char* options_json, char** summary_json_out);
btlab_status btlab_cmd_pipeline(const char* options_json, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* BTLAB_H */
