// btlab command-line front end. Flag parsing and config-file merging happen
// here; everything else goes through the C API of the btlab shared library.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "btlab.h"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

int exit_code_of(btlab_status status) {
    switch (status) {
        case BTLAB_OK: return 0;
        case BTLAB_ERROR_INVALID_ARGUMENT: return kExitUsage;
        case BTLAB_ERROR_VALIDATION: return kExitValidation;
        case BTLAB_ERROR_RUNTIME:
        case BTLAB_ERROR_IO: return kExitRuntime;
    }
    return kExitRuntime;
}

// Option sources, weakest first: built-in core defaults, config file, flags.
struct OptionBuilder {
    CLI::App* cmd;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string name;

    explicit OptionBuilder(CLI::App* app) : cmd(app) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("-o,--out-dir", out_dir,
                        "output directory (default: $BTLAB_OUT_DIR or .)");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
        cmd->add_option("--name", name, "output file stem");
    }

    json resolve() const {
        json options = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "btlab: cannot open config file " << config_path << "\n";
                std::exit(kExitUsage);
            }
            try {
                in >> options;
            } catch (const std::exception& e) {
                std::cerr << "btlab: bad config file: " << e.what() << "\n";
                std::exit(kExitUsage);
            }
            if (!options.is_object()) {
                std::cerr << "btlab: config file must hold a JSON object\n";
                std::exit(kExitUsage);
            }
        }
        if (cmd->count("--out-dir"))
            options["out_dir"] = out_dir;
        else if (!options.contains("out_dir")) {
            const char* env = std::getenv("BTLAB_OUT_DIR");
            options["out_dir"] = env ? env : ".";
        }
        if (cmd->count("--seed")) options["seed"] = seed;
        if (cmd->count("--threads")) options["threads"] = threads;
        if (cmd->count("--name")) options["name"] = name;
        return options;
    }
};

// Shared process flags; only flags the user passed override the config file.
struct ProcessFlags {
    CLI::App* cmd;
    std::string kind;
    double sigma = 0, mu = 0, y0 = 0, a = 0, b = 0, c = 0, p0 = 0, p1_init = 0;

    explicit ProcessFlags(CLI::App* app) : cmd(app) {
        cmd->add_option("--process", kind, "process kind: random-walk, white-noise, gbm, ar2");
        cmd->add_option("--sigma", sigma, "per-step noise standard deviation");
        cmd->add_option("--mu", mu, "GBM drift per step");
        cmd->add_option("--y0", y0, "GBM initial level");
        cmd->add_option("--a", a, "AR(2) intercept");
        cmd->add_option("--b", b, "AR(2) lag-1 coefficient");
        cmd->add_option("--c", c, "AR(2) lag-2 coefficient");
        cmd->add_option("--p0", p0, "initial value (random-walk / AR2)");
        cmd->add_option("--p1-init", p1_init, "AR(2) second initial value");
    }

    void apply(json& options) const {
        json& spec = options["process"];
        if (!spec.is_object()) spec = json::object();
        if (cmd->count("--process")) spec["kind"] = kind;
        if (cmd->count("--sigma")) spec["sigma"] = sigma;
        if (cmd->count("--mu")) spec["mu"] = mu;
        if (cmd->count("--y0")) spec["y0"] = y0;
        if (cmd->count("--a")) spec["a"] = a;
        if (cmd->count("--b")) spec["b"] = b;
        if (cmd->count("--c")) spec["c"] = c;
        if (cmd->count("--p0")) spec["p0"] = p0;
        if (cmd->count("--p1-init")) spec["p1_init"] = p1_init;
    }
};

struct GanFlags {
    CLI::App* cmd;
    int hidden = 0, seq_len = 0, batch_size = 0, eval_paths = 0, d_steps = 0;
    double scaling = 0, lr = 0, lr_d = 0, lr_g = 0;
    std::int64_t max_batches = 0, eval_every = 0;

    explicit GanFlags(CLI::App* app) : cmd(app) {
        cmd->add_option("--hidden", hidden, "LSTM hidden units");
        cmd->add_option("--seq-len", seq_len, "sequence steps (values = steps + 1)");
        cmd->add_option("--batch-size", batch_size, "minibatch size");
        cmd->add_option("--scaling", scaling, "preprocessing scaling constant");
        cmd->add_option("--lr", lr, "learning rate (both networks)");
        cmd->add_option("--lr-d", lr_d, "discriminator learning rate override");
        cmd->add_option("--lr-g", lr_g, "generator learning rate override");
        cmd->add_option("--d-steps", d_steps, "discriminator updates per generator update");
        cmd->add_option("--max-batches", max_batches, "training budget in batches");
        cmd->add_option("--eval-every", eval_every, "batches between evaluations");
        cmd->add_option("--eval-paths", eval_paths, "paths generated per evaluation");
    }

    void apply(json& options) const {
        json& g = options["gan"];
        if (!g.is_object()) g = json::object();
        if (cmd->count("--hidden")) g["hidden"] = hidden;
        if (cmd->count("--seq-len")) g["seq_len"] = seq_len;
        if (cmd->count("--batch-size")) g["batch_size"] = batch_size;
        if (cmd->count("--scaling")) g["scaling"] = scaling;
        if (cmd->count("--lr")) g["lr"] = lr;
        if (cmd->count("--lr-d")) g["lr_d"] = lr_d;
        if (cmd->count("--lr-g")) g["lr_g"] = lr_g;
        if (cmd->count("--d-steps")) g["d_steps"] = d_steps;
        if (cmd->count("--max-batches")) g["max_batches"] = max_batches;
        if (cmd->count("--eval-every")) g["eval_every"] = eval_every;
        if (cmd->count("--eval-paths")) g["eval_paths"] = eval_paths;
        if (g.empty()) options.erase("gan");
    }
};

int dispatch(btlab_status (*fn)(const char*, char**), const json& options) {
    char* summary = nullptr;
    const btlab_status status = fn(options.dump().c_str(), &summary);
    if (status == BTLAB_OK) {
        if (summary) std::cout << summary << "\n";
    } else {
        std::cerr << "btlab: " << btlab_last_error() << "\n";
    }
    btlab_string_free(summary);
    return exit_code_of(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"btlab: backtesting laboratory over synthetic and GAN-generated price paths"};
    app.require_subcommand(1);
    int rc = 0;

    // simulate
    {
        auto* cmd = app.add_subcommand("simulate", "simulate paths from a stochastic process");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto proc = std::make_shared<ProcessFlags>(cmd);
        auto steps = std::make_shared<std::int64_t>(600);
        auto paths = std::make_shared<std::int64_t>(1);
        auto allow_ns = std::make_shared<bool>(false);
        cmd->add_option("--steps", *steps, "steps per path");
        cmd->add_option("--paths", *paths, "number of paths");
        cmd->add_flag("--allow-nonstationary", *allow_ns, "skip the AR(2) stationarity guard");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            proc->apply(options);
            if (cmd->count("--steps")) options["steps"] = *steps;
            if (cmd->count("--paths")) options["paths"] = *paths;
            if (*allow_ns) options["allow_nonstationary"] = true;
            rc = dispatch(btlab_cmd_simulate, options);
        });
    }

    // backtest
    {
        auto* cmd = app.add_subcommand("backtest", "backtest one strategy config on one path");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto paths_csv = std::make_shared<std::string>();
        auto strategy = std::make_shared<std::string>();
        auto index = std::make_shared<std::int64_t>(0);
        cmd->add_option("--paths-csv", *paths_csv, "input PathSet CSV");
        cmd->add_option("--strategy", *strategy,
                        R"(strategy config JSON, e.g. {"kind":"mac","p1":5,"p2":20})");
        cmd->add_option("--path-index", *index, "path to backtest");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            if (cmd->count("--paths-csv")) options["paths_csv"] = *paths_csv;
            if (cmd->count("--path-index")) options["path_index"] = *index;
            if (cmd->count("--strategy")) {
                try {
                    options["strategy"] = json::parse(*strategy);
                } catch (const std::exception& e) {
                    std::cerr << "btlab: bad --strategy JSON: " << e.what() << "\n";
                    rc = kExitUsage;
                    return;
                }
            }
            rc = dispatch(btlab_cmd_backtest, options);
        });
    }

    // grid
    {
        auto* cmd = app.add_subcommand("grid", "grid-search a strategy family over a path set");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto paths_csv = std::make_shared<std::string>();
        auto kind = std::make_shared<std::string>();
        cmd->add_option("--paths-csv", *paths_csv, "input PathSet CSV");
        cmd->add_option("--strategy-kind", *kind, "mac or bh");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            if (cmd->count("--paths-csv")) options["paths_csv"] = *paths_csv;
            if (cmd->count("--strategy-kind")) options["strategy_kind"] = *kind;
            rc = dispatch(btlab_cmd_grid, options);
        });
    }

    // heatmap
    {
        auto* cmd = app.add_subcommand("heatmap", "MAC Sharpe heatmap on one simulated path");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto proc = std::make_shared<ProcessFlags>(cmd);
        auto steps = std::make_shared<std::int64_t>(600);
        cmd->add_option("--steps", *steps, "steps for the simulated path");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            proc->apply(options);
            if (cmd->count("--steps")) options["steps"] = *steps;
            rc = dispatch(btlab_cmd_heatmap, options);
        });
    }

    // demo-overfit
    {
        auto* cmd = app.add_subcommand(
            "demo-overfit", "IS/OOS overfitting demonstration on a random walk");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto steps = std::make_shared<std::int64_t>(600);
        auto split = std::make_shared<std::int64_t>(300);
        auto eval_paths = std::make_shared<std::int64_t>(2000);
        auto sigma = std::make_shared<double>(1.0);
        auto kind = std::make_shared<std::string>("bh");
        cmd->add_option("--steps", *steps, "total steps");
        cmd->add_option("--split", *split, "in-sample steps");
        cmd->add_option("--eval-paths", *eval_paths, "fresh paths for the Sharpe distribution");
        cmd->add_option("--sigma", *sigma, "random-walk noise scale");
        cmd->add_option("--strategy-kind", *kind, "mac or bh");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            if (cmd->count("--steps")) options["steps"] = *steps;
            if (cmd->count("--split")) options["split"] = *split;
            if (cmd->count("--eval-paths")) options["eval_paths"] = *eval_paths;
            if (cmd->count("--sigma")) options["sigma"] = *sigma;
            if (cmd->count("--strategy-kind")) options["strategy_kind"] = *kind;
            rc = dispatch(btlab_cmd_demo_overfit, options);
        });
    }

    // gan train|sample|eval
    {
        auto* gan = app.add_subcommand("gan", "recurrent GAN training, sampling, evaluation");
        gan->require_subcommand(1);
        {
            auto* cmd = gan->add_subcommand("train", "train on a PathSet CSV");
            auto opts = std::make_shared<OptionBuilder>(cmd);
            auto flags = std::make_shared<GanFlags>(cmd);
            auto data_csv = std::make_shared<std::string>();
            auto ckpt = std::make_shared<std::string>();
            cmd->add_option("--data-csv", *data_csv, "training PathSet CSV");
            cmd->add_option("--checkpoint-dir", *ckpt, "checkpoint output directory");
            cmd->callback([=, &rc] {
                json options = opts->resolve();
                flags->apply(options);
                if (cmd->count("--data-csv")) options["data_csv"] = *data_csv;
                if (cmd->count("--checkpoint-dir")) options["checkpoint_dir"] = *ckpt;
                rc = dispatch(btlab_cmd_gan_train, options);
            });
        }
        {
            auto* cmd = gan->add_subcommand("sample", "generate paths from a checkpoint");
            auto opts = std::make_shared<OptionBuilder>(cmd);
            auto ckpt = std::make_shared<std::string>();
            auto paths = std::make_shared<std::int64_t>(1000);
            auto steps = std::make_shared<std::int64_t>(0);
            cmd->add_option("--checkpoint-dir", *ckpt, "checkpoint directory");
            cmd->add_option("--paths", *paths, "number of paths");
            cmd->add_option("--steps", *steps, "steps per path (default: trained seq_len)");
            cmd->callback([=, &rc] {
                json options = opts->resolve();
                if (cmd->count("--checkpoint-dir")) options["checkpoint_dir"] = *ckpt;
                if (cmd->count("--paths")) options["paths"] = *paths;
                if (cmd->count("--steps")) options["steps"] = *steps;
                rc = dispatch(btlab_cmd_gan_sample, options);
            });
        }
        {
            auto* cmd = gan->add_subcommand("eval", "moment R^2 and normality of generated data");
            auto opts = std::make_shared<OptionBuilder>(cmd);
            auto proc = std::make_shared<ProcessFlags>(cmd);
            auto paths_csv = std::make_shared<std::string>();
            auto alpha = std::make_shared<double>(0.01);
            cmd->add_option("--paths-csv", *paths_csv, "generated PathSet CSV");
            cmd->add_option("--alpha", *alpha, "normality test level");
            cmd->callback([=, &rc] {
                json options = opts->resolve();
                if (cmd->count("--paths-csv")) options["paths_csv"] = *paths_csv;
                if (cmd->count("--alpha")) options["alpha"] = *alpha;
                if (proc->cmd->count("--process")) proc->apply(options);
                rc = dispatch(btlab_cmd_gan_eval, options);
            });
        }
    }

    // pipeline
    {
        auto* cmd = app.add_subcommand(
            "pipeline", "train-on-synthetic / test-on-real verdict comparison runs");
        auto opts = std::make_shared<OptionBuilder>(cmd);
        auto proc = std::make_shared<ProcessFlags>(cmd);
        auto flags = std::make_shared<GanFlags>(cmd);
        auto kind = std::make_shared<std::string>("bh");
        auto runs = std::make_shared<std::int64_t>(10);
        auto n_train = std::make_shared<std::int64_t>(0);
        auto n_eval = std::make_shared<std::int64_t>(0);
        auto n_synth = std::make_shared<std::int64_t>(0);
        auto threshold = std::make_shared<double>(0.75);
        cmd->add_option("--strategy-kind", *kind, "mac or bh");
        cmd->add_option("--runs", *runs, "independent pipeline runs");
        cmd->add_option("--n-train", *n_train, "GAN training paths per run");
        cmd->add_option("--n-eval", *n_eval, "fresh true-process paths per run");
        cmd->add_option("--n-synth", *n_synth, "generated paths per run");
        cmd->add_option("--threshold", *threshold, "effectiveness threshold");
        cmd->callback([=, &rc] {
            json options = opts->resolve();
            proc->apply(options);
            flags->apply(options);
            if (cmd->count("--strategy-kind")) options["strategy_kind"] = *kind;
            if (cmd->count("--runs")) options["runs"] = *runs;
            if (cmd->count("--threshold")) options["threshold"] = *threshold;
            json& counts = options["counts"];
            if (!counts.is_object()) counts = json::object();
            if (cmd->count("--n-train")) counts["n_train"] = *n_train;
            if (cmd->count("--n-eval")) counts["n_eval"] = *n_eval;
            if (cmd->count("--n-synth")) counts["n_synth"] = *n_synth;
            if (counts.empty()) options.erase("counts");
            rc = dispatch(btlab_cmd_pipeline, options);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }
    return rc;
}
