#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "btlab/commands.hpp"
#include "btlab/errors.hpp"
#include "btlab/io.hpp"
#include "btlab/sha256.hpp"

using namespace btlab;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("btlab_cmd_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Output digests from a run's manifest, keyed by relative path.
json output_digests(const fs::path& manifest_path) {
    const json manifest = io::read_json_file(manifest_path);
    json digests = json::object();
    for (const auto& entry : manifest.at("outputs"))
        digests[entry.at("path").get<std::string>()] = entry.at("sha256");
    return digests;
}

}  // namespace

TEST_SUITE_BEGIN("commands");

TEST_CASE("cmd_simulate writes csv, sidecar and manifest; reruns digest-identical") {
    const auto dir_a = temp_dir("sim_a");
    const auto dir_b = temp_dir("sim_b");
    json options{{"out_dir", dir_a.string()},
                 {"seed", 9},
                 {"process", {{"kind", "gbm"}}},
                 {"steps", 12},
                 {"paths", 5}};
    const json summary = cmd::cmd_simulate(options);
    CHECK(fs::exists(dir_a / "paths.csv"));
    CHECK(fs::exists(dir_a / "paths.meta.json"));
    CHECK(fs::exists(dir_a / "simulate_manifest.json"));
    CHECK(summary.at("n_paths") == 5);

    options["out_dir"] = dir_b.string();
    cmd::cmd_simulate(options);
    CHECK(output_digests(dir_a / "simulate_manifest.json") ==
          output_digests(dir_b / "simulate_manifest.json"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("cmd_simulate is worker-count independent") {
    const auto dir_a = temp_dir("sim_t1");
    const auto dir_b = temp_dir("sim_t4");
    json options{{"out_dir", dir_a.string()},
                 {"seed", 4},
                 {"threads", 1},
                 {"process", {{"kind", "random-walk"}}},
                 {"steps", 50},
                 {"paths", 16}};
    cmd::cmd_simulate(options);
    options["out_dir"] = dir_b.string();
    options["threads"] = 4;
    cmd::cmd_simulate(options);
    CHECK(sha256_file_hex(dir_a / "paths.csv") == sha256_file_hex(dir_b / "paths.csv"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("unknown options are usage errors") {
    const auto dir = temp_dir("badopt");
    json options{{"out_dir", dir.string()}, {"procss", json::object()}};
    CHECK_THROWS_AS(cmd::cmd_simulate(options), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("cmd_backtest and cmd_grid consume simulate output") {
    const auto dir = temp_dir("chain");
    cmd::cmd_simulate(json{{"out_dir", dir.string()},
                           {"seed", 21},
                           {"process", {{"kind", "random-walk"}}},
                           {"steps", 90},
                           {"paths", 3}});
    const auto csv = (dir / "paths.csv").string();

    const json bt = cmd::cmd_backtest(json{{"out_dir", dir.string()},
                                           {"paths_csv", csv},
                                           {"path_index", 1},
                                           {"strategy",
                                            {{"kind", "mac"}, {"p1", 3}, {"p2", 11}}}});
    CHECK(fs::exists(dir / "backtest.json"));
    const json report = io::read_json_file(dir / "backtest.json");
    CHECK(report.contains("pnl"));
    CHECK(report.at("equity").size() == report.at("pnl").size() + 1);

    const json grid = cmd::cmd_grid(json{{"out_dir", dir.string()},
                                         {"paths_csv", csv},
                                         {"strategy_kind", "mac"},
                                         {"threads", 2}});
    CHECK(fs::exists(dir / "grid_scores.csv"));
    CHECK(fs::exists(dir / "grid_best.json"));
    const json best = io::read_json_file(dir / "grid_best.json");
    CHECK(best.at("viable") == true);
    // scores CSV has header + one row per config
    std::ifstream in(dir / "grid_scores.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2501);
    fs::remove_all(dir);
}

TEST_CASE("cmd_backtest validates its inputs") {
    const auto dir = temp_dir("btval");
    CHECK_THROWS_AS(cmd::cmd_backtest(json{{"out_dir", dir.string()}}), std::invalid_argument);
    cmd::cmd_simulate(json{{"out_dir", dir.string()},
                           {"process", {{"kind", "gbm"}}},
                           {"steps", 10},
                           {"paths", 1}});
    CHECK_THROWS_AS(
        cmd::cmd_backtest(json{{"out_dir", dir.string()},
                               {"paths_csv", (dir / "paths.csv").string()},
                               {"path_index", 5},
                               {"strategy", {{"kind", "mac"}, {"p1", 1}, {"p2", 2}}}}),
        ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("cmd_heatmap restricts the process and reports smoothness") {
    const auto dir = temp_dir("heat");
    CHECK_THROWS_AS(cmd::cmd_heatmap(json{{"out_dir", dir.string()},
                                          {"process", {{"kind", "gbm"}}},
                                          {"steps", 80}}),
                    ValidationError);
    const json summary = cmd::cmd_heatmap(json{{"out_dir", dir.string()},
                                               {"process", {{"kind", "white-noise"}}},
                                               {"steps", 80},
                                               {"seed", 2},
                                               {"threads", 2}});
    CHECK(summary.contains("smoothness"));
    CHECK(fs::exists(dir / "heatmap_white-noise.csv"));
    fs::remove_all(dir);
}

TEST_CASE("white-noise heatmaps have a tighter top region than random-walk ones") {
    const auto dir = temp_dir("heatcmp");
    const json wn = cmd::cmd_heatmap(json{{"out_dir", dir.string()},
                                          {"process", {{"kind", "white-noise"}}},
                                          {"steps", 600},
                                          {"seed", 1},
                                          {"threads", 2}});
    const json rw = cmd::cmd_heatmap(json{{"out_dir", dir.string()},
                                          {"process", {{"kind", "random-walk"}}},
                                          {"steps", 600},
                                          {"seed", 1},
                                          {"threads", 2}});
    CHECK(wn.at("top_decile_scatter").get<double>() <
          rw.at("top_decile_scatter").get<double>());
    fs::remove_all(dir);
}

TEST_CASE("cmd_demo_overfit emits figure data and a report") {
    const auto dir = temp_dir("demo");
    const json summary = cmd::cmd_demo_overfit(json{{"out_dir", dir.string()},
                                                    {"seed", 31},
                                                    {"steps", 120},
                                                    {"split", 60},
                                                    {"eval_paths", 200},
                                                    {"threads", 2}});
    CHECK(fs::exists(dir / "demo_equity.csv"));
    CHECK(fs::exists(dir / "demo_sharpe_dist.csv"));
    CHECK(fs::exists(dir / "demo_report.json"));
    const json report = io::read_json_file(dir / "demo_report.json");
    CHECK(report.at("is_sharpe").get<double>() > 0.0);  // overfit to in-sample noise
    CHECK(report.contains("eval_mean_sharpe"));
    CHECK(summary.at("is_sharpe") == report.at("is_sharpe"));
    fs::remove_all(dir);
}

TEST_CASE("cmd_pipeline rejects zero runs as usage") {
    const auto dir = temp_dir("pipe0");
    CHECK_THROWS_AS(cmd::cmd_pipeline(json{{"out_dir", dir.string()},
                                           {"runs", 0},
                                           {"process", {{"kind", "gbm"}}}}),
                    std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("gan train, sample and eval commands chain together") {
    const auto dir = temp_dir("ganchain");
    cmd::cmd_simulate(json{{"out_dir", dir.string()},
                           {"seed", 8},
                           {"process", {{"kind", "gbm"}}},
                           {"steps", 8},
                           {"paths", 40}});
    const json train = cmd::cmd_gan_train(
        json{{"out_dir", dir.string()},
             {"seed", 15},
             {"data_csv", (dir / "paths.csv").string()},
             {"gan",
              {{"hidden", 4}, {"batch_size", 8}, {"max_batches", 25}, {"eval_every", 10},
               {"eval_paths", 110}}}});
    CHECK(train.at("trained_batches") == 25);
    CHECK(fs::exists(dir / "gan_checkpoint" / "manifest.json"));
    CHECK(fs::exists(dir / "gan_trainlog.csv"));

    const json sample = cmd::cmd_gan_sample(
        json{{"out_dir", dir.string()},
             {"checkpoint_dir", (dir / "gan_checkpoint").string()},
             {"paths", 150},
             {"seed", 77}});
    CHECK(sample.at("n_paths") == 150);
    CHECK(fs::exists(dir / "gan_paths.csv"));

    // rerun sampling into a second directory: digests must match
    const auto dir2 = temp_dir("ganchain2");
    const json sample2 = cmd::cmd_gan_sample(
        json{{"out_dir", dir2.string()},
             {"checkpoint_dir", (dir / "gan_checkpoint").string()},
             {"paths", 150},
             {"seed", 77}});
    CHECK(sha256_file_hex(dir / "gan_paths.csv") == sha256_file_hex(dir2 / "gan_paths.csv"));

    const json eval_summary = cmd::cmd_gan_eval(
        json{{"out_dir", dir.string()},
             {"paths_csv", (dir / "gan_paths.csv").string()},
             {"process", {{"kind", "gbm"}}},
             {"min_paths", 100}});
    CHECK(fs::exists(dir / "gan_eval.json"));
    const json report = io::read_json_file(dir / "gan_eval.json");
    CHECK(report.contains("moment_fit"));
    CHECK(report.contains("normality"));
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_SUITE_END();
