// End-to-end checks of the installed CLI binary (path via BTLAB_CLI).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "btlab/sha256.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* env = std::getenv("BTLAB_CLI");
    REQUIRE_MESSAGE(env != nullptr, "BTLAB_CLI must point at the btlab binary");
    return env;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("btlab_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("help exits cleanly; bad usage exits 2") {
    CHECK(run("--help") == 0);
    CHECK(run("simulate --help") == 0);
    CHECK(run("definitely-not-a-command") == 2);
    CHECK(run("simulate --no-such-flag") == 2);
}

TEST_CASE("validation failures exit 3") {
    const auto dir = temp_dir("val");
    CHECK(run("simulate --process ar2 --b 2 --c -1 -o " + dir.string()) == 3);
    CHECK(run("simulate --process gbm --y0 -3 -o " + dir.string()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("pipeline with zero runs is a usage error") {
    const auto dir = temp_dir("runs0");
    CHECK(run("pipeline --runs 0 --process gbm -o " + dir.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("simulate reruns are byte-identical across worker counts") {
    const auto a = temp_dir("det_a");
    const auto b = temp_dir("det_b");
    REQUIRE(run("simulate --process gbm --steps 40 --paths 8 --seed 12 --threads 1 -o " +
                a.string()) == 0);
    REQUIRE(run("simulate --process gbm --steps 40 --paths 8 --seed 12 --threads 4 -o " +
                b.string()) == 0);
    CHECK(btlab::sha256_file_hex(a / "paths.csv") == btlab::sha256_file_hex(b / "paths.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("config file values are overridden by flags") {
    const auto dir = temp_dir("cfg");
    const auto cfg = dir / "run.json";
    {
        std::ofstream out(cfg);
        out << R"({"process":{"kind":"gbm"},"steps":25,"paths":2})";
    }
    REQUIRE(run("simulate --config " + cfg.string() + " --paths 3 -o " + dir.string()) == 0);
    // manifest echoes the resolved options, with the flag winning
    std::ifstream in(dir / "simulate_manifest.json");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("\"paths\": 3") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("grid command over a simulated set") {
    const auto dir = temp_dir("grid");
    REQUIRE(run("simulate --process random-walk --steps 80 --paths 2 --seed 5 -o " +
                dir.string()) == 0);
    REQUIRE(run("grid --paths-csv " + (dir / "paths.csv").string() +
                " --strategy-kind mac --threads 2 -o " + dir.string()) == 0);
    CHECK(fs::exists(dir / "grid_best.json"));
    fs::remove_all(dir);
}

TEST_SUITE_END();
