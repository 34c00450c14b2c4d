#pragma once

#include <json.hpp>
#include <string>

namespace btlab::cmd {

using nlohmann::json;

// Each command consumes a resolved options object, writes its artifacts and a
// <command>_manifest.json into options["out_dir"], and returns a summary.
// Options are schema-checked: unknown keys are rejected. The manifest carries
// the command name, the fully resolved options, tool version, master seed,
// SHA-256 digests of all inputs and outputs, and timestamps.

json cmd_simulate(const json& options);
json cmd_backtest(const json& options);
json cmd_grid(const json& options);
json cmd_heatmap(const json& options);
json cmd_demo_overfit(const json& options);
json cmd_gan_train(const json& options);
json cmd_gan_sample(const json& options);
json cmd_gan_eval(const json& options);
json cmd_pipeline(const json& options);

extern const char* kToolVersion;

}  // namespace btlab::cmd
