#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>

#include "btlab/backtest.hpp"
#include "btlab/processes.hpp"
#include "btlab/rgan.hpp"
#include "btlab/strategies.hpp"

namespace btlab::io {

using nlohmann::json;

// Shortest round-trippable decimal for a 64-bit float; "NaN" marks undefined.
std::string fmt_double(double v);
double parse_double(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);

json process_spec_to_json(const ProcessSpec& spec);
ProcessSpec process_spec_from_json(const json& j);

json strategy_config_to_json(const StrategyConfig& config);
StrategyConfig strategy_config_from_json(const json& j);

json gan_config_to_json(const gan::GanConfig& config);
gan::GanConfig gan_config_from_json(const json& j);

json scaler_to_json(const gan::Scaler& scaler);
gan::Scaler scaler_from_json(const json& j);

json backtest_report_to_json(const BacktestReport& report);

// PathSet CSV: header path_id,t,value, one row per (path, time). The sidecar
// holds spec, seed and creation parameters; its path is the CSV path with the
// extension replaced by .meta.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
void save_pathset_csv(const PathSet& set, const std::filesystem::path& csv_path,
                      bool with_sidecar = true);
PathSet load_pathset_csv(const std::filesystem::path& csv_path);

// GridResult CSV: config_json,score (NaN for excluded configs).
void save_grid_csv(const GridResult& result, const ParamGrid& grid,
                   const std::filesystem::path& path);

// HeatmapMatrix CSV: p1,p2,sharpe.
void save_heatmap_csv(const HeatmapMatrix& m, const std::filesystem::path& path);

// TrainLog CSV: batches,d_loss,g_loss,r2_mean,r2_var.
void save_trainlog_csv(const gan::TrainLog& log, const std::filesystem::path& path);

// Checkpoint directory: manifest.json + params.bin (row-major little-endian
// 64-bit floats, named arrays). Round trips are bit-exact.
void write_checkpoint(const gan::GanModel& model, const std::filesystem::path& dir);
gan::GanModel read_checkpoint(const std::filesystem::path& dir);

}  // namespace btlab::io
