#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "btlab/processes.hpp"
#include "btlab/strategies.hpp"

namespace btlab {

// P&L accounting for one (path, positions) pair. equity[k] = sum of pnl[0..k).
struct BacktestReport {
    std::vector<double> pnl;
    std::vector<double> equity;
    std::optional<double> sharpe;
    std::int64_t n_trades = 0;  // 0 -> nonzero position changes
};

// pnl[t] = positions[t] * (path[t+1] - path[t]).
std::vector<double> pnl_series(std::span<const double> path, std::span<const std::int8_t> positions);

// (mean - r_f) / sample stdev; nullopt when the stdev is zero (or n < 2).
std::optional<double> sharpe_ratio(std::span<const double> pnl, double r_f = 0.0);

BacktestReport run_backtest(const PricePath& path, const StrategyConfig& config, double r_f = 0.0);
BacktestReport run_backtest(std::span<const double> path, const StrategyConfig& config, double r_f = 0.0);

// Grid search over a path ensemble (the multi-path backtest objective).
// score(config) = mean of per-path Sharpe over the usable paths; an undefined
// (config, path) Sharpe contributes that path's minimum defined Sharpe across
// the grid. Paths where every config is undefined are dropped; configs
// undefined on every path are excluded (nullopt score). best = argmax with
// ties broken by grid order. No usable path at all -> viable = false.
struct GridResult {
    StrategyKind kind;
    std::vector<std::optional<double>> scores;  // aligned with enumerate_grid order
    bool viable = false;
    std::size_t best_index = 0;
    StrategyConfig best_config;
    double best_score = 0.0;
    std::int64_t paths_used = 0;
};

GridResult select_best(const PathSet& set, const ParamGrid& grid, int threads = 0);

// IS/OOS split: prefix of split_index steps and the remainder, sharing the
// boundary price. Requires 1 < split_index <= steps - 1 so both segments hold
// at least two values.
std::pair<PricePath, PricePath> split_is_oos(const PricePath& path, std::int64_t split_index);

// Sharpe of every (p1, p2) in the MAC grid on one path; NaN marks undefined.
struct HeatmapMatrix {
    std::vector<double> sharpe;  // kMacWindowMax x kMacWindowMax, row-major by (p1-1, p2-1)
    double at(int p1, int p2) const { return sharpe[(p1 - 1) * kMacWindowMax + (p2 - 1)]; }
};

HeatmapMatrix mac_heatmap(const PricePath& path, int threads = 0);

// Mean |difference| between horizontally/vertically adjacent defined cells.
double heatmap_smoothness(const HeatmapMatrix& m);

// Fraction of top-decile Sharpe cells with no top-decile 4-neighbor. A
// contiguous high-performance ridge scores near 0; scattered noise peaks
// score higher.
double heatmap_top_decile_scatter(const HeatmapMatrix& m);

// Per-path Sharpe of one config over a path set; undefined entries are
// counted, not silently dropped.
struct SharpeSample {
    std::vector<double> values;
    std::int64_t n_undefined = 0;
    std::int64_t total() const { return static_cast<std::int64_t>(values.size()) + n_undefined; }
};

SharpeSample sharpe_distribution(const StrategyConfig& config, const PathSet& set, int threads = 0);

}  // namespace btlab
