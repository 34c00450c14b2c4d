#include "btlab/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "btlab/errors.hpp"
#include "btlab/parallel.hpp"

namespace btlab {

namespace {

// Sharpe from positions without materializing the pnl vector.
std::optional<double> sharpe_of_positions(std::span<const double> path,
                                          std::span<const std::int8_t> positions) {
    const std::size_t n = positions.size();
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = positions[t] * (path[t + 1] - path[t]);
        sum += x;
        sumsq += x * x;
    }
    if (n < 2) return std::nullopt;
    const double m = sum / static_cast<double>(n);
    const double ss = sumsq - static_cast<double>(n) * m * m;
    // ss ~ rounding noise of sumsq means the pnl is constant
    if (ss <= 1e-12 * sumsq) return std::nullopt;
    const double var = ss / static_cast<double>(n - 1);
    return m / std::sqrt(var);
}

}  // namespace

std::vector<double> pnl_series(std::span<const double> path, std::span<const std::int8_t> positions) {
    if (path.size() < 2 || positions.size() != path.size() - 1)
        throw ValidationError("pnl: positions length must be path length - 1");
    std::vector<double> out(positions.size());
    for (std::size_t t = 0; t < positions.size(); ++t)
        out[t] = positions[t] * (path[t + 1] - path[t]);
    return out;
}

std::optional<double> sharpe_ratio(std::span<const double> pnl, double r_f) {
    if (pnl.empty()) throw ValidationError("sharpe of empty pnl");
    if (pnl.size() < 2) return std::nullopt;
    double sum = 0.0;
    for (double x : pnl) sum += x;
    const double m = sum / static_cast<double>(pnl.size());
    double ss = 0.0, sumsq = 0.0;
    for (double x : pnl) {
        ss += (x - m) * (x - m);
        sumsq += x * x;
    }
    if (ss <= 1e-12 * sumsq) return std::nullopt;
    const double var = ss / static_cast<double>(pnl.size() - 1);
    return (m - r_f) / std::sqrt(var);
}

BacktestReport run_backtest(std::span<const double> path, const StrategyConfig& config, double r_f) {
    config.validate();
    std::vector<std::int8_t> pos(path.size() - 1);
    positions_into(path, config, pos);
    BacktestReport report;
    report.pnl = pnl_series(path, pos);
    report.equity.resize(report.pnl.size() + 1);
    report.equity[0] = 0.0;
    for (std::size_t k = 0; k < report.pnl.size(); ++k)
        report.equity[k + 1] = report.equity[k] + report.pnl[k];
    report.sharpe = sharpe_ratio(report.pnl, r_f);
    std::int8_t prev = 0;
    for (std::int8_t p : pos) {
        if (prev == 0 && p != 0) ++report.n_trades;
        prev = p;
    }
    return report;
}

BacktestReport run_backtest(const PricePath& path, const StrategyConfig& config, double r_f) {
    return run_backtest(std::span<const double>(path.values), config, r_f);
}

namespace {

// One worker's sweep state for select_best.
struct SweepAccum {
    std::vector<double> sum;        // per config, over defined paths
    std::vector<std::int64_t> cnt;  // per config
    std::vector<double> path_min;   // per path, min defined sharpe seen
};

// Computes the per-path Sharpe of config on every path, updating accum.
template <typename PositionFn>
void sweep_config(std::size_t cfg_idx, const PathSet& set, PositionFn&& make_positions,
                  SweepAccum& acc, std::vector<std::int8_t>& pos_buf) {
    for (std::size_t p = 0; p < set.paths.size(); ++p) {
        const auto& values = set.paths[p].values;
        make_positions(values, pos_buf);
        const auto s = sharpe_of_positions(values, pos_buf);
        if (s) {
            acc.sum[cfg_idx] += *s;
            acc.cnt[cfg_idx] += 1;
            acc.path_min[p] = std::min(acc.path_min[p], *s);
        }
    }
}

}  // namespace

GridResult select_best(const PathSet& set, const ParamGrid& grid, int threads) {
    set.validate();
    if (grid.configs.empty()) throw ValidationError("select_best: empty grid");
    const std::size_t n_cfg = grid.configs.size();
    const std::size_t n_paths = set.paths.size();
    const std::size_t len = set.length();
    const int n_workers = resolve_threads(threads);

    // Prefix sums per path: shared read-only input for MAC sweeps.
    std::vector<std::vector<double>> prefixes;
    if (grid.kind == StrategyKind::MAC) {
        prefixes.resize(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const auto& v = set.paths[p].values;
            prefixes[p].resize(v.size() + 1);
            prefixes[p][0] = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) prefixes[p][i + 1] = prefixes[p][i] + v[i];
        }
    }

    auto config_sharpes = [&](std::size_t c, std::vector<std::int8_t>& pos_buf,
                              auto&& per_path) {
        const auto& cfg = grid.configs[c];
        for (std::size_t p = 0; p < n_paths; ++p) {
            const auto& values = set.paths[p].values;
            if (grid.kind == StrategyKind::MAC)
                mac_positions_prefix(prefixes[p], cfg.p1, cfg.p2, pos_buf);
            else
                bh_positions_into(values, cfg.entry, cfg.hold, cfg.stop_loss, cfg.side, pos_buf);
            per_path(p, sharpe_of_positions(values, pos_buf));
        }
    };

    // Pass 1: per-config sums over defined paths and per-path minima.
    std::vector<double> sum(n_cfg, 0.0);
    std::vector<std::int64_t> cnt(n_cfg, 0);
    std::vector<std::vector<double>> worker_min(
        static_cast<std::size_t>(n_workers),
        std::vector<double>(n_paths, std::numeric_limits<double>::infinity()));
    {
        std::atomic<int> next_worker{0};
        parallel_for(static_cast<std::int64_t>(n_cfg), n_workers,
                     [&](std::int64_t lo, std::int64_t hi) {
                         const int w = next_worker.fetch_add(1);
                         auto& wmin = worker_min[static_cast<std::size_t>(w)];
                         std::vector<std::int8_t> pos_buf(len - 1);
                         for (std::int64_t c = lo; c < hi; ++c) {
                             config_sharpes(static_cast<std::size_t>(c), pos_buf,
                                            [&](std::size_t p, std::optional<double> s) {
                                                if (s) {
                                                    sum[static_cast<std::size_t>(c)] += *s;
                                                    cnt[static_cast<std::size_t>(c)] += 1;
                                                    wmin[p] = std::min(wmin[p], *s);
                                                }
                                            });
                         }
                     });
    }
    std::vector<double> path_min(n_paths, std::numeric_limits<double>::infinity());
    for (const auto& wmin : worker_min)
        for (std::size_t p = 0; p < n_paths; ++p) path_min[p] = std::min(path_min[p], wmin[p]);

    std::vector<std::size_t> usable;
    for (std::size_t p = 0; p < n_paths; ++p)
        if (std::isfinite(path_min[p])) usable.push_back(p);

    GridResult result;
    result.kind = grid.kind;
    result.scores.assign(n_cfg, std::nullopt);
    result.paths_used = static_cast<std::int64_t>(usable.size());
    if (usable.empty()) return result;  // no viable strategy

    // Pass 2: scores. Configs defined on every usable path need no second
    // sweep; mixed configs re-run to find which paths were undefined.
    std::vector<std::size_t> mixed;
    const double n_usable = static_cast<double>(usable.size());
    for (std::size_t c = 0; c < n_cfg; ++c) {
        if (cnt[c] == 0) continue;  // excluded
        if (cnt[c] == static_cast<std::int64_t>(usable.size())) {
            result.scores[c] = sum[c] / n_usable;
        } else {
            mixed.push_back(c);
        }
    }
    if (!mixed.empty()) {
        parallel_for(static_cast<std::int64_t>(mixed.size()), n_workers,
                     [&](std::int64_t lo, std::int64_t hi) {
                         std::vector<std::int8_t> pos_buf(len - 1);
                         for (std::int64_t k = lo; k < hi; ++k) {
                             const std::size_t c = mixed[static_cast<std::size_t>(k)];
                             double imputed = sum[c];
                             config_sharpes(c, pos_buf,
                                            [&](std::size_t p, std::optional<double> s) {
                                                if (!s && std::isfinite(path_min[p]))
                                                    imputed += path_min[p];
                                            });
                             result.scores[c] = imputed / n_usable;
                         }
                     });
    }

    for (std::size_t c = 0; c < n_cfg; ++c) {
        if (!result.scores[c]) continue;
        if (!result.viable || *result.scores[c] > result.best_score) {
            result.viable = true;
            result.best_index = c;
            result.best_score = *result.scores[c];
        }
    }
    if (result.viable) result.best_config = grid.configs[result.best_index];
    return result;
}

std::pair<PricePath, PricePath> split_is_oos(const PricePath& path, std::int64_t split_index) {
    const std::int64_t steps = static_cast<std::int64_t>(path.values.size()) - 1;
    if (split_index <= 1 || split_index > steps - 1)
        throw ValidationError("split_index must satisfy 1 < split_index <= steps - 1");
    PricePath is, oos;
    is.seed = path.seed;
    is.source = path.source;
    oos.seed = path.seed;
    oos.source = path.source;
    is.values.assign(path.values.begin(), path.values.begin() + split_index + 1);
    oos.values.assign(path.values.begin() + split_index, path.values.end());
    return {std::move(is), std::move(oos)};
}

HeatmapMatrix mac_heatmap(const PricePath& path, int threads) {
    if (path.values.size() <= static_cast<std::size_t>(kMacWindowMax))
        throw ValidationError("heatmap path must be longer than the largest MAC window");
    std::vector<double> prefix(path.values.size() + 1, 0.0);
    for (std::size_t i = 0; i < path.values.size(); ++i)
        prefix[i + 1] = prefix[i] + path.values[i];

    HeatmapMatrix m;
    m.sharpe.assign(kMacWindowMax * kMacWindowMax, std::numeric_limits<double>::quiet_NaN());
    parallel_for(kMacWindowMax, threads, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<std::int8_t> pos(path.values.size() - 1);
        for (std::int64_t r = lo; r < hi; ++r) {
            const int p1 = static_cast<int>(r) + 1;
            for (int p2 = 1; p2 <= kMacWindowMax; ++p2) {
                mac_positions_prefix(prefix, p1, p2, pos);
                const auto s = sharpe_of_positions(path.values, pos);
                if (s) m.sharpe[r * kMacWindowMax + (p2 - 1)] = *s;
            }
        }
    });
    return m;
}

double heatmap_smoothness(const HeatmapMatrix& m) {
    double total = 0.0;
    std::int64_t pairs = 0;
    auto cell = [&](int r, int c) { return m.sharpe[r * kMacWindowMax + c]; };
    for (int r = 0; r < kMacWindowMax; ++r) {
        for (int c = 0; c < kMacWindowMax; ++c) {
            const double v = cell(r, c);
            if (std::isnan(v)) continue;
            if (c + 1 < kMacWindowMax && !std::isnan(cell(r, c + 1))) {
                total += std::abs(v - cell(r, c + 1));
                ++pairs;
            }
            if (r + 1 < kMacWindowMax && !std::isnan(cell(r + 1, c))) {
                total += std::abs(v - cell(r + 1, c));
                ++pairs;
            }
        }
    }
    return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

double heatmap_top_decile_scatter(const HeatmapMatrix& m) {
    std::vector<double> defined;
    for (double v : m.sharpe)
        if (!std::isnan(v)) defined.push_back(v);
    if (defined.size() < 10) return 0.0;
    std::sort(defined.begin(), defined.end(), std::greater<>());
    const double cut = defined[defined.size() / 10];
    auto is_top = [&](int r, int c) {
        if (r < 0 || c < 0 || r >= kMacWindowMax || c >= kMacWindowMax) return false;
        const double v = m.sharpe[r * kMacWindowMax + c];
        return !std::isnan(v) && v >= cut;
    };
    std::int64_t top = 0, isolated = 0;
    for (int r = 0; r < kMacWindowMax; ++r)
        for (int c = 0; c < kMacWindowMax; ++c) {
            if (!is_top(r, c)) continue;
            ++top;
            if (!is_top(r - 1, c) && !is_top(r + 1, c) && !is_top(r, c - 1) &&
                !is_top(r, c + 1))
                ++isolated;
        }
    return top == 0 ? 0.0 : static_cast<double>(isolated) / static_cast<double>(top);
}

SharpeSample sharpe_distribution(const StrategyConfig& config, const PathSet& set, int threads) {
    set.validate();
    config.validate();
    const std::size_t n = set.paths.size();
    std::vector<std::optional<double>> per_path(n);
    parallel_for(static_cast<std::int64_t>(n), threads, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<std::int8_t> pos(set.length() - 1);
        for (std::int64_t p = lo; p < hi; ++p) {
            const auto& values = set.paths[static_cast<std::size_t>(p)].values;
            positions_into(values, config, pos);
            per_path[static_cast<std::size_t>(p)] = sharpe_of_positions(values, pos);
        }
    });
    SharpeSample sample;
    sample.values.reserve(n);
    for (const auto& s : per_path) {
        if (s)
            sample.values.push_back(*s);
        else
            ++sample.n_undefined;
    }
    return sample;
}

}  // namespace btlab
