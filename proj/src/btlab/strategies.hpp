#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "btlab/processes.hpp"

namespace btlab {

enum class StrategyKind { MAC, BH };

std::string strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

// A point in a strategy family's parameter grid.
//   MAC: p1, p2 in 1..50 (moving-average windows)
//   BH:  entry in 1..30 (day of the 30-day month), hold in 1..30,
//        stop_loss in 0..20 (absolute price units, 0 = disabled), side in {-1,+1}
struct StrategyConfig {
    StrategyKind kind = StrategyKind::MAC;
    int p1 = 1;
    int p2 = 1;
    int entry = 1;
    int hold = 1;
    int stop_loss = 0;
    int side = 1;

    static StrategyConfig mac(int p1, int p2);
    static StrategyConfig bh(int entry, int hold, int stop_loss, int side);
    void validate() const;
    bool operator==(const StrategyConfig&) const = default;
};

// {-1,0,+1} position per price transition; length = path length - 1.
struct PositionSeries {
    std::vector<std::int8_t> positions;
};

struct ParamGrid {
    StrategyKind kind;
    std::vector<StrategyConfig> configs;

    std::size_t size() const { return configs.size(); }
};

inline constexpr int kMacWindowMax = 50;
inline constexpr int kBhEntryMax = 30;
inline constexpr int kBhHoldMax = 30;
inline constexpr int kBhStopMax = 20;
inline constexpr int kMonthDays = 30;

// Crossover positions: +1 where MA_{p1} > MA_{p2}, -1 where smaller, 0 on a
// tie or before max(p1, p2) prices exist. MA_p(t) averages the p prices ending
// at t, so positions never look ahead.
void mac_positions_into(std::span<const double> path, int p1, int p2,
                        std::span<std::int8_t> out);
PositionSeries mac_positions(const PricePath& path, int p1, int p2);

// Same computation from a precomputed prefix-sum array (prefix[i] = sum of the
// first i prices); used by grid sweeps.
void mac_positions_prefix(std::span<const double> prefix, int p1, int p2,
                          std::span<std::int8_t> out);

// Buy-and-hold over fixed 30-day months: hold `side` from day `entry` for
// `hold` transitions, truncated at month end; a stop-loss exit zeroes the rest
// of the trade and the strategy does not re-enter within the month.
void bh_positions_into(std::span<const double> path, int entry, int hold, int stop_loss,
                       int side, std::span<std::int8_t> out);
PositionSeries bh_positions(const PricePath& path, int entry, int hold, int stop_loss, int side);

void positions_into(std::span<const double> path, const StrategyConfig& config,
                    std::span<std::int8_t> out);
PositionSeries positions(const PricePath& path, const StrategyConfig& config);

// All configs of a family in lexicographic order:
// MAC by (p1, p2) -> 2,500 entries; BH by (entry, hold, stop_loss, side) -> 37,800.
ParamGrid enumerate_grid(StrategyKind kind);

}  // namespace btlab
