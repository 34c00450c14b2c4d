#include "btlab/strategies.hpp"

#include <algorithm>

#include "btlab/errors.hpp"

namespace btlab {

std::string strategy_kind_name(StrategyKind kind) {
    return kind == StrategyKind::MAC ? "mac" : "bh";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "mac") return StrategyKind::MAC;
    if (name == "bh") return StrategyKind::BH;
    throw ValidationError("unknown strategy kind: '" + name + "'");
}

StrategyConfig StrategyConfig::mac(int p1, int p2) {
    StrategyConfig c;
    c.kind = StrategyKind::MAC;
    c.p1 = p1;
    c.p2 = p2;
    c.validate();
    return c;
}

StrategyConfig StrategyConfig::bh(int entry, int hold, int stop_loss, int side) {
    StrategyConfig c;
    c.kind = StrategyKind::BH;
    c.entry = entry;
    c.hold = hold;
    c.stop_loss = stop_loss;
    c.side = side;
    c.validate();
    return c;
}

void StrategyConfig::validate() const {
    if (kind == StrategyKind::MAC) {
        if (p1 < 1 || p1 > kMacWindowMax || p2 < 1 || p2 > kMacWindowMax)
            throw ValidationError("MAC windows must lie in 1.." + std::to_string(kMacWindowMax));
    } else {
        if (entry < 1 || entry > kBhEntryMax)
            throw ValidationError("BH entry must lie in 1.." + std::to_string(kBhEntryMax));
        if (hold < 1 || hold > kBhHoldMax)
            throw ValidationError("BH hold must lie in 1.." + std::to_string(kBhHoldMax));
        if (stop_loss < 0 || stop_loss > kBhStopMax)
            throw ValidationError("BH stop_loss must lie in 0.." + std::to_string(kBhStopMax));
        if (side != -1 && side != 1) throw ValidationError("BH side must be -1 or +1");
    }
}

void mac_positions_prefix(std::span<const double> prefix, int p1, int p2,
                          std::span<std::int8_t> out) {
    const int warmup = std::max(p1, p2);
    const double inv1 = 1.0 / p1;
    const double inv2 = 1.0 / p2;
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (static_cast<int>(t) + 1 < warmup) {
            out[t] = 0;
            continue;
        }
        const double ma1 = (prefix[t + 1] - prefix[t + 1 - p1]) * inv1;
        const double ma2 = (prefix[t + 1] - prefix[t + 1 - p2]) * inv2;
        out[t] = ma1 > ma2 ? std::int8_t{1} : (ma1 < ma2 ? std::int8_t{-1} : std::int8_t{0});
    }
}

void mac_positions_into(std::span<const double> path, int p1, int p2,
                        std::span<std::int8_t> out) {
    if (p1 < 1 || p1 > kMacWindowMax || p2 < 1 || p2 > kMacWindowMax)
        throw ValidationError("MAC windows must lie in 1.." + std::to_string(kMacWindowMax));
    if (path.size() < 2) throw ValidationError("path must have at least 2 values");
    if (out.size() != path.size() - 1) throw ValidationError("positions length must be path length - 1");
    std::vector<double> prefix(path.size() + 1, 0.0);
    for (std::size_t i = 0; i < path.size(); ++i) prefix[i + 1] = prefix[i] + path[i];
    mac_positions_prefix(prefix, p1, p2, out);
}

PositionSeries mac_positions(const PricePath& path, int p1, int p2) {
    PositionSeries ps;
    ps.positions.resize(path.values.size() - 1);
    mac_positions_into(path.values, p1, p2, ps.positions);
    return ps;
}

void bh_positions_into(std::span<const double> path, int entry, int hold, int stop_loss,
                       int side, std::span<std::int8_t> out) {
    StrategyConfig::bh(entry, hold, stop_loss, side);  // range check
    if (path.size() < 2) throw ValidationError("path must have at least 2 values");
    const std::int64_t n_trans = static_cast<std::int64_t>(path.size()) - 1;
    if (static_cast<std::int64_t>(out.size()) != n_trans)
        throw ValidationError("positions length must be path length - 1");
    std::fill(out.begin(), out.end(), std::int8_t{0});
    for (std::int64_t month_start = 0; month_start < n_trans; month_start += kMonthDays) {
        const std::int64_t t_entry = month_start + entry - 1;
        if (t_entry >= n_trans) continue;
        const std::int64_t month_end = std::min(month_start + kMonthDays, n_trans);
        const std::int64_t t_stop = std::min(t_entry + hold, month_end);
        const double p_entry = path[static_cast<std::size_t>(t_entry)];
        for (std::int64_t t = t_entry; t < t_stop; ++t) {
            if (stop_loss > 0 &&
                side * (path[static_cast<std::size_t>(t)] - p_entry) <= -static_cast<double>(stop_loss)) {
                break;  // exit; no re-entry this month
            }
            out[static_cast<std::size_t>(t)] = static_cast<std::int8_t>(side);
        }
    }
}

PositionSeries bh_positions(const PricePath& path, int entry, int hold, int stop_loss, int side) {
    PositionSeries ps;
    ps.positions.resize(path.values.size() - 1);
    bh_positions_into(path.values, entry, hold, stop_loss, side, ps.positions);
    return ps;
}

void positions_into(std::span<const double> path, const StrategyConfig& config,
                    std::span<std::int8_t> out) {
    if (config.kind == StrategyKind::MAC)
        mac_positions_into(path, config.p1, config.p2, out);
    else
        bh_positions_into(path, config.entry, config.hold, config.stop_loss, config.side, out);
}

PositionSeries positions(const PricePath& path, const StrategyConfig& config) {
    PositionSeries ps;
    ps.positions.resize(path.values.size() - 1);
    positions_into(path.values, config, ps.positions);
    return ps;
}

ParamGrid enumerate_grid(StrategyKind kind) {
    ParamGrid grid;
    grid.kind = kind;
    if (kind == StrategyKind::MAC) {
        grid.configs.reserve(kMacWindowMax * kMacWindowMax);
        for (int p1 = 1; p1 <= kMacWindowMax; ++p1)
            for (int p2 = 1; p2 <= kMacWindowMax; ++p2)
                grid.configs.push_back(StrategyConfig::mac(p1, p2));
    } else {
        grid.configs.reserve(kBhEntryMax * kBhHoldMax * (kBhStopMax + 1) * 2);
        for (int entry = 1; entry <= kBhEntryMax; ++entry)
            for (int hold = 1; hold <= kBhHoldMax; ++hold)
                for (int stop = 0; stop <= kBhStopMax; ++stop)
                    for (int side : {-1, 1})
                        grid.configs.push_back(StrategyConfig::bh(entry, hold, stop, side));
    }
    return grid;
}

}  // namespace btlab
