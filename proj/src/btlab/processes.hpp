#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btlab/rng.hpp"

namespace btlab {

enum class ProcessKind { RandomWalk, WhiteNoise, GBM, AR2 };

std::string process_kind_name(ProcessKind kind);
ProcessKind process_kind_from_name(const std::string& name);

// Parametric description of a price-generating process.
//
//   RandomWalk:  p_{t+1} = p_t + sigma * eps_t,            p_0 = p0
//   WhiteNoise:  p_t     = sigma * eps_t
//   GBM:         y_t     = y0 * exp((mu - sigma^2/2) t + sigma W_t)   (exact)
//   AR2:         y_t     = a + b y_{t-1} + c y_{t-2} + sigma * eps_t
//
// eps_t are iid standard normal. AR2 paths warm-start from (p0, p1_init) and
// discard a 100-step burn-in before emitting.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::RandomWalk;
    double sigma = 1.0;
    double mu = 0.02;      // GBM drift per step
    double y0 = 1.0;       // GBM initial level
    double a = 0.0;        // AR2 intercept
    double b = 0.0;        // AR2 lag-1 coefficient
    double c = 0.0;        // AR2 lag-2 coefficient
    double p0 = 0.0;       // RandomWalk / AR2 first initial value
    double p1_init = 0.0;  // AR2 second initial value

    static ProcessSpec random_walk(double sigma = 1.0, double p0 = 0.0);
    static ProcessSpec white_noise(double sigma = 1.0);
    static ProcessSpec gbm(double mu = 0.02, double sigma = 0.1, double y0 = 1.0);
    static ProcessSpec ar2(double a = 0.0, double b = 1.1, double c = -0.5, double sigma = 1.0);

    // Throws ValidationError on out-of-domain parameters. sigma = 0 is
    // accepted for GBM only (the deterministic sigma -> 0 limit used as an
    // oracle); every other kind requires sigma > 0.
    void validate() const;
};

// One simulated or generated price series. values[0] is the initial level,
// so a T-step path holds T+1 values.
struct PricePath {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string source;

    std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
};

struct PathSet {
    std::vector<PricePath> paths;
    std::optional<ProcessSpec> spec;  // absent for GAN output
    std::string source;               // process kind name or "gan"
    std::uint64_t seed = 0;           // master seed of the producing run

    std::size_t size() const { return paths.size(); }
    std::size_t length() const { return paths.empty() ? 0 : paths[0].values.size(); }
    void validate() const;  // non-empty, homogeneous length >= 2, finite values
};

struct SimulateOptions {
    bool stationarity_guard = true;  // reject non-stationary AR2 specs
    int threads = 0;                 // 0 = hardware concurrency
};

// N paths of T steps each. Path i draws from substream_seed(seed, i), so the
// result is independent of how paths are scheduled across workers.
PathSet simulate(const ProcessSpec& spec, std::int64_t steps, std::int64_t n_paths,
                 std::uint64_t seed, const SimulateOptions& opts = {});

// Mean and variance of ln y_t under GBM: ((mu - sigma^2/2) t + ln y0, sigma^2 t).
std::pair<double, double> gbm_log_moments(const ProcessSpec& spec, double t);

// Moduli of the roots of z^2 - b z - c = 0, descending.
std::pair<double, double> ar2_char_roots(const ProcessSpec& spec);

bool ar2_is_stationary(const ProcessSpec& spec);

// Yule-Walker gamma_0 = sigma^2 (1 - c) / ((1 + c)((1 - c)^2 - b^2)).
double ar2_stationary_variance(const ProcessSpec& spec);

}  // namespace btlab
