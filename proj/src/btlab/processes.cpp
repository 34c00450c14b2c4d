#include "btlab/processes.hpp"

#include <cmath>
#include <complex>

#include "btlab/errors.hpp"
#include "btlab/parallel.hpp"

namespace btlab {

namespace {

constexpr int kAr2Burnin = 100;

void simulate_one(const ProcessSpec& spec, std::int64_t steps, std::uint64_t path_seed,
                  std::vector<double>& out) {
    Rng rng(path_seed);
    out.resize(static_cast<std::size_t>(steps) + 1);
    switch (spec.kind) {
        case ProcessKind::RandomWalk: {
            out[0] = spec.p0;
            for (std::int64_t t = 0; t < steps; ++t)
                out[t + 1] = out[t] + spec.sigma * rng.gaussian();
            break;
        }
        case ProcessKind::WhiteNoise: {
            for (auto& v : out) v = spec.sigma * rng.gaussian();
            break;
        }
        case ProcessKind::GBM: {
            // Exact scheme from the closed-form solution; W_t accumulates
            // unit-time Gaussian increments.
            const double drift = spec.mu - 0.5 * spec.sigma * spec.sigma;
            double w = 0.0;
            out[0] = spec.y0;
            for (std::int64_t t = 1; t <= steps; ++t) {
                w += rng.gaussian();
                out[t] = spec.y0 * std::exp(drift * static_cast<double>(t) + spec.sigma * w);
            }
            break;
        }
        case ProcessKind::AR2: {
            double prev2 = spec.p0;
            double prev1 = spec.p1_init;
            for (int t = 0; t < kAr2Burnin; ++t) {
                const double y = spec.a + spec.b * prev1 + spec.c * prev2 + spec.sigma * rng.gaussian();
                prev2 = prev1;
                prev1 = y;
            }
            out[0] = prev1;
            for (std::int64_t t = 0; t < steps; ++t) {
                const double y = spec.a + spec.b * prev1 + spec.c * prev2 + spec.sigma * rng.gaussian();
                prev2 = prev1;
                prev1 = y;
                out[t + 1] = y;
            }
            break;
        }
    }
}

}  // namespace

std::string process_kind_name(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::RandomWalk: return "random-walk";
        case ProcessKind::WhiteNoise: return "white-noise";
        case ProcessKind::GBM: return "gbm";
        case ProcessKind::AR2: return "ar2";
    }
    return "unknown";
}

ProcessKind process_kind_from_name(const std::string& name) {
    if (name == "random-walk" || name == "random_walk") return ProcessKind::RandomWalk;
    if (name == "white-noise" || name == "white_noise") return ProcessKind::WhiteNoise;
    if (name == "gbm") return ProcessKind::GBM;
    if (name == "ar2") return ProcessKind::AR2;
    throw ValidationError("unknown process kind: '" + name + "'");
}

ProcessSpec ProcessSpec::random_walk(double sigma, double p0) {
    ProcessSpec s;
    s.kind = ProcessKind::RandomWalk;
    s.sigma = sigma;
    s.p0 = p0;
    return s;
}

ProcessSpec ProcessSpec::white_noise(double sigma) {
    ProcessSpec s;
    s.kind = ProcessKind::WhiteNoise;
    s.sigma = sigma;
    return s;
}

ProcessSpec ProcessSpec::gbm(double mu, double sigma, double y0) {
    ProcessSpec s;
    s.kind = ProcessKind::GBM;
    s.mu = mu;
    s.sigma = sigma;
    s.y0 = y0;
    return s;
}

ProcessSpec ProcessSpec::ar2(double a, double b, double c, double sigma) {
    ProcessSpec s;
    s.kind = ProcessKind::AR2;
    s.a = a;
    s.b = b;
    s.c = c;
    s.sigma = sigma;
    return s;
}

void ProcessSpec::validate() const {
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw ValidationError("sigma must be finite and >= 0");
    if (sigma == 0.0 && kind != ProcessKind::GBM)
        throw ValidationError("sigma = 0 is only valid for GBM (deterministic oracle mode)");
    if (kind == ProcessKind::GBM) {
        if (!std::isfinite(mu)) throw ValidationError("GBM mu must be finite");
        if (!std::isfinite(y0) || y0 <= 0.0) throw ValidationError("GBM y0 must be > 0");
    }
    if (kind == ProcessKind::AR2) {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
            throw ValidationError("AR2 coefficients must be finite");
    }
}

void PathSet::validate() const {
    if (paths.empty()) throw ValidationError("PathSet must be non-empty");
    const std::size_t len = paths[0].values.size();
    if (len < 2) throw ValidationError("paths must have at least 2 values");
    for (const auto& p : paths) {
        if (p.values.size() != len)
            throw ValidationError("PathSet paths must all have equal length");
        for (double v : p.values)
            if (!std::isfinite(v)) throw ValidationError("path values must be finite");
    }
}

PathSet simulate(const ProcessSpec& spec, std::int64_t steps, std::int64_t n_paths,
                 std::uint64_t seed, const SimulateOptions& opts) {
    spec.validate();
    if (steps < 1) throw ValidationError("steps must be >= 1");
    if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
    if (spec.kind == ProcessKind::AR2 && opts.stationarity_guard && !ar2_is_stationary(spec)) {
        const auto [r1, r2] = ar2_char_roots(spec);
        throw ValidationError("AR2 spec is not stationary: characteristic root moduli " +
                              std::to_string(r1) + ", " + std::to_string(r2) +
                              " must both be < 1");
    }

    PathSet set;
    set.spec = spec;
    set.source = process_kind_name(spec.kind);
    set.seed = seed;
    set.paths.resize(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, opts.threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            auto& path = set.paths[static_cast<std::size_t>(i)];
            path.seed = substream_seed(seed, static_cast<std::uint64_t>(i));
            path.source = set.source;
            simulate_one(spec, steps, path.seed, path.values);
        }
    });
    return set;
}

std::pair<double, double> gbm_log_moments(const ProcessSpec& spec, double t) {
    if (spec.kind != ProcessKind::GBM)
        throw ValidationError("gbm_log_moments requires a GBM spec");
    if (t < 0.0) throw ValidationError("t must be >= 0");
    spec.validate();
    const double mean = (spec.mu - 0.5 * spec.sigma * spec.sigma) * t + std::log(spec.y0);
    const double var = spec.sigma * spec.sigma * t;
    return {mean, var};
}

std::pair<double, double> ar2_char_roots(const ProcessSpec& spec) {
    if (spec.kind != ProcessKind::AR2)
        throw ValidationError("ar2_char_roots requires an AR2 spec");
    // z^2 - b z - c = 0
    const std::complex<double> disc = std::sqrt(std::complex<double>(spec.b * spec.b + 4.0 * spec.c, 0.0));
    const std::complex<double> r1 = 0.5 * (std::complex<double>(spec.b, 0.0) + disc);
    const std::complex<double> r2 = 0.5 * (std::complex<double>(spec.b, 0.0) - disc);
    double m1 = std::abs(r1);
    double m2 = std::abs(r2);
    if (m1 < m2) std::swap(m1, m2);
    return {m1, m2};
}

bool ar2_is_stationary(const ProcessSpec& spec) {
    const auto [m1, m2] = ar2_char_roots(spec);
    return m1 < 1.0 && m2 < 1.0;
}

double ar2_stationary_variance(const ProcessSpec& spec) {
    if (!ar2_is_stationary(spec))
        throw ValidationError("ar2_stationary_variance requires a stationary AR2 spec");
    const double b = spec.b, c = spec.c, s2 = spec.sigma * spec.sigma;
    return s2 * (1.0 - c) / ((1.0 + c) * ((1.0 - c) * (1.0 - c) - b * b));
}

}  // namespace btlab
