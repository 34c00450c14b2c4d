#include "btlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "btlab/errors.hpp"

namespace btlab::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ValidationError("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ValidationError("sample variance needs n >= 2");
    // identical samples have exactly zero variance; the summed mean may
    // round away from the common value and fabricate ~1e-30 noise otherwise
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double sample_stdev(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

double normal_cdf(double x, double mu, double stdev) {
    return 0.5 * std::erfc(-(x - mu) / (stdev * std::sqrt(2.0)));
}

std::optional<double> r2_against(std::span<const double> empirical,
                                 std::span<const double> predicted) {
    if (empirical.size() != predicted.size() || empirical.empty())
        throw ValidationError("r2_against requires equal-length non-empty series");
    const double m = mean(empirical);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        ss_res += (empirical[i] - predicted[i]) * (empirical[i] - predicted[i]);
        ss_tot += (empirical[i] - m) * (empirical[i] - m);
    }
    if (ss_tot == 0.0) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

double ks_statistic_normal(std::span<const double> sample, double mu, double stdev) {
    if (sample.empty()) throw ValidationError("KS test needs a non-empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = normal_cdf(xs[i], mu, stdev);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * lambda * lambda * k * k);
        sum += sign * term;
        if (term < 1e-14) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("two-sample KS needs non-empty samples");
    std::vector<double> xs(a.begin(), a.end()), ys(b.begin(), b.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xs.size() && j < ys.size()) {
        const double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= v) ++i;
        while (j < ys.size() && ys[j] <= v) ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(xs.size());
        const double fb = static_cast<double>(j) / static_cast<double>(ys.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

int fd_bin_count(std::span<const double> pooled_sorted) {
    const double n = static_cast<double>(pooled_sorted.size());
    const double lo = pooled_sorted.front(), hi = pooled_sorted.back();
    if (hi <= lo) return 1;
    const double iqr =
        quantile_sorted(pooled_sorted, 0.75) - quantile_sorted(pooled_sorted, 0.25);
    double width = 2.0 * iqr / std::cbrt(n);
    if (width <= 0.0) {
        const int sturges = static_cast<int>(std::ceil(std::log2(n) + 1.0));
        return std::clamp(sturges, 1, 512);
    }
    const int bins = static_cast<int>(std::ceil((hi - lo) / width));
    return std::clamp(bins, 1, 512);
}

Histogram histogram(std::span<const double> xs, const std::vector<double>& edges) {
    if (edges.size() < 2) throw ValidationError("histogram needs at least one bin");
    Histogram h;
    h.edges = edges;
    h.mass.assign(edges.size() - 1, 0.0);
    if (xs.empty()) return h;
    const double w = 1.0 / static_cast<double>(xs.size());
    for (double x : xs) {
        // values on the last edge fall into the last bin
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::size_t idx;
        if (it == edges.begin())
            idx = 0;
        else if (it == edges.end())
            idx = edges.size() - 2;
        else
            idx = static_cast<std::size_t>(it - edges.begin()) - 1;
        h.mass[idx] += w;
    }
    return h;
}

std::vector<double> linspace_edges(double lo, double hi, int bins) {
    if (bins < 1) throw ValidationError("bins must be >= 1");
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        edges[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    return edges;
}

}  // namespace btlab::stats
