#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace btlab::stats {

double mean(std::span<const double> xs);

// Sample variance / standard deviation, (n-1) divisor. Undefined for n < 2.
double sample_variance(std::span<const double> xs);
double sample_stdev(std::span<const double> xs);

double normal_cdf(double x, double mean = 0.0, double stdev = 1.0);

// R^2 of an empirical series against a fixed predictor (no refitting):
// 1 - SS_res / SS_tot with SS_tot about the empirical mean. nullopt when
// SS_tot = 0 (degenerate empirical series).
std::optional<double> r2_against(std::span<const double> empirical,
                                 std::span<const double> predicted);

// One-sample Kolmogorov-Smirnov statistic against N(mean, stdev^2).
double ks_statistic_normal(std::span<const double> sample, double mean, double stdev);

// Asymptotic KS p-value, Q_KS(lambda) with the standard small-sample
// correction lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) * d.
double ks_pvalue(double d, std::size_t n);

// Two-sample KS statistic (sup distance of the empirical CDFs).
double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b);

// Quantile of a sorted sample, linear interpolation.
double quantile_sorted(std::span<const double> sorted, double q);

// Freedman-Diaconis bin count over [min, max] of the pooled data; falls back
// to Sturges when the IQR degenerates. Clamped to [1, 512].
int fd_bin_count(std::span<const double> pooled_sorted);

struct Histogram {
    std::vector<double> edges;  // size bins + 1
    std::vector<double> mass;   // size bins, sums to 1 over the sample
};

Histogram histogram(std::span<const double> xs, const std::vector<double>& edges);
std::vector<double> linspace_edges(double lo, double hi, int bins);

}  // namespace btlab::stats
