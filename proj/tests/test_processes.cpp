#include <doctest.h>

#include <cmath>
#include <vector>

#include "btlab/errors.hpp"
#include "btlab/processes.hpp"
#include "btlab/stats.hpp"

using namespace btlab;

TEST_SUITE_BEGIN("processes");

TEST_CASE("GBM sigma->0 limit is the deterministic exponential") {
    auto spec = ProcessSpec::gbm(0.1, 0.0, 1.0);
    const PathSet set = simulate(spec, 10, 1, 99);
    REQUIRE(set.paths[0].values.size() == 11);
    for (int t = 0; t <= 10; ++t)
        CHECK(set.paths[0].values[t] == doctest::Approx(std::exp(0.1 * t)).epsilon(1e-12));
}

TEST_CASE("same seed gives bit-identical path sets") {
    auto spec = ProcessSpec::gbm();
    const PathSet a = simulate(spec, 50, 20, 7);
    const PathSet b = simulate(spec, 50, 20, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.paths[i].values == b.paths[i].values);
}

TEST_CASE("worker count does not change results") {
    auto spec = ProcessSpec::random_walk();
    SimulateOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const PathSet a = simulate(spec, 100, 33, 11, one);
    const PathSet b = simulate(spec, 100, 33, 11, four);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.paths[i].values == b.paths[i].values);
}

TEST_CASE("random walk terminal mean matches the CLT bound") {
    // var(p_T) = T sigma^2, so the N-path mean of p_300 concentrates near 0
    const PathSet set = simulate(ProcessSpec::random_walk(), 300, 10000, 4242);
    double sum = 0.0;
    for (const auto& p : set.paths) sum += p.values.back();
    const double mean = sum / static_cast<double>(set.size());
    CHECK(std::abs(mean) < 3.0 * std::sqrt(300.0) / std::sqrt(10000.0));
}

TEST_CASE("white noise values are iid draws, including t = 0") {
    const PathSet set = simulate(ProcessSpec::white_noise(2.0), 200, 200, 8);
    std::vector<double> first;
    for (const auto& p : set.paths) first.push_back(p.values[0]);
    CHECK(std::abs(stats::mean(first)) < 0.5);
    CHECK(stats::sample_variance(first) == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("gbm_log_moments") {
    SUBCASE("t = 0 collapses to (ln y0, 0)") {
        const auto [m, v] = gbm_log_moments(ProcessSpec::gbm(0.02, 0.1, 2.0), 0.0);
        CHECK(m == doctest::Approx(std::log(2.0)));
        CHECK(v == 0.0);
    }
    SUBCASE("hand value at t = 10") {
        const auto [m, v] = gbm_log_moments(ProcessSpec::gbm(0.02, 0.1, 1.0), 10.0);
        CHECK(m == doctest::Approx(0.15).epsilon(1e-12));
        CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("linear in t for y0 = 1") {
        const auto spec = ProcessSpec::gbm(0.03, 0.2, 1.0);
        const auto [m1, v1] = gbm_log_moments(spec, 5.0);
        const auto [m2, v2] = gbm_log_moments(spec, 10.0);
        CHECK(m2 == doctest::Approx(2.0 * m1));
        CHECK(v2 == doctest::Approx(2.0 * v1));
    }
    SUBCASE("non-GBM spec is rejected") {
        CHECK_THROWS_AS(gbm_log_moments(ProcessSpec::random_walk(), 1.0), ValidationError);
    }
}

TEST_CASE("ar2_char_roots") {
    SUBCASE("paper coefficients give a conjugate pair of modulus sqrt(0.5)") {
        const auto [hi, lo] = ar2_char_roots(ProcessSpec::ar2(0.0, 1.1, -0.5));
        CHECK(hi == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
        CHECK(lo == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    }
    SUBCASE("degenerate polynomial") {
        const auto [hi, lo] = ar2_char_roots(ProcessSpec::ar2(0.0, 0.0, 0.0));
        CHECK(hi == 0.0);
        CHECK(lo == 0.0);
    }
    SUBCASE("repeated unit root flags non-stationarity") {
        const auto spec = ProcessSpec::ar2(0.0, 2.0, -1.0);
        const auto [hi, lo] = ar2_char_roots(spec);
        CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_FALSE(ar2_is_stationary(spec));
    }
}

TEST_CASE("ar2_stationary_variance") {
    SUBCASE("Yule-Walker hand value") {
        CHECK(ar2_stationary_variance(ProcessSpec::ar2(0.0, 1.1, -0.5, 1.0)) ==
              doctest::Approx(1.5 / 0.52).epsilon(1e-12));
    }
    SUBCASE("white-noise reduction") {
        CHECK(ar2_stationary_variance(ProcessSpec::ar2(0.0, 0.0, 0.0, 1.0)) ==
              doctest::Approx(1.0));
    }
    SUBCASE("variance homogeneity in sigma") {
        const double base = ar2_stationary_variance(ProcessSpec::ar2(0.0, 1.1, -0.5, 1.0));
        CHECK(ar2_stationary_variance(ProcessSpec::ar2(0.0, 1.1, -0.5, 3.0)) ==
              doctest::Approx(9.0 * base).epsilon(1e-12));
    }
    SUBCASE("non-stationary spec is a domain error") {
        CHECK_THROWS_AS(ar2_stationary_variance(ProcessSpec::ar2(0.0, 2.0, -1.0)),
                        ValidationError);
    }
}

TEST_CASE("AR2 long-run sample variance matches Yule-Walker") {
    const auto spec = ProcessSpec::ar2();
    const PathSet set = simulate(spec, 1000000, 1, 31337);
    const double sv = stats::sample_variance(set.paths[0].values);
    CHECK(sv == doctest::Approx(ar2_stationary_variance(spec)).epsilon(0.05));
}

TEST_CASE("AR2 stationarity guard") {
    const auto bad = ProcessSpec::ar2(0.0, 2.0, -1.0);
    CHECK_THROWS_AS(simulate(bad, 10, 1, 1), ValidationError);
    SimulateOptions opts;
    opts.stationarity_guard = false;
    CHECK_NOTHROW(simulate(bad, 10, 1, 1, opts));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(simulate(ProcessSpec::random_walk(0.0), 10, 1, 1), ValidationError);
    CHECK_THROWS_AS(simulate(ProcessSpec::random_walk(-1.0), 10, 1, 1), ValidationError);
    CHECK_THROWS_AS(simulate(ProcessSpec::gbm(0.02, 0.1, 0.0), 10, 1, 1), ValidationError);
    CHECK_THROWS_AS(simulate(ProcessSpec::gbm(), 0, 1, 1), ValidationError);
    CHECK_THROWS_AS(simulate(ProcessSpec::gbm(), 10, 0, 1), ValidationError);
    CHECK_NOTHROW(simulate(ProcessSpec::gbm(0.02, 0.0, 1.0), 10, 1, 1));
}

TEST_CASE("random-walk increments pass KS against N(0, sigma^2) across seeds") {
    const double sigma = 1.5;
    int pass = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const PathSet set = simulate(ProcessSpec::random_walk(sigma), 1000, 1, 9000 + seed);
        const auto& v = set.paths[0].values;
        std::vector<double> inc(v.size() - 1);
        for (std::size_t i = 0; i + 1 < v.size(); ++i) inc[i] = v[i + 1] - v[i];
        const double d = stats::ks_statistic_normal(inc, 0.0, sigma);
        if (stats::ks_pvalue(d, inc.size()) >= 0.01) ++pass;
    }
    CHECK(pass >= 99);
}

TEST_CASE("GBM sample log-moments track the theoretical lines") {
    const auto spec = ProcessSpec::gbm();
    const PathSet set = simulate(spec, 30, 1000, 555);
    std::vector<double> emp_mean, emp_var, theo_mean, theo_var;
    std::vector<double> logs(set.size());
    for (std::size_t t = 0; t < set.length(); ++t) {
        for (std::size_t i = 0; i < set.size(); ++i)
            logs[i] = std::log(set.paths[i].values[t]);
        emp_mean.push_back(stats::mean(logs));
        emp_var.push_back(stats::sample_variance(logs));
        const auto [m, v] = gbm_log_moments(spec, static_cast<double>(t));
        theo_mean.push_back(m);
        theo_var.push_back(v);
    }
    CHECK(*stats::r2_against(emp_mean, theo_mean) > 0.95);
    CHECK(*stats::r2_against(emp_var, theo_var) > 0.95);
}

TEST_SUITE_END();
