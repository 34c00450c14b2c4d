#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "btlab/errors.hpp"
#include "btlab/rng.hpp"
#include "btlab/sha256.hpp"
#include "btlab/stats.hpp"

using namespace btlab;

TEST_SUITE_BEGIN("stats");

TEST_CASE("normal_cdf reference points") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(stats::normal_cdf(-1.0, 0.0, 1.0) == doctest::Approx(0.15865525).epsilon(1e-6));
    CHECK(stats::normal_cdf(3.0, 1.0, 2.0) == doctest::Approx(0.84134475).epsilon(1e-6));
}

TEST_CASE("r2_against") {
    const std::vector<double> emp{1, 2, 3, 4};
    SUBCASE("perfect prediction gives exactly 1") {
        CHECK(*stats::r2_against(emp, emp) == 1.0);
    }
    SUBCASE("constant empirical series is degenerate") {
        const std::vector<double> flat{2, 2, 2, 2};
        CHECK_FALSE(stats::r2_against(flat, emp).has_value());
    }
    SUBCASE("a bad predictor can push R^2 below zero") {
        const std::vector<double> off{10, 20, 30, 40};
        CHECK(*stats::r2_against(emp, off) < 0.0);
    }
    SUBCASE("never exceeds one") {
        const std::vector<double> close{1.1, 1.9, 3.2, 3.9};
        CHECK(*stats::r2_against(emp, close) <= 1.0);
    }
}

TEST_CASE("one-sample KS behaves") {
    Rng rng(77);
    std::vector<double> normal(4000), shifted(4000);
    for (std::size_t i = 0; i < normal.size(); ++i) {
        normal[i] = rng.gaussian();
        shifted[i] = normal[i] + 1.0;
    }
    const double d_ok = stats::ks_statistic_normal(normal, 0.0, 1.0);
    const double d_bad = stats::ks_statistic_normal(shifted, 0.0, 1.0);
    CHECK(stats::ks_pvalue(d_ok, normal.size()) > 0.01);
    CHECK(stats::ks_pvalue(d_bad, shifted.size()) < 1e-6);
    CHECK(d_bad > d_ok);
}

TEST_CASE("ks_pvalue endpoints") {
    CHECK(stats::ks_pvalue(0.0, 100) == doctest::Approx(1.0));
    CHECK(stats::ks_pvalue(0.9, 100) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(stats::ks_pvalue(0.05, 1000) > stats::ks_pvalue(0.08, 1000));
}

TEST_CASE("two-sample KS") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    SUBCASE("identical samples give zero") {
        CHECK(stats::ks_statistic_two_sample(a, a) == 0.0);
    }
    SUBCASE("disjoint supports give one") {
        const std::vector<double> b{10, 11, 12};
        CHECK(stats::ks_statistic_two_sample(a, b) == 1.0);
    }
    SUBCASE("interleaved samples give a small statistic") {
        Rng rng(9);
        std::vector<double> x(2000), y(2000);
        for (auto& v : x) v = rng.gaussian();
        for (auto& v : y) v = rng.gaussian();
        CHECK(stats::ks_statistic_two_sample(x, y) < 1.63 * std::sqrt(2.0 / 2000.0));
    }
}

TEST_CASE("quantiles") {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    CHECK(stats::quantile_sorted(xs, 0.0) == 1.0);
    CHECK(stats::quantile_sorted(xs, 1.0) == 5.0);
    CHECK(stats::quantile_sorted(xs, 0.5) == 3.0);
    CHECK(stats::quantile_sorted(xs, 0.25) == 2.0);
}

TEST_CASE("histogram mass sums to one and respects edges") {
    const std::vector<double> xs{0.1, 0.4, 0.5, 0.9, 1.0};
    const auto edges = stats::linspace_edges(0.0, 1.0, 2);
    const auto h = stats::histogram(xs, edges);
    double total = 0.0;
    for (double m : h.mass) total += m;
    CHECK(total == doctest::Approx(1.0));
    CHECK(h.mass[0] == doctest::Approx(0.4));  // 0.1, 0.4
    CHECK(h.mass[1] == doctest::Approx(0.6));  // 0.5, 0.9, 1.0 (last edge inclusive)
}

TEST_CASE("fd_bin_count is positive and bounded") {
    Rng rng(4);
    std::vector<double> xs(5000);
    for (auto& v : xs) v = rng.gaussian();
    std::sort(xs.begin(), xs.end());
    const int bins = stats::fd_bin_count(xs);
    CHECK(bins >= 8);
    CHECK(bins <= 512);
    const std::vector<double> flat(100, 1.0);
    CHECK(stats::fd_bin_count(flat) == 1);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex(std::string{}) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string{"abc"}) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string{"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"}) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_SUITE_END();
