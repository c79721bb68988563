#include <catch2/catch_amalgamated.hpp>

#include "afftail/rng.hpp"
#include "afftail/tailstats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace afftail;

namespace {

// Inverse-CDF oracle: U uniform on (0, 1] maps to U^(-1/alpha) ~ Pareto(alpha) on [1, inf).
std::vector<double> pareto(double alpha, std::size_t n, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = std::pow(rng.uniform_pos(), -1.0 / alpha);
    return v;
}

// Stratified quantiles of the exact law: P[X > t] = 1/t on [1, inf).
std::vector<double> exact_pareto1(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(n) / (static_cast<double>(i) + 0.5);
    return v;
}

std::vector<double> uniform01(std::size_t n, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    return v;
}

double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto cdf = [](const std::vector<double>& v, double t) {
        return static_cast<double>(std::count_if(v.begin(), v.end(), [t](double x) { return x <= t; })) /
               static_cast<double>(v.size());
    };
    double d = 0.0;
    for (const auto* v : {&a, &b})
        for (double t : *v) d = std::max(d, std::abs(cdf(a, t) - cdf(b, t)));
    return d;
}

} // namespace

TEST_CASE("empirical_ccdf counts exceedances", "[tailstats]") {
    const std::vector<double> s{1, 2, 3, 4};
    const std::vector<double> g{2.5};
    CHECK(empirical_ccdf(s, g).front().ccdf == 0.5);
    const std::vector<double> below{0.0};
    CHECK(empirical_ccdf(s, below).front().ccdf == 1.0);
    const std::vector<double> letac{-1, -2, -1, -1, -2};
    const std::vector<double> zero{0.0};
    CHECK(empirical_ccdf(letac, zero).front().ccdf == 0.0);

    const std::vector<double> left_grid{0.5, 1.5};
    const auto left = empirical_ccdf(negated(letac), left_grid);
    CHECK(left[0].ccdf == 1.0);
    CHECK(left[1].ccdf == 0.4);

    const std::vector<double> empty;
    CHECK_THROWS_AS(empirical_ccdf(s, empty), Error);
    const std::vector<double> unsorted{2.0, 1.0};
    CHECK_THROWS_AS(empirical_ccdf(s, unsorted), Error);
}

TEST_CASE("ccdf and cdf partition the sample", "[tailstats][property]") {
    const auto s = pareto(1.5, 2000, 4);
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i) grid.push_back(1.0 + 0.3 * i);
    grid.push_back(s[17]);  // exact sample value: ties go to the CDF side
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto cc = empirical_ccdf(s, grid);
    for (const auto& p : cc) {
        const auto le = std::count_if(s.begin(), s.end(), [&](double x) { return x <= p.t; });
        CHECK(p.ccdf * static_cast<double>(s.size()) + static_cast<double>(le) == static_cast<double>(s.size()));
        CHECK(p.ccdf >= 0.0);
        CHECK(p.ccdf <= 1.0);
    }
    for (std::size_t i = 1; i < cc.size(); ++i) CHECK(cc[i].ccdf <= cc[i - 1].ccdf);
}

TEST_CASE("hill estimator recovers Pareto indices", "[tailstats]") {
    for (double alpha : {2.0, 1.0}) {
        const auto s = pareto(alpha, 100000, static_cast<std::uint64_t>(alpha * 10));
        const auto h = hill_estimator(s, 316);
        CHECK(h.k == 316);
        CHECK(h.se == Catch::Approx(h.alpha / std::sqrt(316.0)));
        CHECK(std::abs(h.alpha - alpha) <= 3.0 * h.se);
    }
    const auto d = hill_estimator(pareto(2.0, 10000, 1));
    CHECK(d.k == 100);
}

TEST_CASE("hill estimator error paths", "[tailstats]") {
    const std::vector<double> same(100, 3.0);
    try {
        hill_estimator(same, 10);
        FAIL("expected ZeroDenominator");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroDenominator);
    }
    const std::vector<double> few{1.0, 2.0, -3.0};
    try {
        hill_estimator(few, 2);
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientData);
    }
}

TEST_CASE("hill estimator is scale invariant", "[tailstats][property]") {
    Xoshiro256 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = pareto(0.5 + 2.0 * rng.uniform(), 5000, rng());
        const double base = hill_estimator(s).alpha;
        const double lambda = std::exp(6.0 * rng.uniform() - 3.0);
        for (auto& x : s) x *= lambda;
        CHECK(std::abs(hill_estimator(s).alpha - base) <= 1e-12 * base);
    }
}

TEST_CASE("tail_constant flattens for exact Pareto(1)", "[tailstats]") {
    const auto coarse = tail_constant(exact_pareto1(10000), 1.0, 10.0, 100.0, 20);
    const auto fine = tail_constant(exact_pareto1(1000000), 1.0, 10.0, 100.0, 20);
    CHECK(fine.flatness_ratio < coarse.flatness_ratio);
    CHECK(fine.flatness_ratio < 1.01);
    CHECK(fine.min_value == Catch::Approx(1.0).epsilon(0.01));
    for (const auto& g : fine.grid) CHECK(g.scaled >= 0.0);
}

TEST_CASE("tail_constant rejects light tails and bounded samples", "[tailstats]") {
    Xoshiro256 rng(2);
    std::vector<double> ex(100000);
    for (auto& x : ex) x = -std::log(rng.uniform_pos());
    const auto r = tail_constant(ex, 1.0, 1.0, 10.0, 10);
    CHECK(r.flatness_ratio > 100.0);
    CHECK(r.grid.back().scaled < r.grid.front().scaled);

    const auto u = uniform01(1000, 3);
    try {
        tail_constant(u, 1.0, 0.5, 2.0, 10);
        FAIL("expected ZeroCcdf");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroCcdf);
        CHECK(std::string(e.what()).find("largest usable") != std::string::npos);
    }
    CHECK_THROWS_AS(tail_constant(u, 0.0, 0.1, 0.5, 10), Error);
    CHECK_THROWS_AS(tail_constant(u, 1.0, 0.5, 0.1, 10), Error);
    const auto warned = tail_constant(u, 1.0, 0.1, 0.995, 5);
    CHECK_FALSE(warned.warnings.empty());
}

TEST_CASE("tail_constant transforms under sample scaling", "[tailstats][property]") {
    const double alpha = 1.3;
    const double lambda = 4.0;  // power of two keeps t / lambda exact
    auto s = pareto(alpha, 50000, 21);
    const auto base = tail_constant(s, alpha, 2.0, 20.0, 15);
    for (auto& x : s) x *= lambda;
    const auto scaled = tail_constant(s, alpha, 2.0 * lambda, 20.0 * lambda, 15);
    for (std::size_t i = 0; i < base.grid.size(); ++i)
        CHECK(scaled.grid[i].scaled == Catch::Approx(std::pow(lambda, alpha) * base.grid[i].scaled).epsilon(1e-12));
}

TEST_CASE("ks_distance", "[tailstats]") {
    const auto a = pareto(1.0, 300, 1);
    CHECK(ks_distance(a, a) == 0.0);
    const std::vector<double> lo{1, 2, 3}, hi{4, 5, 6, 7};
    CHECK(ks_distance(lo, hi) == 1.0);
    const auto b = pareto(1.2, 250, 2);
    const auto c = uniform01(200, 3);
    CHECK(ks_distance(a, b) == Catch::Approx(ks_oracle(a, b)).margin(1e-15));
    CHECK(ks_distance(b, c) == Catch::Approx(ks_oracle(b, c)).margin(1e-15));
    CHECK(ks_distance(a, b) == ks_distance(b, a));
    CHECK(ks_distance(a, c) <= ks_distance(a, b) + ks_distance(b, c) + 1e-15);
    const std::vector<double> none;
    CHECK_THROWS_AS(ks_distance(a, none), Error);
}

TEST_CASE("ks_distance symmetry and triangle inequality on random batches", "[tailstats][property]") {
    Xoshiro256 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = pareto(0.5 + rng.uniform(), 100 + rng() % 200, rng());
        const auto y = pareto(0.5 + rng.uniform(), 100 + rng() % 200, rng());
        const auto z = uniform01(100 + rng() % 200, rng());
        CHECK(ks_distance(x, y) == ks_distance(y, x));
        CHECK(ks_distance(x, z) <= ks_distance(x, y) + ks_distance(y, z) + 1e-15);
        CHECK(ks_distance(x, y) == Catch::Approx(ks_oracle(x, y)).margin(1e-15));
    }
}

TEST_CASE("loglog_slope approximates minus alpha", "[tailstats]") {
    CHECK(loglog_slope(pareto(2.0, 200000, 5), 0.5, 0.999) == Catch::Approx(-2.0).epsilon(0.1));
    CHECK(loglog_slope(pareto(1.0, 200000, 6), 0.5, 0.999) == Catch::Approx(-1.0).epsilon(0.1));
    const auto u = uniform01(200000, 7);
    const double mild = loglog_slope(u, 0.5, 0.9);
    const double steep = loglog_slope(u, 0.5, 0.999);
    CHECK(steep < mild);
    CHECK(steep < -4.0);
    const std::vector<double> tiny{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(loglog_slope(tiny, 0.1, 0.9), Error);
    CHECK_THROWS_AS(loglog_slope(u, 0.9, 0.5), Error);
}

TEST_CASE("tail_report assembles a consistent report", "[tailstats]") {
    const auto s = pareto(1.0, 100000, 9);
    const auto r = tail_report(s);
    CHECK(r.k_used == 316);
    CHECK(std::abs(r.alpha_hill - 1.0) <= 3.0 * r.hill_se);
    CHECK(r.t_hi > 10.0 * r.t_lo);
    CHECK(r.flatness_ratio < 1.5);
    CHECK(r.loglog_slope == Catch::Approx(-1.0).epsilon(0.1));
    REQUIRE(r.ccdf.size() == r.c_grid.size());
    for (std::size_t i = 1; i < r.ccdf.size(); ++i) CHECK(r.ccdf[i].ccdf <= r.ccdf[i - 1].ccdf);
}
