#include <catch2/catch_amalgamated.hpp>

#include "afftail/measure.hpp"
#include "afftail/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

using namespace afftail;

namespace {

AtomicMeasure two_atoms(double a1, double b1, double w1, double a2, double b2) {
    return AtomicMeasure{{Atom{a1, b1, std::nullopt, w1}, Atom{a2, b2, std::nullopt, 1.0 - w1}}, "t"};
}

AtomicMeasure counterexample(double p = 0.2) {
    return AtomicMeasure{{Atom{3.0, 1.0, -1.0, p}, Atom{0.5, -1.0, 0.0, 1.0 - p}}, "letac-counterexample"};
}

// Oracle: solve a_i x + b_i = x atom by atom and compare the solutions.
bool degenerate_oracle(const std::vector<std::pair<double, double>>& ab) {
    std::vector<double> xs;
    for (auto [a, b] : ab) {
        if (a == 1.0) {
            if (b != 0.0) return false;
            continue;
        }
        xs.push_back(b / (1.0 - a));
    }
    for (double x : xs)
        if (std::abs(x - xs.front()) > 1e-12) return false;
    return true;
}

} // namespace

TEST_CASE("validate computes exact log-moments", "[measure]") {
    const auto lm = validate(counterexample());
    const double expected = 0.2 * std::log(3.0) - 0.8 * std::log(2.0);
    CHECK(lm.mean_log_a == Catch::Approx(expected).margin(1e-15));
    CHECK(lm.mean_log_a == Catch::Approx(-0.3348).margin(5e-5));
    CHECK(lm.has_expanding_atom);
    CHECK_FALSE(lm.has_a1_bpos);
    CHECK(lm.mean_log_plus_abs_b == 0.0);

    const auto unit = validate(AtomicMeasure{{Atom{1.0, 0.0, std::nullopt, 1.0}}, "unit"});
    CHECK(unit.mean_log_a == 0.0);
    CHECK_FALSE(unit.has_expanding_atom);

    CHECK(validate(two_atoms(2.0, 1.0, 0.5, 0.5, 1.0)).mean_log_a == 0.0);

    const auto a1 = validate(two_atoms(1.0, 2.0, 0.5, 0.5, 0.0));
    CHECK(a1.has_a1_bpos);
}

TEST_CASE("validate rejects malformed measures", "[measure]") {
    auto bad_sum = two_atoms(2.0, 1.0, 0.5, 0.5, 1.0);
    bad_sum.atoms[1].weight = 0.4;
    CHECK_THROWS_AS(validate(bad_sum), Error);

    auto bad_a = two_atoms(0.0, 1.0, 0.5, 0.5, 1.0);
    CHECK_THROWS_AS(validate(bad_a), Error);
    bad_a.atoms[0].a = -1.0;
    CHECK_THROWS_AS(validate(bad_a), Error);

    auto mixed = counterexample();
    mixed.atoms[1].c.reset();
    try {
        validate(mixed);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidMeasure);
    }

    CHECK_THROWS_AS(validate(AtomicMeasure{}), Error);
}

TEST_CASE("weights within 1e-12 of one are renormalized, larger deviations rejected", "[measure]") {
    auto m = two_atoms(2.0, 1.0, 0.5, 0.5, 1.0);
    m.atoms[0].weight += 5e-13;
    const auto n = normalized(m);
    CHECK(std::abs(n.atoms[0].weight + n.atoms[1].weight - 1.0) <= 1e-16);

    m.atoms[0].weight += 1e-9;
    CHECK_THROWS_AS(normalized(m), Error);
}

TEST_CASE("validate is order independent to the last bit", "[measure][property]") {
    Xoshiro256 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 5);
        AtomicMeasure m;
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            Atom at{std::exp(4.0 * rng.uniform() - 2.0), 6.0 * rng.uniform() - 3.0, std::nullopt,
                    0.05 + rng.uniform()};
            total += at.weight;
            m.atoms.push_back(at);
        }
        for (auto& at : m.atoms) at.weight /= total;
        AtomicMeasure shuffled = m;
        std::reverse(shuffled.atoms.begin(), shuffled.atoms.end());
        std::swap(shuffled.atoms.front(), shuffled.atoms[static_cast<std::size_t>(k / 2)]);
        LogMoments x, y;
        try {
            x = validate(m);
        } catch (const Error&) {
            continue;  // weight sum rounding outside tolerance
        }
        y = validate(shuffled);
        CHECK(std::memcmp(&x.mean_log_a, &y.mean_log_a, sizeof(double)) == 0);
        CHECK(std::memcmp(&x.mean_log_plus_abs_b, &y.mean_log_plus_abs_b, sizeof(double)) == 0);
        CHECK(x.has_expanding_atom == y.has_expanding_atom);
    }
}

TEST_CASE("degeneracy_check finds a common fixed point", "[measure]") {
    CHECK(degeneracy_check(two_atoms(2.0, -1.0, 0.5, 0.5, 0.5)));
    CHECK(degenerate_oracle({{2.0, -1.0}, {0.5, 0.5}}));
    CHECK_FALSE(degeneracy_check(two_atoms(2.0, -1.0, 0.5, 0.5, -1.0)));
    CHECK_FALSE(degenerate_oracle({{2.0, -1.0}, {0.5, -1.0}}));
    CHECK(degeneracy_check(AtomicMeasure{{Atom{1.0, 0.0, std::nullopt, 1.0}}, "id"}));
    CHECK_FALSE(degeneracy_check(AtomicMeasure{{Atom{1.0, 0.5, std::nullopt, 1.0}}, "shift"}));

    const auto x = common_fixed_point(two_atoms(2.0, -1.0, 0.5, 0.5, 0.5));
    REQUIRE(x);
    CHECK(*x == 1.0);
}

TEST_CASE("degeneracy_check agrees with oracle and survives atom splitting", "[measure][property]") {
    Xoshiro256 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const double xstar = std::round(8.0 * rng.uniform() - 4.0);
        const bool make_degenerate = rng() % 2 == 0;
        AtomicMeasure m;
        std::vector<std::pair<double, double>> ab;
        const int k = 2 + static_cast<int>(rng() % 3);
        for (int i = 0; i < k; ++i) {
            const double a = std::ldexp(1.0, static_cast<int>(rng() % 5) - 2);  // dyadic keeps arithmetic exact
            double b = xstar * (1.0 - a);
            if (!make_degenerate && i == k - 1) b += 1.0;
            m.atoms.push_back(Atom{a, b, std::nullopt, 1.0 / k});
            ab.emplace_back(a, b);
        }
        m = normalized(m);
        const bool got = degeneracy_check(m);
        CHECK(got == degenerate_oracle(ab));
        if (got) {
            const double x = *common_fixed_point(m);
            for (const auto& at : m.atoms)
                CHECK(std::abs(at.a * x + at.b - x) <= 1e-9 * (1.0 + std::abs(x)));
        }
        AtomicMeasure split = m;
        Atom dup = split.atoms.front();
        dup.weight *= 0.5;
        split.atoms.front().weight *= 0.5;
        split.atoms.push_back(dup);
        CHECK(degeneracy_check(split) == got);
    }
}

TEST_CASE("arithmeticity warning detects lattices", "[measure]") {
    auto warn = [](double a1, double a2) { return arithmeticity_warning(two_atoms(a1, 0.0, 0.5, a2, 0.0)); };

    const auto w24 = warn(2.0, 4.0);
    REQUIRE(w24);
    CHECK(w24->lattice_step == Catch::Approx(std::log(2.0)));

    CHECK_FALSE(warn(2.0, 3.0));

    const auto whalf = warn(2.0, 0.5);
    REQUIRE(whalf);
    CHECK(whalf->lattice_step == Catch::Approx(std::log(2.0)));

    CHECK(arithmeticity_warning(AtomicMeasure{{Atom{3.0, 0.0, std::nullopt, 1.0}}, "one"}));
    CHECK(warn(3.0, 3.0));
    CHECK_FALSE(warn(3.0, 0.5));
    CHECK(warn(8.0, 1.0 / 32.0));
}
