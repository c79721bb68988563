#include <catch2/catch_amalgamated.hpp>

#include "afftail/io.hpp"
#include "afftail/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace afftail;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::Io;
}

} // namespace

TEST_CASE("toml subset parses tables, arrays and scalars", "[io]") {
    const auto doc = parse_toml(R"(# leading comment
label = "ex \"q\""   # trailing comment
n = 1_000
x = -2.5e-3
flag = true
list = [1, 2,
        3,]   # multi-line with trailing comma
inline = {a = 1, b = {c = "d"}}

[experiment]
family = 'affine'
seed = 18446744073709551615

[[atoms]]
a = 2
b = -1
w = 0.25
[[atoms]]
a = 0.5
b = 1
w = 0.75
)");
    CHECK(doc["label"] == "ex \"q\"");
    CHECK(doc["n"].get<std::int64_t>() == 1000);
    CHECK(doc["x"].get<double>() == -2.5e-3);
    CHECK(doc["flag"] == true);
    CHECK(doc["list"].size() == 3);
    CHECK(doc["inline"]["b"]["c"] == "d");
    CHECK(doc["experiment"]["family"] == "affine");
    CHECK(doc["experiment"]["seed"].get<std::uint64_t>() == std::numeric_limits<std::uint64_t>::max());
    REQUIRE(doc["atoms"].size() == 2);
    CHECK(doc["atoms"][1]["w"].get<double>() == 0.75);
}

TEST_CASE("toml errors carry line numbers", "[io]") {
    try {
        parse_toml("a = 1\nb = \n");
        FAIL("expected Parse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(code_of([] { parse_toml("a = 1\na = 2\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_toml("[t]\n[t]\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_toml("s = \"open\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_toml("x = 1 2\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_toml("x = [1, 2\n"); }) == ErrorCode::Parse);
}

TEST_CASE("measure documents", "[io]") {
    const auto d = driver_from_document(parse_toml(R"(
label = "counterexample"
atoms = [ {a = 3, b = 1, c = -1, w = 0.2},
          {a = 0.5, b = -1, c = 0, w = 0.8} ]
)"));
    const auto& m = std::get<AtomicMeasure>(d);
    CHECK(m.label == "counterexample");
    REQUIRE(m.atoms.size() == 2);
    CHECK(m.has_c());
    CHECK(*m.atoms[0].c == -1.0);

    const auto p = driver_from_document(parse_toml(R"(
parametric = {family = "lognormal_normal",
              params = {mu_log_a = -0.5, sigma_log_a = 0.8, mu_b = 0, sigma_b = 1}}
)"), "fallback");
    const auto& pd = std::get<ParametricDriver>(p);
    CHECK(pd.label == "fallback");
    CHECK(pd.sigma_log_a == 0.8);
    CHECK_FALSE(pd.c);

    // Renormalized when within tolerance.
    const auto near = driver_from_document(parse_toml("atoms = [{a = 2, b = 0, w = 0.5}, {a = 0.25, b = 1, w = 0.5000000000001}]"));
    double total = 0.0;
    for (const auto& at : std::get<AtomicMeasure>(near).atoms) total += at.weight;
    CHECK(total == Catch::Approx(1.0).margin(1e-15));

    CHECK(code_of([] { driver_from_document(parse_toml("atoms = [{a = 2, b = 0, w = 0.4}]")); }) ==
          ErrorCode::InvalidMeasure);
    CHECK(code_of([] { driver_from_document(parse_toml("atoms = [{a = 1, b = 0, w = 1, z = 3}]")); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] { driver_from_document(parse_toml("atoms = [{a = 1, w = 1}]")); }) == ErrorCode::Parse);
    CHECK(code_of([] { driver_from_document(parse_toml("label = \"x\"")); }) == ErrorCode::Parse);
    CHECK(code_of([] { driver_from_document(parse_toml("parametric = {family = \"pareto\"}")); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] {
              driver_from_document(parse_toml("atoms = [{a = 1, b = 0, w = 1, c = 0}, {a = 2, b = 0, w = 0}]"));
          }) == ErrorCode::InvalidMeasure);
}

TEST_CASE("load_driver reads files and reports missing ones", "[io]") {
    const auto dir = std::filesystem::temp_directory_path() / "afftail_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "half.toml";
    std::ofstream(path) << "atoms = [{a = 2, b = -1, w = 0.3333333333333333}, {a = 0.5, b = 1, w = 0.6666666666666667}]\n";
    const auto d = load_driver(path);
    CHECK(label_of(d) == "half");
    CHECK(code_of([&] { load_driver(dir / "missing.toml"); }) == ErrorCode::Io);
}

TEST_CASE("sample files round-trip bit-exactly", "[io][property]") {
    Xoshiro256 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(rng() % 500);
        for (auto& x : v) x = std::ldexp(rng.normal(), static_cast<int>(rng() % 200) - 100);
        if (!v.empty()) v[0] = -0.0;
        const std::uint64_t seed = rng(), digest = rng();

        std::ostringstream text;
        write_samples_text(text, v);
        const auto t = parse_samples(text.str());
        CHECK_FALSE(t.binary);
        REQUIRE(t.values.size() == v.size());
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(t.values[i]) == std::bit_cast<std::uint64_t>(v[i]));

        std::ostringstream bin;
        write_samples_binary(bin, v, seed, digest);
        CHECK(bin.str().size() == 40 + 8 * v.size());
        const auto b = parse_samples(bin.str());
        CHECK(b.binary);
        CHECK(b.seed == seed);
        CHECK(b.config_digest == digest);
        CHECK(b.values == v);
    }
}

TEST_CASE("sample file errors", "[io]") {
    CHECK(parse_samples("# header\n1.5\n\n  2\r\n").values == std::vector<double>{1.5, 2.0});
    try {
        parse_samples("1\nabc\n");
        FAIL("expected Parse");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::ostringstream bin;
    write_samples_binary(bin, {1.0, 2.0}, 1, 2);
    const std::string good = bin.str();
    CHECK(code_of([&] { parse_samples(good.substr(0, good.size() - 3)); }) == ErrorCode::Parse);
    std::string bad_version = good;
    bad_version[8] = 7;
    CHECK(code_of([&] { parse_samples(bad_version); }) == ErrorCode::Parse);
}
