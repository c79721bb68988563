#include <catch2/catch_amalgamated.hpp>

#include "afftail/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace afftail;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "afftail_test_experiment" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig config_from(const std::string& text, const fs::path& dir, const std::string& stem = "cfg") {
    return experiment_from_document(parse_toml(text), dir, stem);
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

const char* kCounterexample = R"(
label = "counterexample"
atoms = [ {a = 3, b = 1, c = -1, w = 0.2},
          {a = 0.5, b = -1, c = 0, w = 0.8} ]
[experiment]
family = "letac"
samples = 20000
seed = 3
)";

const char* kAffine = R"(
atoms = [ {a = 2, b = -1, w = 0.3333333333333333},
          {a = 0.5, b = 1, w = 0.6666666666666667} ]
[experiment]
family = "affine"
seed = 11
)";

} // namespace

TEST_CASE("experiment config parsing", "[experiment]") {
    const auto dir = scratch("parse");
    auto cfg = config_from(kCounterexample, dir);
    CHECK(cfg.family == FamilyKind::Letac);
    CHECK(cfg.sim.n_samples == 20000);
    CHECK(cfg.sim.seed == 3);
    CHECK(cfg.output_dir == (dir / "cfg-report").lexically_normal());
    CHECK(label_of(cfg.driver) == "counterexample");

    const auto defaults = config_from("atoms = [{a = 0.5, b = 1, w = 1}]", dir, "plain");
    CHECK(defaults.sim.n_samples == 100000);
    CHECK(defaults.family == FamilyKind::Affine);
    CHECK(label_of(defaults.driver) == "plain");

    CHECK_THROWS_AS(config_from("atoms = [{a = 0.5, b = 1, w = 1}]\n[experiment]\nbogus = 1\n", dir), Error);
    CHECK_THROWS_AS(config_from("atoms = [{a = 0.5, b = 1, w = 1}]\n[experiment]\nsamples = -4\n", dir), Error);
    CHECK_THROWS_AS(config_from("atoms = [{a = 0.5, b = 1, w = 1}]\n[experiment]\nformats = [\"pdf\"]\n", dir), Error);
    CHECK_THROWS_AS(config_from("atoms = [{a = 0.5, b = 1, w = 1}]\n[experiment]\nfamily = \"garch\"\n", dir), Error);

    std::ofstream(dir / "m.toml") << "atoms = [{a = 0.5, b = 1, w = 1}]\n";
    const auto ref = config_from("[experiment]\nmeasure = \"m.toml\"\nformats = [\"json\"]\n", dir);
    CHECK(label_of(ref.driver) == "m");
    CHECK(ref.write_json);
    CHECK_FALSE(ref.write_text);

    // The digest ignores threads and output location.
    auto a = config_from(kAffine, dir);
    auto b = a;
    b.sim.threads = 4;
    b.output_dir = dir / "elsewhere";
    CHECK(experiment_digest(a) == experiment_digest(b));
    b.sim.seed = 12;
    CHECK(experiment_digest(a) != experiment_digest(b));
}

TEST_CASE("counterexample experiment skips the bounded right tail", "[experiment]") {
    const auto dir = scratch("counterexample");
    auto cfg = config_from(kCounterexample, dir);
    cfg.output_dir = dir / "out";
    const auto r = run_experiment(cfg);
    REQUIRE(r.ok());
    REQUIRE(r.verdict);
    CHECK_FALSE(*r.verdict->cl_positive);
    REQUIRE(r.stationary_max);
    CHECK(*r.stationary_max <= -1.0);
    REQUIRE(r.right.skipped);
    CHECK(*r.right.skipped == "support bounded above at -1");
    CHECK_FALSE(r.right.report);
    REQUIRE(r.left.skipped);  // Letac values never fall below min(a c + b) = -2
    CHECK(*r.stationary_min >= -2.0);
    CHECK(r.sup_pi_tail.report);
    CHECK_FALSE(r.ks);  // affine family only

    REQUIRE(r.agreement.size() >= 2);
    CHECK(r.agreement[0].analytic == "zero");
    CHECK(r.agreement[0].consistent == true);

    CHECK(fs::exists(cfg.output_dir / "ccdf.csv"));
    CHECK_FALSE(fs::exists(cfg.output_dir / "tail_constant.csv"));
    CHECK(fs::exists(cfg.output_dir / "sup_pi_tail.csv"));
    const auto manifest = slurp(cfg.output_dir / "manifest.txt");
    CHECK(manifest.find("tail_constant.csv skipped") != std::string::npos);
    CHECK(manifest.find("ccdf.csv ") != std::string::npos);
    const auto json = nlohmann::json::parse(slurp(cfg.output_dir / "report.json"));
    CHECK(json["criteria"]["letac"]["N3"] == -0.5);
    CHECK(json["provenance"]["tool_version"] == kToolVersion);
    CHECK(slurp(cfg.output_dir / "ccdf.csv").rfind("t,ccdf\n", 0) == 0);
}

TEST_CASE("positive affine experiment", "[experiment]") {
    const auto dir = scratch("affine");
    auto cfg = config_from(kAffine, dir);
    cfg.sim.n_samples = 1000000;
    cfg.backward_samples = 100000;
    cfg.sup_pi_samples = 100000;
    cfg.output_dir = dir / "out";
    const auto r = run_experiment(cfg);
    REQUIRE(r.ok());
    REQUIRE(r.alpha);
    CHECK(*r.alpha == Catch::Approx(1.0).margin(1e-12));
    CHECK(r.verdict->support->upper == SupportClass::HalfLineUp);
    REQUIRE(r.right.report);
    const auto& t = *r.right.report;
    CHECK(t.t_hi >= 10.0 * t.t_lo);
    CHECK(t.flatness_ratio <= 3.0);
    CHECK(*r.stationary_min >= 2.0 - 1e-9);  // [2, inf) is invariant
    REQUIRE(r.ks);
    CHECK(*r.ks <= *r.ks_threshold);
    for (const auto& a : r.agreement) {
        INFO(a.side << ": " << a.empirical);
        CHECK(a.consistent.value_or(true));
    }
    for (const char* f : {"ccdf.csv", "tail_constant.csv", "sup_pi_tail.csv", "report.json", "report.txt", "manifest.txt"})
        CHECK(fs::exists(cfg.output_dir / f));
    CHECK(slurp(cfg.output_dir / "tail_constant.csv").rfind("t,ccdf,t_pow_alpha_ccdf\n", 0) == 0);
}

TEST_CASE("degenerate measure short-circuits after criteria", "[experiment]") {
    const auto dir = scratch("degenerate");
    auto cfg = config_from("atoms = [{a = 2, b = -1, w = 0.5}, {a = 0.5, b = 0.5, w = 0.5}]", dir);
    cfg.output_dir = dir / "out";
    const auto r = run_experiment(cfg);
    CHECK(r.ok());
    CHECK(r.short_circuited);
    CHECK(r.stages_completed == std::vector<std::string>{"criteria"});
    CHECK_FALSE(r.stationary);
    CHECK(fs::exists(cfg.output_dir / "report.json"));
    CHECK_FALSE(fs::exists(cfg.output_dir / "ccdf.csv"));
    CHECK(slurp(cfg.output_dir / "manifest.txt").find("degenerate") != std::string::npos);
}

TEST_CASE("stage failure keeps partial results", "[experiment]") {
    const auto dir = scratch("failure");
    auto cfg = config_from("atoms = [{a = 2, b = 1, w = 0.5}, {a = 0.5, b = 1, w = 0.5}]", dir);
    cfg.output_dir = dir / "out";
    const auto r = run_experiment(cfg);
    CHECK_FALSE(r.ok());
    CHECK(r.failed_stage == "simulate");
    CHECK(r.failure.find("NotContracting") != std::string::npos);
    CHECK(r.verdict);
    const auto json = nlohmann::json::parse(slurp(cfg.output_dir / "report.json"));
    CHECK(json["status"] == "failed");
    CHECK(json["failed_stage"] == "simulate");
    CHECK_FALSE(json["criteria"].is_null());
}

TEST_CASE("parametric experiment skips criteria", "[experiment]") {
    const auto dir = scratch("parametric");
    auto cfg = config_from(R"(
parametric = {family = "lognormal_normal", params = {mu_log_a = -0.5, sigma_log_a = 0.8, mu_b = 1, sigma_b = 1}}
[experiment]
samples = 50000
seed = 5
)", dir);
    cfg.output_dir.clear();
    const auto r = run_experiment(cfg);
    REQUIRE(r.ok());
    CHECK_FALSE(r.verdict);
    CHECK(r.alpha_source == "lognormal");
    CHECK(*r.alpha == Catch::Approx(2.0 * 0.5 / 0.64));
    CHECK(r.right.report);
    CHECK(r.left.report);
    CHECK(r.ks);
}

TEST_CASE("experiments are byte-deterministic", "[experiment][property]") {
    const auto dir = scratch("determinism");
    auto cfg = config_from(kAffine, dir);
    cfg.sim.n_samples = 20000;
    cfg.output_dir = dir / "a";
    run_experiment(cfg);
    cfg.output_dir = dir / "b";
    cfg.sim.threads = 3;
    run_experiment(cfg);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        const auto other = dir / "b" / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(e.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared == 6);
}
