// afftail: command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 a computation stage failed.
// Verdict content never changes the exit code.

#include "afftail/acceptance.hpp"
#include "afftail/cramer.hpp"
#include "afftail/criteria.hpp"
#include "afftail/engine.hpp"
#include "afftail/experiment.hpp"
#include "afftail/io.hpp"
#include "afftail/report.hpp"
#include "afftail/tailstats.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace afftail;

namespace {

enum class Format { Text, JsonLines };

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string output;
    Format format = Format::Text;
};

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStage = 2;

/// Input problems are usage errors; everything else happened while computing.
int exit_code_for(ErrorCode c) {
    switch (c) {
    case ErrorCode::Parse:
    case ErrorCode::Io:
    case ErrorCode::InvalidMeasure:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParametricRefused: return kExitUsage;
    default: return kExitStage;
    }
}

void emit_record(const ojson& j) { std::cout << j.dump() << '\n'; }

void apply_globals(SimConfig& cfg, const Globals& g) {
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    return out;
}

int cmd_solve_alpha(const std::string& measure, const Globals& g) {
    const Driver d = load_driver(measure);
    const CramerRoot r = solve_alpha(d);
    if (g.format == Format::JsonLines) {
        ojson j = to_json(r);
        j["label"] = label_of(d);
        emit_record(j);
    } else {
        std::cout << "alpha     " << num(r.alpha) << '\n'
                  << "residual  " << num(r.residual) << '\n'
                  << "bracket   [" << num(r.bracket_lo) << ", " << num(r.bracket_hi) << "]\n";
    }
    return kExitOk;
}

struct SimulateArgs {
    std::string measure;
    std::string family = "affine";
    std::string kind = "stationary";
    std::uint64_t burn_in = 0;
    std::size_t samples = 1000;
    std::size_t chains = 64;
    bool binary = false;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g) {
    const Driver d = load_driver(a.measure);
    SimConfig cfg;
    cfg.burn_in = a.burn_in;
    cfg.n_samples = a.samples;
    cfg.chains = a.chains;
    apply_globals(cfg, g);

    SampleBatch batch;
    if (a.kind == "stationary") batch = sample_stationary(parse_family(a.family), d, cfg);
    else if (a.kind == "perpetuity") batch = sample_perpetuity(d, cfg);
    else batch = sample_sup_pi(d, cfg);
    const std::uint64_t digest = config_digest(batch.config, batch.kind, batch.family, batch.label);

    if (a.binary && g.output.empty()) throw Error(ErrorCode::InvalidArgument, "--binary needs --output");
    if (!g.output.empty()) {
        auto out = open_output(g.output, a.binary);
        if (a.binary) write_samples_binary(out, batch.values, batch.config.seed, digest);
        else write_samples_text(out, batch.values);
    }
    if (g.format == Format::JsonLines) {
        emit_record(batch_json(batch));
        if (g.output.empty()) emit_record({{"values", batch.values}});
    } else if (g.output.empty()) {
        write_samples_text(std::cout, batch.values);
    } else {
        std::cerr << batch.values.size() << " " << to_string(batch.kind) << " samples -> " << g.output
                  << " (seed " << batch.config.seed << ", config " << hex64(digest) << ")\n";
    }
    return kExitOk;
}

struct TailArgs {
    std::string samples;
    std::optional<double> alpha;
    std::optional<std::size_t> k;
    std::optional<double> t_lo;
    std::optional<double> t_hi;
    std::size_t n_grid = 20;
    bool left = false;
};

int cmd_tail(const TailArgs& a, const Globals& g) {
    const SampleFile f = read_samples(a.samples);
    TailOptions opt;
    opt.alpha = a.alpha;
    opt.hill_k = a.k;
    opt.t_lo = a.t_lo;
    opt.t_hi = a.t_hi;
    opt.n_grid = a.n_grid;
    const TailReport r = tail_report(a.left ? negated(f.values) : f.values, opt);

    std::ostringstream csv;
    write_tail_csv(csv, r.c_grid);
    if (!g.output.empty()) open_output(g.output) << csv.str();

    if (g.format == Format::JsonLines) {
        ojson j = to_json(r, g.output.empty());
        j["side"] = a.left ? "left" : "right";
        if (f.binary) j["source"] = {{"seed", f.seed}, {"config_digest", hex64(f.config_digest)}};
        emit_record(j);
    } else {
        std::cout << (a.left ? "left" : "right") << " tail of " << a.samples << '\n';
        write_text(std::cout, r);
        if (g.output.empty()) std::cout << '\n' << csv.str();
    }
    return kExitOk;
}

int cmd_criteria(const std::string& measure, const std::string& family, const Globals& g) {
    const Driver d = load_driver(measure);
    const CriteriaVerdict v = full_verdict(d, parse_family(family));
    ojson j = to_json(v);
    j["label"] = label_of(d);
    if (g.format == Format::Text) {
        std::cout << "criteria for " << label_of(d) << '\n';
        write_text(std::cout, v);
        std::cout << '\n';
    }
    emit_record(j);
    if (!g.output.empty()) open_output(g.output) << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_experiment(const std::string& config, const Globals& g) {
    ExperimentConfig cfg = load_experiment(config);
    apply_globals(cfg.sim, g);
    if (!g.output.empty()) cfg.output_dir = std::filesystem::absolute(g.output).lexically_normal();
    const ExperimentReport r = run_experiment(cfg);
    if (g.format == Format::JsonLines) {
        emit_record(to_json(r));
    } else {
        write_text(std::cout, r);
        std::cout << "report written to " << cfg.output_dir.string() << '\n';
    }
    if (!r.ok()) {
        std::cerr << "stage '" << *r.failed_stage << "' failed: " << r.failure << '\n';
        return kExitStage;
    }
    return kExitOk;
}

int cmd_verify(const std::vector<int>& only, const Globals& g) {
    AcceptanceOptions opt;
    opt.only = only;
    if (g.seed) opt.seed = *g.seed;
    if (g.threads) opt.workers = std::max(2u, *g.threads);
    std::size_t failed = 0;
    run_acceptance(opt, [&](const CriterionResult& r) {
        failed += r.passed ? 0 : 1;
        if (g.format == Format::JsonLines)
            emit_record({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
        else
            std::cout << format_result(r) << std::endl;
    });
    return failed == 0 ? kExitOk : kExitStage;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"afftail: tails of affine-type stochastic recursions"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kToolVersion));

    Globals g;
    std::string format = "text";
    app.add_option("--seed", g.seed, "Master RNG seed");
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
    app.add_option("--output", g.output, "Output file (or directory for experiment)");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json-lines"}));

    const auto families = CLI::IsMember({"affine", "extremal", "letac", "maxzero", "max-zero"});

    std::string measure;
    auto* solve = app.add_subcommand("solve-alpha", "Solve E A^alpha = 1 for an atomic measure");
    solve->add_option("measure", measure, "Measure file")->required()->check(CLI::ExistingFile);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Draw samples from the stationary law, the perpetuity or max Pi_n");
    simulate->add_option("measure", sim.measure, "Measure file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--family", sim.family, "Map family")->check(families)->capture_default_str();
    simulate->add_option("--kind", sim.kind, "Batch kind")
        ->check(CLI::IsMember({"stationary", "perpetuity", "sup-pi"}))
        ->capture_default_str();
    simulate->add_option("--burn-in", sim.burn_in, "Burn-in steps (0: from E log A)")->capture_default_str();
    simulate->add_option("--samples", sim.samples, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--chains", sim.chains, "Independent RNG streams")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_flag("--binary", sim.binary, "Write the binary sample format (needs --output)");

    TailArgs tail;
    auto* tailcmd = app.add_subcommand("tail", "Tail diagnostics for a sample file");
    tailcmd->add_option("samples", tail.samples, "Sample file (text or binary)")->required()->check(CLI::ExistingFile);
    tailcmd->add_option("--alpha", tail.alpha, "Exponent for t^alpha P[X > t] (default: Hill estimate)");
    tailcmd->add_option("--k", tail.k, "Hill order statistics (default: sqrt(n))");
    tailcmd->add_option("--t-lo", tail.t_lo, "Grid start (default: 90th percentile of positive samples)");
    tailcmd->add_option("--t-hi", tail.t_hi, "Grid end (default: 99.9th percentile)");
    tailcmd->add_option("--n-grid", tail.n_grid, "Grid points")->capture_default_str();
    tailcmd->add_flag("--left", tail.left, "Analyze the left tail");

    std::string family = "affine";
    auto* crit = app.add_subcommand("criteria", "Closed-form positivity criteria for an atomic measure");
    crit->add_option("measure", measure, "Measure file")->required()->check(CLI::ExistingFile);
    crit->add_option("--family", family, "Map family")->check(families)->capture_default_str();

    std::string config;
    auto* exp = app.add_subcommand("experiment", "Run criteria, simulation and tail analysis end to end");
    exp->add_option("config", config, "Measure file with an [experiment] section")->required()->check(CLI::ExistingFile);

    std::vector<int> only;
    auto* verify = app.add_subcommand("verify", "Run the built-in acceptance suite");
    verify->add_option("--only", only, "Run only these criteria")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    g.format = format == "json-lines" ? Format::JsonLines : Format::Text;

    try {
        if (*solve) return cmd_solve_alpha(measure, g);
        if (*simulate) return cmd_simulate(sim, g);
        if (*tailcmd) return cmd_tail(tail, g);
        if (*crit) return cmd_criteria(measure, family, g);
        if (*exp) return cmd_experiment(config, g);
        if (*verify) return cmd_verify(only, g);
    } catch (const Error& e) {
        std::cerr << "afftail: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "afftail: " << e.what() << '\n';
        return kExitStage;
    }
    return kExitUsage;
}
