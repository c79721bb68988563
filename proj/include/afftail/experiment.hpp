#pragma once
//! End-to-end experiments: criteria, Cramer exponent, stationary sampling,
//! tail analysis on both sides, forward/backward comparison (affine only) and
//! the running maximum of the product walk, written as deterministic report
//! files.
//!
//! A config is a measure file with an optional `[experiment]` section:
//!
//!   [experiment]
//!   family = "affine"        # affine | extremal | letac | maxzero
//!   samples = 100000
//!   seed = 7
//!   output = "out"           # relative to the config file
//!
//! Output files:
//!   report.json          machine-readable summary record
//!   report.txt           the same, as tables
//!   manifest.txt         every written file with its FNV-1a digest, plus skip notes
//!   ccdf.csv             t,ccdf            whole stationary distribution
//!   tail_constant.csv    t,ccdf,t_pow_alpha_ccdf   right tail (absent when skipped)
//!   tail_constant_left.csv  same for the left tail, t = |x|
//!   sup_pi_tail.csv      t,ccdf,t_pow_alpha_ccdf   tail of max_n Pi_n

#include "afftail/criteria.hpp"
#include "afftail/engine.hpp"
#include "afftail/error.hpp"
#include "afftail/io.hpp"
#include "afftail/measure.hpp"
#include "afftail/report.hpp"
#include "afftail/tailstats.hpp"
#include "afftail/thresholds.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace afftail {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
    Driver driver;
    nlohmann::json measure_doc;  // the driver part of the document, for the digest
    FamilyKind family = FamilyKind::Affine;
    SimConfig sim;
    TailOptions tail;
    std::size_t backward_samples = 0;  // 0: same as sim.n_samples
    std::size_t sup_pi_samples = 0;    // 0: same as sim.n_samples
    std::filesystem::path output_dir;  // empty: do not write files
    bool write_text = true;
    bool write_json = true;

    ExperimentConfig() { sim.n_samples = 100000; }
};

namespace detail {

inline std::uint64_t get_count(const nlohmann::json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw Error(ErrorCode::Parse, "[experiment] " + key + " must be a non-negative integer");
}

inline double get_real(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::Parse, "[experiment] " + key + " must be a number");
    return v.get<double>();
}

} // namespace detail

/// Build a config from a parsed document. Relative paths resolve against base_dir.
inline ExperimentConfig experiment_from_document(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                                 const std::string& stem) {
    ExperimentConfig cfg;
    const nlohmann::json exp = doc.contains("experiment") ? doc.at("experiment") : nlohmann::json::object();
    if (!exp.is_object()) throw Error(ErrorCode::Parse, "[experiment] must be a table");

    nlohmann::json measure_doc = doc;
    measure_doc.erase("experiment");
    if (exp.contains("measure")) {
        if (measure_doc.contains("atoms") || measure_doc.contains("parametric"))
            throw Error(ErrorCode::Parse, "measure given both inline and via [experiment] measure");
        const std::filesystem::path mp = base_dir / exp.at("measure").get<std::string>();
        measure_doc = parse_toml(read_text_file(mp));
        cfg.driver = driver_from_document(measure_doc, mp.stem().string());
    } else {
        cfg.driver = driver_from_document(measure_doc, stem);
    }
    cfg.measure_doc = measure_doc;

    static const std::set<std::string> known = {
        "family", "samples", "burn_in", "chains", "seed", "threads", "truncation_eps", "pi_floor", "max_steps",
        "x0", "hill_k", "t_lo", "t_hi", "n_grid", "backward_samples", "sup_pi_samples", "output", "formats",
        "measure"};
    for (const auto& [k, v] : exp.items()) {
        if (!known.count(k)) throw Error(ErrorCode::Parse, "[experiment] unknown key '" + k + "'");
        if (k == "family") cfg.family = parse_family(v.get<std::string>());
        else if (k == "samples") cfg.sim.n_samples = detail::get_count(v, k);
        else if (k == "burn_in") cfg.sim.burn_in = detail::get_count(v, k);
        else if (k == "chains") cfg.sim.chains = detail::get_count(v, k);
        else if (k == "seed") cfg.sim.seed = detail::get_count(v, k);
        else if (k == "threads") cfg.sim.threads = static_cast<unsigned>(detail::get_count(v, k));
        else if (k == "truncation_eps") cfg.sim.truncation_eps = detail::get_real(v, k);
        else if (k == "pi_floor") cfg.sim.pi_floor = detail::get_real(v, k);
        else if (k == "max_steps") cfg.sim.max_steps = detail::get_count(v, k);
        else if (k == "x0") cfg.sim.x0 = detail::get_real(v, k);
        else if (k == "hill_k") cfg.tail.hill_k = detail::get_count(v, k);
        else if (k == "t_lo") cfg.tail.t_lo = detail::get_real(v, k);
        else if (k == "t_hi") cfg.tail.t_hi = detail::get_real(v, k);
        else if (k == "n_grid") cfg.tail.n_grid = detail::get_count(v, k);
        else if (k == "backward_samples") cfg.backward_samples = detail::get_count(v, k);
        else if (k == "sup_pi_samples") cfg.sup_pi_samples = detail::get_count(v, k);
        else if (k == "output") cfg.output_dir = base_dir / v.get<std::string>();
        else if (k == "formats") {
            if (!v.is_array()) throw Error(ErrorCode::Parse, "[experiment] formats must be an array");
            cfg.write_text = cfg.write_json = false;
            for (const auto& f : v) {
                const auto s = f.get<std::string>();
                if (s == "text") cfg.write_text = true;
                else if (s == "json") cfg.write_json = true;
                else throw Error(ErrorCode::Parse, "[experiment] unknown format '" + s + "'");
            }
        }
    }
    if (cfg.sim.n_samples < 1) throw Error(ErrorCode::Parse, "[experiment] samples must be >= 1");
    validate(cfg.sim);
    if (cfg.output_dir.empty()) cfg.output_dir = base_dir / (stem + "-report");
    cfg.output_dir = std::filesystem::absolute(cfg.output_dir).lexically_normal();
    return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    const auto abs = std::filesystem::absolute(path);
    return experiment_from_document(parse_toml(read_text_file(abs)), abs.parent_path(), abs.stem().string());
}

/// Canonical record of everything that determines the results. Thread count
/// and output location are excluded: neither changes any number.
inline ojson config_record(const ExperimentConfig& c) {
    ojson j;
    j["measure"] = ojson::parse(c.measure_doc.dump());
    j["family"] = to_string(c.family);
    j["samples"] = c.sim.n_samples;
    j["burn_in"] = c.sim.burn_in;
    j["chains"] = c.sim.chains;
    j["seed"] = c.sim.seed;
    j["truncation_eps"] = c.sim.truncation_eps;
    j["pi_floor"] = c.sim.pi_floor;
    j["max_steps"] = c.sim.max_steps;
    j["x0"] = c.sim.x0;
    j["hill_k"] = opt_json(c.tail.hill_k);
    j["t_lo"] = opt_json(c.tail.t_lo);
    j["t_hi"] = opt_json(c.tail.t_hi);
    j["n_grid"] = c.tail.n_grid;
    j["backward_samples"] = c.backward_samples;
    j["sup_pi_samples"] = c.sup_pi_samples;
    return j;
}

inline std::uint64_t experiment_digest(const ExperimentConfig& c) {
    const std::string s = config_record(c).dump();
    return fnv1a(s.data(), s.size());
}

struct TailSide {
    std::string name;
    std::optional<TailReport> report;
    std::optional<std::string> skipped;  // reason, when the side was not analyzed
};

struct AgreementLine {
    std::string side;
    std::string analytic;   // positive | zero | undecided | equal in law
    std::string empirical;
    std::optional<bool> consistent;  // unset: nothing to compare against
};

struct ExperimentReport {
    std::string label;
    FamilyKind family = FamilyKind::Affine;
    std::optional<CriteriaVerdict> verdict;
    std::optional<double> alpha;
    std::string alpha_source;  // cramer | lognormal | none
    std::optional<ojson> stationary;
    std::optional<ojson> backward;
    std::optional<ojson> sup_pi;
    std::optional<double> stationary_min, stationary_max, sup_pi_min;
    std::vector<CcdfPoint> distribution;
    TailSide right{"right", {}, {}};
    TailSide left{"left", {}, {}};
    TailSide sup_pi_tail{"sup_pi", {}, {}};
    std::optional<double> ks;
    std::optional<double> ks_threshold;
    std::vector<AgreementLine> agreement;
    std::vector<std::string> stages_completed;
    std::optional<std::string> failed_stage;
    std::string failure;
    bool short_circuited = false;
    std::vector<std::string> notes;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    std::string tool_version = kToolVersion;
    ojson config;

    [[nodiscard]] bool ok() const noexcept { return !failed_stage.has_value(); }
};

namespace detail {

/// Quantile levels for the whole-distribution CCDF: a uniform sweep plus a
/// log sweep into the upper tail.
inline std::vector<CcdfPoint> distribution_curve(const std::vector<double>& values) {
    const auto sorted = sorted_copy(values);
    std::vector<double> levels;
    for (int i = 0; i < 100; ++i) levels.push_back(i / 100.0);
    const double top = std::log10(static_cast<double>(sorted.size()));
    for (double e = 2.0; e <= top + 1e-12; e += 0.1) levels.push_back(1.0 - std::pow(10.0, -e));
    std::vector<double> grid;
    for (double q : levels) grid.push_back(quantile_sorted(sorted, q));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return empirical_ccdf(sorted, grid);
}

/// Closed-form Cramer exponent for the lognormal driver: E A^s = exp(s mu + s^2 sigma^2 / 2).
inline std::optional<double> lognormal_alpha(const ParametricDriver& p) {
    if (p.mu_log_a < 0.0 && p.sigma_log_a > 0.0) return -2.0 * p.mu_log_a / (p.sigma_log_a * p.sigma_log_a);
    return std::nullopt;
}

template <typename Fn>
bool run_stage(ExperimentReport& r, const char* name, Fn&& fn) {
    try {
        fn();
        r.stages_completed.emplace_back(name);
        return true;
    } catch (const Error& e) {
        r.failed_stage = name;
        r.failure = std::string(to_string(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        r.failed_stage = name;
        r.failure = e.what();
    }
    return false;
}

inline bool tail_is_flat(const TailReport& t) {
    return t.flatness_ratio <= thresholds::kFlatnessMax && t.c_min >= thresholds::kMinToMaxRatio * t.c_max;
}

inline std::string tail_summary(const TailReport& t) {
    return "flatness " + num(t.flatness_ratio) + " (<= " + num(thresholds::kFlatnessMax) + "), min/max " +
           num(t.c_max > 0 ? t.c_min / t.c_max : 0.0) + " (>= " + num(thresholds::kMinToMaxRatio) + ")";
}

inline std::optional<bool> analytic_right(const CriteriaVerdict& v) {
    if (v.degenerate) return false;
    switch (v.family) {
    case FamilyKind::Affine: return v.c_plus_positive;
    case FamilyKind::MaxZero: return v.cm_positive;
    default: return v.cl_positive;
    }
}

inline std::optional<bool> analytic_left(const CriteriaVerdict& v) {
    if (v.degenerate) return false;
    if (v.family == FamilyKind::Affine) return v.c_minus_positive;
    return false;  // bounded below by min(a c + b)
}

inline std::string claim(const std::optional<bool>& b) {
    if (!b) return "undecided";
    return *b ? "positive" : "zero";
}

inline AgreementLine side_agreement(const TailSide& side, const std::optional<bool>& analytic,
                                    const std::optional<double>& bound, const std::optional<double>& extreme) {
    AgreementLine line{side.name, claim(analytic), "", std::nullopt};
    if (side.report) {
        line.empirical = tail_summary(*side.report);
        if (analytic) line.consistent = *analytic == tail_is_flat(*side.report);
        if (analytic && !*analytic) line.empirical += "; analyzed although a bound was expected";
    } else if (bound && extreme) {
        const bool inside = *extreme <= *bound + thresholds::bound_slack(*bound);
        line.empirical = std::string(side.name == "left" ? "min" : "max") + " sample " +
                         num(side.name == "left" ? -*extreme : *extreme) + (inside ? " respects" : " VIOLATES") +
                         " bound " + num(side.name == "left" ? -*bound : *bound);
        line.consistent = analytic ? std::optional<bool>(inside && !*analytic) : std::optional<bool>(inside);
    } else {
        line.empirical = side.skipped ? "not analyzed: " + *side.skipped : "not analyzed";
    }
    return line;
}

} // namespace detail

inline void write_report_files(const ExperimentReport& r, const ExperimentConfig& cfg);

/// Runs every stage, stopping at the first failure. The returned report keeps
/// everything produced before the failure; files are written either way when
/// an output directory is set.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    ExperimentReport r;
    r.label = label_of(cfg.driver);
    r.family = cfg.family;
    r.seed = cfg.sim.seed;
    r.config = config_record(cfg);
    r.config_digest = experiment_digest(cfg);
    const auto* atomic = std::get_if<AtomicMeasure>(&cfg.driver);

    auto finish = [&]() -> ExperimentReport& {
        if (!cfg.output_dir.empty()) write_report_files(r, cfg);
        return r;
    };

    if (!detail::run_stage(r, "criteria", [&] {
            if (atomic) {
                r.verdict = full_verdict(*atomic, cfg.family);
            } else {
                r.notes.push_back("criteria skipped: they apply to atomic measures only");
            }
        }))
        return finish();
    if (r.verdict && r.verdict->degenerate) {
        r.short_circuited = true;
        r.notes.push_back("degenerate measure: stationary law is the point mass at " +
                          num(*r.verdict->degenerate_point) + "; later stages skipped");
        return finish();
    }

    detail::run_stage(r, "alpha", [&] {
        if (r.verdict && r.verdict->alpha) {
            r.alpha = r.verdict->alpha->alpha;
            r.alpha_source = "cramer";
        } else if (const auto* p = std::get_if<ParametricDriver>(&cfg.driver)) {
            r.alpha = detail::lognormal_alpha(*p);
            r.alpha_source = r.alpha ? "lognormal" : "none";
        } else {
            r.alpha_source = "none";
        }
        if (!r.alpha) r.notes.push_back("no Cramer exponent: tail constants use the Hill estimate");
    });

    std::vector<double> values;
    if (!detail::run_stage(r, "simulate", [&] {
            const auto batch = sample_stationary(cfg.family, cfg.driver, cfg.sim);
            r.stationary = batch_json(batch);
            const auto [lo, hi] = std::minmax_element(batch.values.begin(), batch.values.end());
            r.stationary_min = *lo;
            r.stationary_max = *hi;
            if (!batch.coupling.ok()) r.notes.push_back("coupling diagnostic exceeds its bound; burn-in may be short");
            r.distribution = detail::distribution_curve(batch.values);
            values = batch.values;
        }))
        return finish();

    TailOptions topt = cfg.tail;
    topt.alpha = r.alpha;
    const auto upper = r.verdict ? r.verdict->upper_bound : std::nullopt;
    const auto lower = r.verdict ? r.verdict->lower_bound : std::nullopt;

    if (!detail::run_stage(r, "tail-right", [&] {
            if (upper) {
                r.right.skipped = "support bounded above at " + num(*upper);
                return;
            }
            r.right.report = tail_report(values, topt);
        }))
        return finish();

    if (!detail::run_stage(r, "tail-left", [&] {
            if (lower) {
                r.left.skipped = "support bounded below at " + num(*lower);
                return;
            }
            TailOptions lopt = topt;
            lopt.t_lo.reset();
            lopt.t_hi.reset();
            r.left.report = tail_report(negated(values), lopt);
        }))
        return finish();

    if (cfg.family == FamilyKind::Affine) {
        if (!detail::run_stage(r, "backward", [&] {
                SimConfig bc = cfg.sim;
                bc.seed = derive_subseed(cfg.sim.seed, 0xBAC4);
                bc.n_samples = cfg.backward_samples ? cfg.backward_samples : cfg.sim.n_samples;
                const auto batch = sample_perpetuity(cfg.driver, bc);
                r.backward = batch_json(batch);
                if (batch.max_steps_hits > 0)
                    r.notes.push_back(std::to_string(batch.max_steps_hits) +
                                      " perpetuity draws hit max_steps before the truncation threshold");
                r.ks = ks_distance(values, batch.values);
                r.ks_threshold = thresholds::ks_threshold(values.size(), batch.values.size());
            }))
            return finish();
    }

    if (!detail::run_stage(r, "sup-pi", [&] {
            if (!r.alpha) {
                r.sup_pi_tail.skipped = "no Cramer exponent; max Pi_n is bounded";
                return;
            }
            SimConfig sc = cfg.sim;
            sc.seed = derive_subseed(cfg.sim.seed, 0x5B91);
            sc.n_samples = cfg.sup_pi_samples ? cfg.sup_pi_samples : cfg.sim.n_samples;
            const auto batch = sample_sup_pi(cfg.driver, sc);
            r.sup_pi = batch_json(batch);
            r.sup_pi_min = *std::min_element(batch.values.begin(), batch.values.end());
            TailOptions sopt;
            sopt.alpha = r.alpha;
            sopt.n_grid = cfg.tail.n_grid;
            r.sup_pi_tail.report = tail_report(batch.values, sopt);
        }))
        return finish();

    // Agreement: empirical diagnostics are compared with, never substituted
    // for, the analytic verdicts.
    const auto ar = r.verdict ? detail::analytic_right(*r.verdict) : std::nullopt;
    const auto al = r.verdict ? detail::analytic_left(*r.verdict) : std::nullopt;
    r.agreement.push_back(detail::side_agreement(r.right, ar, upper, r.stationary_max));
    std::optional<double> neg_lower, neg_min;
    if (lower) neg_lower = -*lower;
    if (r.stationary_min) neg_min = -*r.stationary_min;
    r.agreement.push_back(detail::side_agreement(r.left, al, neg_lower, neg_min));
    if (r.ks) {
        const bool ok = *r.ks <= *r.ks_threshold;
        r.agreement.push_back({"forward-backward", "equal in law",
                               "KS " + num(*r.ks) + (ok ? " <= " : " > ") + num(*r.ks_threshold), ok});
    }
    if (r.sup_pi_tail.report) {
        const bool ok = detail::tail_is_flat(*r.sup_pi_tail.report) && r.sup_pi_min && *r.sup_pi_min > 0.0;
        r.agreement.push_back(
            {"sup_pi", "positive", detail::tail_summary(*r.sup_pi_tail.report) + ", min " + num(*r.sup_pi_min), ok});
    }
    for (const auto& a : r.agreement)
        if (a.consistent && !*a.consistent) r.notes.push_back("flagged: " + a.side + " diagnostics disagree with the analytic verdict");
    return finish();
}

inline ojson to_json(const ExperimentReport& r) {
    ojson j;
    j["label"] = r.label;
    j["family"] = to_string(r.family);
    j["status"] = r.ok() ? "ok" : "failed";
    j["failed_stage"] = opt_json(r.failed_stage);
    if (r.failed_stage) j["failure"] = r.failure;
    j["stages_completed"] = r.stages_completed;
    j["short_circuited"] = r.short_circuited;
    j["criteria"] = r.verdict ? to_json(*r.verdict) : ojson(nullptr);
    j["alpha"] = opt_json(r.alpha);
    j["alpha_source"] = r.alpha_source;
    j["stationary"] = r.stationary ? *r.stationary : ojson(nullptr);
    for (const TailSide* s : {&r.right, &r.left, &r.sup_pi_tail}) {
        ojson t;
        if (s->report) t = to_json(*s->report);
        t["skipped"] = opt_json(s->skipped);
        j["tail_" + s->name] = t;
    }
    j["backward"] = r.backward ? *r.backward : ojson(nullptr);
    j["ks"] = opt_json(r.ks);
    j["ks_threshold"] = opt_json(r.ks_threshold);
    j["sup_pi"] = r.sup_pi ? *r.sup_pi : ojson(nullptr);
    ojson ag = ojson::array();
    for (const auto& a : r.agreement)
        ag.push_back({{"side", a.side}, {"analytic", a.analytic}, {"empirical", a.empirical},
                      {"consistent", opt_json(a.consistent)}});
    j["agreement"] = ag;
    j["notes"] = r.notes;
    j["provenance"] = {{"seed", r.seed},
                       {"config_digest", hex64(r.config_digest)},
                       {"tool_version", r.tool_version},
                       {"config", r.config}};
    return j;
}

inline void write_text(std::ostream& os, const ExperimentReport& r) {
    os << "experiment: " << r.label << " (" << to_string(r.family) << ")\n";
    os << "status: " << (r.ok() ? "ok" : "failed at stage '" + *r.failed_stage + "': " + r.failure) << "\n\n";
    if (r.verdict) {
        os << "criteria\n";
        write_text(os, *r.verdict);
        os << '\n';
    }
    if (r.alpha) os << "alpha used: " << num(*r.alpha) << " (" << r.alpha_source << ")\n\n";
    if (r.stationary) {
        os << "stationary batch\n";
        detail::row(os, "samples", std::to_string(r.stationary->at("n").get<std::size_t>()));
        detail::row(os, "min / max", num(*r.stationary_min) + " / " + num(*r.stationary_max));
        detail::row(os, "digest", r.stationary->at("values_digest").get<std::string>());
        os << '\n';
    }
    for (const TailSide* s : {&r.right, &r.left, &r.sup_pi_tail}) {
        if (!s->report && !s->skipped) continue;
        os << s->name << " tail\n";
        if (s->report) write_text(os, *s->report);
        else detail::row(os, "skipped", *s->skipped);
        os << '\n';
    }
    if (r.ks) os << "forward/backward KS: " << num(*r.ks) << " (threshold " << num(*r.ks_threshold) << ")\n\n";
    if (!r.agreement.empty()) {
        os << "agreement\n";
        for (const auto& a : r.agreement) {
            const std::string verdict = !a.consistent ? "n/a" : (*a.consistent ? "consistent" : "DISAGREES");
            detail::row(os, a.side, a.analytic + " | " + a.empirical + " | " + verdict);
        }
        os << '\n';
    }
    for (const auto& n : r.notes) os << "note: " << n << '\n';
    os << "seed " << r.seed << ", config digest " << hex64(r.config_digest) << ", afftail " << r.tool_version
       << '\n';
}

namespace detail {

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
    return content;
}

} // namespace detail

/// Writes the CSV plot files for whatever parts of the report exist and
/// returns (file name, content) for each one written.
inline std::vector<std::pair<std::string, std::string>> emit_plotdata(const ExperimentReport& r,
                                                                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        written.emplace_back(name, detail::write_file(dir / name, content));
    };
    if (!r.distribution.empty()) {
        std::ostringstream os;
        os << "t,ccdf\n";
        for (const auto& p : r.distribution) os << num(p.t) << ',' << num(p.ccdf) << '\n';
        emit("ccdf.csv", os.str());
    }
    const std::pair<const TailSide*, const char*> files[] = {
        {&r.right, "tail_constant.csv"}, {&r.left, "tail_constant_left.csv"}, {&r.sup_pi_tail, "sup_pi_tail.csv"}};
    for (const auto& [side, name] : files) {
        if (!side->report) {
            std::filesystem::remove(dir / name);
            continue;
        }
        std::ostringstream os;
        write_tail_csv(os, side->report->c_grid);
        emit(name, os.str());
    }
    return written;
}

inline void write_report_files(const ExperimentReport& r, const ExperimentConfig& cfg) {
    const auto& dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    auto written = emit_plotdata(r, dir);
    if (cfg.write_json) written.emplace_back("report.json", detail::write_file(dir / "report.json", to_json(r).dump(2) + "\n"));
    if (cfg.write_text) {
        std::ostringstream os;
        write_text(os, r);
        written.emplace_back("report.txt", detail::write_file(dir / "report.txt", os.str()));
    }
    std::ostringstream m;
    m << "# afftail " << r.tool_version << " seed " << r.seed << " config " << hex64(r.config_digest) << '\n';
    m << "# file fnv1a\n";
    std::sort(written.begin(), written.end());
    for (const auto& [name, content] : written) m << name << ' ' << hex64(fnv1a(content.data(), content.size())) << '\n';
    if (r.right.skipped) m << "# tail_constant.csv skipped: right tail " << *r.right.skipped << '\n';
    if (r.left.skipped) m << "# tail_constant_left.csv skipped: left tail " << *r.left.skipped << '\n';
    if (r.sup_pi_tail.skipped) m << "# sup_pi_tail.csv skipped: " << *r.sup_pi_tail.skipped << '\n';
    if (r.short_circuited) m << "# degenerate measure: only criteria were evaluated\n";
    if (r.failed_stage) m << "# stage '" << *r.failed_stage << "' failed: " << r.failure << '\n';
    detail::write_file(dir / "manifest.txt", m.str());
}

} // namespace afftail
