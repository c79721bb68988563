#pragma once
//! Text and JSON renderings of results, shared by the CLI and experiment
//! reports. Numbers are written in shortest round-trip form so that output is
//! byte-stable for identical inputs.

#include "afftail/cramer.hpp"
#include "afftail/criteria.hpp"
#include "afftail/engine.hpp"
#include "afftail/tailstats.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace afftail {

using ojson = nlohmann::ordered_json;

/// Shortest representation that parses back to the same double.
inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Extended reals: JSON has no infinity, so those become strings.
inline ojson ext(double x) {
    if (std::isfinite(x)) return x;
    return num(x);
}

template <typename T>
ojson opt_json(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<T, double>) return ext(*v);
    else return *v;
}

inline ojson to_json(const CramerRoot& r) {
    return {{"alpha", r.alpha}, {"residual", r.residual}, {"bracket", {r.bracket_lo, r.bracket_hi}}};
}

inline ojson to_json(const LetacConstants& k) {
    return {{"N1", ext(k.n1)}, {"N2", ext(k.n2)}, {"N3", ext(k.n3)}, {"N", ext(k.n)}};
}

inline ojson to_json(const GoldieResult& g) {
    ojson j{{"feasible", g.feasible}, {"strict_met", g.strict_met}, {"condition_met", g.condition_met()}};
    j["c_interval"] = g.feasible ? ojson{ext(g.c_lo), ext(g.c_hi)} : ojson(nullptr);
    j["witness_c"] = opt_json(g.witness_c);
    return j;
}

inline ojson to_json(const CriteriaVerdict& v) {
    ojson j;
    j["family"] = to_string(v.family);
    j["degenerate"] = v.degenerate;
    j["degenerate_point"] = opt_json(v.degenerate_point);
    j["alpha"] = v.alpha ? to_json(*v.alpha) : ojson(nullptr);
    j["mean_log_a"] = v.log_moments.mean_log_a;
    j["mean_log_plus_abs_b"] = v.log_moments.mean_log_plus_abs_b;
    if (v.support) {
        j["support"] = {{"upper", to_string(v.support->upper)},
                        {"lower_reflected", to_string(v.support->lower_reflected)},
                        {"overall", to_string(v.support->overall)},
                        {"witness", v.support->witness}};
    } else {
        j["support"] = nullptr;
    }
    j["support_class"] = to_string(v.support_class);
    j["c_plus_positive"] = opt_json(v.c_plus_positive);
    j["c_minus_positive"] = opt_json(v.c_minus_positive);
    j["letac"] = v.letac ? to_json(*v.letac) : ojson(nullptr);
    j["cl_positive"] = opt_json(v.cl_positive);
    j["cm_positive"] = opt_json(v.cm_positive);
    j["positivity_explanation"] = v.positivity_explanation;
    j["goldie"] = v.goldie ? to_json(*v.goldie) : ojson(nullptr);
    j["cv_flag"] = opt_json(v.cv_flag);
    j["halfline_violation"] = opt_json(v.halfline_violation);
    if (v.moment_ratio)
        j["moment_ratio"] = {{"s_inf", ext(v.moment_ratio->s_inf)},
                             {"limit_value", ext(v.moment_ratio->limit_value)},
                             {"condition_met", v.moment_ratio->condition_met}};
    else
        j["moment_ratio"] = nullptr;
    j["upper_bound"] = opt_json(v.upper_bound);
    j["lower_bound"] = opt_json(v.lower_bound);
    j["consistent"] = v.consistent;
    j["notes"] = v.notes;
    return j;
}

inline ojson to_json(const TailReport& r, bool with_grid = false) {
    ojson j{{"n", r.n},
            {"n_positive", r.n_positive},
            {"alpha_hill", r.alpha_hill},
            {"hill_se", r.hill_se},
            {"k", r.k_used},
            {"alpha_used", r.alpha_used},
            {"t_range", {r.t_lo, r.t_hi}},
            {"loglog_slope", ext(r.loglog_slope)},
            {"flatness_ratio", ext(r.flatness_ratio)},
            {"c_min", r.c_min},
            {"c_max", r.c_max},
            {"warnings", r.warnings}};
    if (with_grid) {
        ojson g = ojson::array();
        for (const auto& p : r.c_grid) g.push_back({{"t", p.t}, {"ccdf", p.ccdf}, {"t_pow_alpha_ccdf", p.scaled}});
        j["grid"] = std::move(g);
    }
    return j;
}

inline ojson batch_json(const SampleBatch& b) {
    ojson j{{"kind", to_string(b.kind)},
            {"family", to_string(b.family)},
            {"label", b.label},
            {"n", b.values.size()},
            {"seed", b.config.seed},
            {"burn_in", b.config.burn_in},
            {"chains", b.config.chains},
            {"config_digest", hex64(config_digest(b.config, b.kind, b.family, b.label))},
            {"values_digest", hex64(digest_values(b.values))}};
    if (!b.values.empty()) {
        const auto [lo, hi] = std::minmax_element(b.values.begin(), b.values.end());
        j["min"] = *lo;
        j["max"] = *hi;
    }
    if (b.kind == BatchKind::Stationary)
        j["coupling"] = {{"max_gap", b.coupling.max_gap},
                         {"apriori_bound", b.coupling.apriori_bound},
                         {"safety", b.coupling.safety},
                         {"ok", b.coupling.ok()}};
    if (b.kind != BatchKind::Stationary) {
        j["max_steps_hits"] = b.max_steps_hits;
        j["max_stop_step"] = b.max_stop_step;
    }
    if (b.kind == BatchKind::Perpetuity) j["worst_truncation"] = b.worst_truncation;
    return j;
}

namespace detail {

inline std::string yes_no(const std::optional<bool>& b) {
    if (!b) return "undecided";
    return *b ? "yes" : "no";
}

inline void row(std::ostream& os, const std::string& key, const std::string& value) {
    os << "  " << key;
    for (std::size_t i = key.size(); i < 24; ++i) os << ' ';
    os << value << '\n';
}

} // namespace detail

inline void write_text(std::ostream& os, const CriteriaVerdict& v) {
    using detail::row;
    row(os, "family", to_string(v.family));
    row(os, "degenerate", v.degenerate ? "yes (x* = " + num(*v.degenerate_point) + ")" : "no");
    row(os, "mean log a", num(v.log_moments.mean_log_a));
    if (v.alpha) row(os, "alpha", num(v.alpha->alpha) + "  (residual " + num(v.alpha->residual) + ")");
    if (v.support) {
        row(os, "support (upper)", to_string(v.support->upper));
        row(os, "support (lower)", std::string(to_string(v.support->lower_reflected)) + " on reflection");
        row(os, "support class", to_string(v.support_class));
    }
    if (v.c_plus_positive || v.c_minus_positive || v.family == FamilyKind::Affine) {
        row(os, "C+ > 0", detail::yes_no(v.c_plus_positive));
        row(os, "C- > 0", detail::yes_no(v.c_minus_positive));
    }
    if (v.letac) {
        row(os, "N1 / N2 / N3 / N",
            num(v.letac->n1) + " / " + num(v.letac->n2) + " / " + num(v.letac->n3) + " / " + num(v.letac->n));
    }
    if (v.cl_positive) row(os, "C_L > 0", detail::yes_no(v.cl_positive));
    if (v.cm_positive) row(os, "C_M > 0", detail::yes_no(v.cm_positive));
    if (!v.positivity_explanation.empty()) row(os, "because", v.positivity_explanation);
    if (v.goldie) {
        const auto& g = *v.goldie;
        row(os, "Goldie condition",
            g.feasible ? std::string(g.condition_met() ? "met" : "not met") + ", c in [" + num(g.c_lo) + ", " +
                             num(g.c_hi) + "]"
                       : "not met (no feasible c)");
    }
    if (v.cv_flag) row(os, "CV condition", *v.cv_flag ? "holds" : "fails");
    if (v.halfline_violation) row(os, "max(aN + b - N)", num(*v.halfline_violation));
    if (v.moment_ratio) row(os, "moment ratio limit", num(v.moment_ratio->limit_value));
    if (v.upper_bound) row(os, "support bounded above", num(*v.upper_bound));
    if (v.lower_bound) row(os, "support bounded below", num(*v.lower_bound));
    row(os, "consistent", v.consistent ? "yes" : "NO");
    for (const auto& n : v.notes) row(os, "note", n);
}

inline void write_text(std::ostream& os, const TailReport& r) {
    using detail::row;
    row(os, "samples", std::to_string(r.n) + " (" + std::to_string(r.n_positive) + " positive)");
    row(os, "Hill alpha", num(r.alpha_hill) + " +- " + num(r.hill_se) + "  (k = " + std::to_string(r.k_used) + ")");
    row(os, "alpha used", num(r.alpha_used));
    row(os, "t range", "[" + num(r.t_lo) + ", " + num(r.t_hi) + "]");
    row(os, "log-log slope", num(r.loglog_slope));
    row(os, "t^a P[X>t] min / max", num(r.c_min) + " / " + num(r.c_max));
    row(os, "flatness ratio", num(r.flatness_ratio));
    for (const auto& w : r.warnings) row(os, "warning", w);
}

/// CSV with columns t, ccdf, t_pow_alpha_ccdf.
inline void write_tail_csv(std::ostream& os, const std::vector<GridPoint>& grid) {
    os << "t,ccdf,t_pow_alpha_ccdf\n";
    for (const auto& p : grid) os << num(p.t) << ',' << num(p.ccdf) << ',' << num(p.scaled) << '\n';
}

} // namespace afftail
