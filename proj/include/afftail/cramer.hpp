#pragma once
//! Cramer exponent: the unique alpha > 0 with E A^alpha = 1.

#include "afftail/error.hpp"
#include "afftail/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace afftail {

/// s -> phi(s) = sum_i w_i a_i^s, evaluated as log-sum-exp over sorted atoms.
class MomentFunction {
public:
    explicit MomentFunction(const AtomicMeasure& m) {
        validate(m);
        for (const Atom& at : detail::sorted_atoms(m)) {
            log_w_.push_back(std::log(at.weight));
            log_a_.push_back(std::log(at.a));
        }
        // Weights are normalized within 1e-12; fold the residual into log_w so
        // that phi(0) == 1 exactly.
        const double lse0 = lse(0.0);
        for (double& lw : log_w_) lw -= lse0;
    }

    [[nodiscard]] double log_phi(double s) const { return s == 0.0 ? 0.0 : lse(s); }

    [[nodiscard]] double phi(double s) const { return std::exp(log_phi(s)); }

    /// d/ds log phi(s): the mean of log A under the tilted law w_i a_i^s / phi(s).
    [[nodiscard]] double dlog_phi(double s) const {
        const double base = lse(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < log_a_.size(); ++i)
            acc += std::exp(log_w_[i] + s * log_a_[i] - base) * log_a_[i];
        return acc;
    }

    /// phi'(s) = sum_i w_i a_i^s ln a_i.
    [[nodiscard]] double dphi(double s) const { return phi(s) * dlog_phi(s); }

    [[nodiscard]] double max_log_a() const {
        return *std::max_element(log_a_.begin(), log_a_.end());
    }

private:
    [[nodiscard]] double lse(double s) const {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < log_a_.size(); ++i) peak = std::max(peak, log_w_[i] + s * log_a_[i]);
        double acc = 0.0;
        for (std::size_t i = 0; i < log_a_.size(); ++i) acc += std::exp(log_w_[i] + s * log_a_[i] - peak);
        return peak + std::log(acc);
    }

    std::vector<double> log_w_;
    std::vector<double> log_a_;
};

struct CramerRoot {
    double alpha = 0.0;
    double residual = 0.0;  // |phi(alpha) - 1|
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

struct SolveOptions {
    double initial_upper = 1.0;  // first trial upper end of the bracket
};

inline CramerRoot solve_alpha(const AtomicMeasure& m, SolveOptions opts = {}) {
    const LogMoments lm = validate(m);
    if (!lm.has_expanding_atom)
        throw Error(ErrorCode::NoPositiveRoot, "no atom has a > 1; E A^s < 1 for every s > 0");
    if (!(lm.mean_log_a < 0.0))
        throw Error(ErrorCode::NotContracting, "E log A >= 0; no Cramer root with alpha > 0");
    if (!(opts.initial_upper > 0.0) || !std::isfinite(opts.initial_upper))
        throw Error(ErrorCode::InvalidArgument, "initial bracket end must be positive");

    const MomentFunction mf(m);
    const double cap = 700.0 / mf.max_log_a();

    double lo = 0.0;
    double hi = std::min(opts.initial_upper, cap);
    while (mf.log_phi(hi) <= 0.0) {
        if (hi >= cap)
            throw Error(ErrorCode::Overflow, "phi(s) stays below 1 up to s = 700 / max ln a");
        lo = hi;
        hi = std::min(2.0 * hi, cap);
    }
    // phi is log-convex with phi(0) = 1, phi'(0) < 0, so log phi < 0 on (0, alpha).
    auto width_ok = [&] { return hi - lo <= 1e-12 * (1.0 + lo); };
    for (int it = 0; it < 200 && !width_ok(); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (mf.log_phi(mid) < 0.0) lo = mid; else hi = mid;
    }

    // Newton on log phi, kept inside the bracket; the best evaluated point wins.
    double s = 0.5 * (lo + hi);
    double best_s = s;
    double best_g = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 20; ++it) {
        const double g = mf.log_phi(s);
        if (std::abs(g) < best_g) {
            best_g = std::abs(g);
            best_s = s;
        }
        if (g == 0.0) break;
        if (g < 0.0) lo = std::max(lo, s); else hi = std::min(hi, s);
        const double dg = mf.dlog_phi(s);
        double next = s - g / dg;
        if (!(dg > 0.0) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        next = std::clamp(next, lo, hi);
        if (next == s) break;
        s = next;
    }
    s = best_s;

    CramerRoot root;
    root.alpha = s;
    root.residual = std::abs(std::expm1(mf.log_phi(s)));
    root.bracket_lo = lo;
    root.bracket_hi = hi;
    return root;
}

inline CramerRoot solve_alpha(const Driver& d, SolveOptions opts = {}) {
    return solve_alpha(require_atomic(d, "solve_alpha"), opts);
}

/// Moment-ratio conditions for heavy tails of Lipschitz recursions. For atomic
/// measures E A^s < infinity for all s, so only the s_inf = infinity branch is
/// applicable and its limit is max|b| / max a.
struct MomentRatioReport {
    double s_inf = std::numeric_limits<double>::infinity();
    double limit_value = 0.0;
    bool condition_met = false;
    bool finite_s_inf_branch_applicable = false;
};

inline MomentRatioReport moment_ratio_conditions(const AtomicMeasure& m) {
    validate(m);
    double max_abs_b = 0.0;
    double max_a = 0.0;
    for (const Atom& at : m.atoms) {
        max_abs_b = std::max(max_abs_b, std::abs(at.b));
        max_a = std::max(max_a, at.a);
    }
    MomentRatioReport r;
    r.limit_value = max_abs_b / max_a;
    r.condition_met = std::isfinite(r.limit_value);
    return r;
}

inline MomentRatioReport moment_ratio_conditions(const Driver& d) {
    return moment_ratio_conditions(require_atomic(d, "moment_ratio_conditions"));
}

} // namespace afftail
