#pragma once
//! Closed-form criteria for positivity of tail constants over atomic driving
//! measures: fixed points, support classification of the affine recursion,
//! the Letac constants N1/N2/N3 and the sufficient conditions of Goldie and of
//! Collamore-Vidyashankar.

#include "afftail/cramer.hpp"
#include "afftail/engine.hpp"
#include "afftail/error.hpp"
#include "afftail/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace afftail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct FixedPoint {
    double value = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// x(a, b) = b / (1 - a), the fixed point of x -> a x + b.
inline FixedPoint fixed_point(double a, double b) {
    if (is_unit(a)) {
        if (std::abs(b) <= kAbsTol)
            throw Error(ErrorCode::NoFixedPoint, "a = 1, b = 0: identity map, every point is fixed");
        throw Error(ErrorCode::NoFixedPoint, "a = 1, b != 0: translation has no fixed point");
    }
    return {b / (1.0 - a), a, b};
}

enum class SupportClass {
    HalfLineUp,
    HalfLineDown,
    WholeLineCandidate,
    BoundedAbove,
    UnboundedViaA1Bpos,
    Indeterminate,
};

inline const char* to_string(SupportClass s) noexcept {
    switch (s) {
    case SupportClass::HalfLineUp: return "HalfLineUp";
    case SupportClass::HalfLineDown: return "HalfLineDown";
    case SupportClass::WholeLineCandidate: return "WholeLineCandidate";
    case SupportClass::BoundedAbove: return "BoundedAbove";
    case SupportClass::UnboundedViaA1Bpos: return "UnboundedViaA1Bpos";
    case SupportClass::Indeterminate: return "Indeterminate";
    }
    return "Unknown";
}

struct SupportClassification {
    SupportClass upper = SupportClass::Indeterminate;
    // Upper classification of the reflected measure (a, -b): HalfLineUp there
    // means the original support contains a half-line (-inf, c].
    SupportClass lower_reflected = SupportClass::Indeterminate;
    SupportClass overall = SupportClass::Indeterminate;
    std::string witness;
};

namespace detail {

inline bool unbounded(SupportClass s) {
    return s == SupportClass::HalfLineUp || s == SupportClass::UnboundedViaA1Bpos;
}

inline bool strictly_less(double x, double y) { return x < y && !approx_equal(x, y); }

/// Upper-tail classification of the affine support.
inline SupportClass classify_upper(const std::vector<Atom>& atoms, std::string* witness) {
    for (const Atom& at : atoms) {
        if (is_unit(at.a) && at.b > 0.0) {
            if (witness) *witness = "atom with a = 1, b = " + std::to_string(at.b) + " > 0";
            return SupportClass::UnboundedViaA1Bpos;
        }
    }
    bool any_exp = false, any_con = false;
    for (const Atom& e : atoms) {
        if (is_unit(e.a)) continue;
        (e.a > 1.0 ? any_exp : any_con) = true;
    }
    if (!any_exp || !any_con) {
        if (witness) *witness = any_exp ? "no contracting atom" : "no expanding atom";
        return SupportClass::Indeterminate;
    }
    for (const Atom& e : atoms) {
        if (is_unit(e.a) || e.a < 1.0) continue;
        for (const Atom& c : atoms) {
            if (is_unit(c.a) || c.a > 1.0) continue;
            const double xe = e.b / (1.0 - e.a);
            const double xc = c.b / (1.0 - c.a);
            if (strictly_less(xe, xc)) {
                if (witness) {
                    std::ostringstream os;
                    os.precision(10);
                    os << "x(" << e.a << "," << e.b << ") = " << xe << " < x(" << c.a << "," << c.b
                       << ") = " << xc;
                    *witness = os.str();
                }
                return SupportClass::HalfLineUp;
            }
        }
    }
    if (witness) *witness = "every expanding fixed point >= every contracting fixed point";
    return SupportClass::BoundedAbove;
}

inline std::vector<Atom> reflect(const std::vector<Atom>& atoms) {
    std::vector<Atom> out = atoms;
    for (Atom& at : out) at.b = -at.b;
    return out;
}

} // namespace detail

inline SupportClassification affine_support_classification(const AtomicMeasure& m) {
    validate(m);
    if (degeneracy_check(m))
        throw Error(ErrorCode::InvalidArgument,
                    "degenerate measure: stationary law is the common fixed point");
    SupportClassification r;
    r.upper = detail::classify_upper(m.atoms, &r.witness);
    r.lower_reflected = detail::classify_upper(detail::reflect(m.atoms), nullptr);
    const bool up = detail::unbounded(r.upper);
    const bool down = detail::unbounded(r.lower_reflected);
    if (up && down) {
        r.overall = SupportClass::WholeLineCandidate;
    } else if (up) {
        r.overall = r.upper;
    } else if (r.upper == SupportClass::BoundedAbove) {
        r.overall = down ? SupportClass::HalfLineDown : SupportClass::BoundedAbove;
    } else {
        r.overall = SupportClass::Indeterminate;
    }
    return r;
}

/// Extended-real constants of the Letac model. Atoms with a = 1 do not enter
/// N2 or N3.
struct LetacConstants {
    double n1 = -kInf;  // max a c + b
    double n2 = -kInf;  // max x(a, b) over a < 1; -inf when absent
    double n3 = kInf;   // min x(a, b) over a > 1; +inf when absent
    double n = -kInf;   // max(n1, n2)
};

inline void require_c(const AtomicMeasure& m, const char* what) {
    validate(m);
    if (!m.has_c())
        throw Error(ErrorCode::InvalidMeasure, std::string(what) + ": every atom needs a c component");
}

inline LetacConstants letac_constants(const AtomicMeasure& m) {
    require_c(m, "letac_constants");
    LetacConstants k;
    for (const Atom& at : m.atoms) {
        k.n1 = std::max(k.n1, at.a * *at.c + at.b);
        if (is_unit(at.a)) continue;
        const double x = at.b / (1.0 - at.a);
        if (at.a < 1.0) k.n2 = std::max(k.n2, x);
        else k.n3 = std::min(k.n3, x);
    }
    k.n = std::max(k.n1, k.n2);
    return k;
}

struct PositivityVerdict {
    bool positive = false;
    bool via_a1_bpos = false;
    bool cramer_preconditions = false;
    std::string explanation;
};

namespace detail {

inline std::string fmt(double x) {
    if (x == kInf) return "+inf";
    if (x == -kInf) return "-inf";
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

inline std::string atom_str(const Atom& at) {
    std::string s = "(" + fmt(at.a) + ", " + fmt(at.b);
    if (at.c) s += ", " + fmt(*at.c);
    return s + ")";
}

inline bool cramer_ok(const LogMoments& lm) {
    return lm.mean_log_a < 0.0 && (lm.has_expanding_atom || lm.has_a1_bpos);
}

inline std::string cramer_note(const LogMoments& lm) {
    if (cramer_ok(lm)) return "";
    if (!(lm.mean_log_a < 0.0)) return " [Cramer preconditions fail: E log A >= 0]";
    return " [Cramer preconditions fail: no atom with a > 1]";
}

} // namespace detail

/// C_L > 0 iff P[A = 1, B > 0] > 0, or otherwise iff N3 < max(N1, N2).
inline PositivityVerdict letac_positivity(const AtomicMeasure& m) {
    const LogMoments lm = validate(m);
    const LetacConstants k = letac_constants(m);
    PositivityVerdict v;
    v.cramer_preconditions = detail::cramer_ok(lm);
    for (const Atom& at : m.atoms) {
        if (is_unit(at.a) && at.b > 0.0) {
            v.positive = true;
            v.via_a1_bpos = true;
            v.explanation = "atom " + detail::atom_str(at) + " has a = 1, b > 0: support unbounded above";
            return v;
        }
    }
    v.positive = k.n3 < k.n;
    std::string witness_exp, witness_n;
    for (const Atom& at : m.atoms) {
        if (!is_unit(at.a) && at.a > 1.0 && at.b / (1.0 - at.a) == k.n3) witness_exp = detail::atom_str(at);
        if (at.a * *at.c + at.b == k.n) witness_n = detail::atom_str(at) + " via a c + b";
        if (!is_unit(at.a) && at.a < 1.0 && at.b / (1.0 - at.a) == k.n) witness_n = detail::atom_str(at) + " via x(a, b)";
    }
    v.explanation = "N3 = " + detail::fmt(k.n3) + (witness_exp.empty() ? "" : " from " + witness_exp) +
                    (v.positive ? " < " : " >= ") + "N = " + detail::fmt(k.n) +
                    (witness_n.empty() ? "" : " from " + witness_n) + detail::cramer_note(lm);
    return v;
}

/// C_M > 0 for X = max(A X + B, 0) iff N3 < N2 or P[A > 1, B > 0] > 0.
inline PositivityVerdict maxzero_positivity(const AtomicMeasure& m) {
    const LogMoments lm = validate(m);
    PositivityVerdict v;
    v.cramer_preconditions = detail::cramer_ok(lm);
    double n2 = -kInf, n3 = kInf;
    for (const Atom& at : m.atoms) {
        if (is_unit(at.a)) {
            if (at.b > 0.0) {
                v.positive = true;
                v.via_a1_bpos = true;
                v.explanation = "atom " + detail::atom_str(at) + " has a = 1, b > 0";
                return v;
            }
            continue;
        }
        const double x = at.b / (1.0 - at.a);
        if (at.a < 1.0) n2 = std::max(n2, x);
        else n3 = std::min(n3, x);
    }
    for (const Atom& at : m.atoms) {
        if (!is_unit(at.a) && at.a > 1.0 && at.b > 0.0) {
            v.positive = true;
            v.explanation = "atom " + detail::atom_str(at) + " has a > 1, b > 0" + detail::cramer_note(lm);
            return v;
        }
    }
    v.positive = n3 < n2;
    v.explanation = "N3 = " + detail::fmt(n3) + (v.positive ? " < " : " >= ") + "N2 = " + detail::fmt(n2) +
                    " and no atom has a > 1, b > 0" + detail::cramer_note(lm);
    return v;
}

/// Goldie's sufficient condition: some c with B - c(1 - A) >= 0 a.s. and
/// P[B - c(1 - A) > 0] + P[A(C - c) > 0] > 0.
struct GoldieResult {
    bool feasible = false;
    double c_lo = -kInf;
    double c_hi = kInf;
    bool strict_met = false;
    std::optional<double> witness_c;

    [[nodiscard]] bool condition_met() const noexcept { return feasible && strict_met; }
};

inline GoldieResult goldie_sufficient(const AtomicMeasure& m) {
    require_c(m, "goldie_sufficient");
    GoldieResult g;
    std::vector<double> breaks;
    for (const Atom& at : m.atoms) {
        breaks.push_back(*at.c);
        if (is_unit(at.a)) {
            if (at.b < 0.0) return g;  // b >= 0 is forced and fails
            continue;
        }
        const double x = at.b / (1.0 - at.a);
        breaks.push_back(x);
        if (at.a < 1.0) g.c_hi = std::min(g.c_hi, x);
        else g.c_lo = std::max(g.c_lo, x);
    }
    if (g.c_lo > g.c_hi) return g;
    g.feasible = true;

    // The strict conditions are constant between consecutive breakpoints, so
    // testing every breakpoint plus one point in each gap is exact.
    std::set<double> inside;
    for (double x : breaks)
        if (x >= g.c_lo && x <= g.c_hi) inside.insert(x);
    if (std::isfinite(g.c_lo)) inside.insert(g.c_lo);
    if (std::isfinite(g.c_hi)) inside.insert(g.c_hi);
    const std::vector<double> pts(inside.begin(), inside.end());
    std::vector<double> cand = pts;
    for (std::size_t i = 1; i < pts.size(); ++i) cand.push_back(0.5 * (pts[i - 1] + pts[i]));
    if (pts.empty()) {
        cand.push_back(0.0);
    } else {
        if (!std::isfinite(g.c_lo)) cand.push_back(pts.front() - 1.0 - std::abs(pts.front()));
        if (!std::isfinite(g.c_hi)) cand.push_back(pts.back() + 1.0 + std::abs(pts.back()));
    }
    std::sort(cand.begin(), cand.end());
    for (double c : cand) {
        for (const Atom& at : m.atoms) {
            if (at.b - c * (1.0 - at.a) > 0.0 || at.a * (*at.c - c) > 0.0) {
                g.strict_met = true;
                g.witness_c = c;
                return g;
            }
        }
    }
    return g;
}

/// Collamore-Vidyashankar condition: P[A > 1, B > 0] > 0 or P[A > 1, B >= 0, C > 0] > 0.
inline bool cv_condition(const AtomicMeasure& m) {
    require_c(m, "cv_condition");
    for (const Atom& at : m.atoms) {
        if (is_unit(at.a) || at.a < 1.0) continue;
        if (at.b > 0.0) return true;
        if (at.b >= 0.0 && *at.c > 0.0) return true;
    }
    return false;
}

/// max_i (a_i N + b_i - N). Non-positive iff (-inf, N] is invariant under
/// every affine part.
inline double invariant_halfline_check(const AtomicMeasure& m, double n) {
    validate(m);
    if (!std::isfinite(n)) throw Error(ErrorCode::InvalidArgument, "invariant_halfline_check: N must be finite");
    double worst = -kInf;
    for (const Atom& at : m.atoms) worst = std::max(worst, at.a * n + at.b - n);
    return worst;
}

/// Letac triples equivalent to a family: MaxZero uses c = -b/a so that
/// a c + b = 0; Extremal max(a x, b) is Letac with (a, 0, b/a).
inline AtomicMeasure letac_equivalent(const AtomicMeasure& m, FamilyKind family) {
    AtomicMeasure out = m;
    for (Atom& at : out.atoms) {
        switch (family) {
        case FamilyKind::MaxZero: at.c = -at.b / at.a; break;
        case FamilyKind::Extremal:
            at.c = at.b / at.a;
            at.b = 0.0;
            break;
        default: break;
        }
    }
    return out;
}

struct CriteriaVerdict {
    FamilyKind family = FamilyKind::Affine;
    bool degenerate = false;
    std::optional<double> degenerate_point;
    std::optional<CramerRoot> alpha;
    LogMoments log_moments;
    std::optional<SupportClassification> support;
    SupportClass support_class = SupportClass::Indeterminate;
    std::optional<bool> c_plus_positive;   // affine: from support classification
    std::optional<bool> c_minus_positive;
    std::optional<LetacConstants> letac;
    std::optional<bool> cl_positive;       // Letac / Extremal
    std::optional<bool> cm_positive;       // MaxZero
    std::string positivity_explanation;
    std::optional<GoldieResult> goldie;
    std::optional<bool> cv_flag;
    std::optional<double> halfline_violation;
    std::optional<MomentRatioReport> moment_ratio;
    // Proven bounds on the support of the stationary law, when the criteria
    // establish one.
    std::optional<double> upper_bound;
    std::optional<double> lower_bound;
    bool consistent = true;
    std::vector<std::string> notes;
};

inline std::optional<double> upper_bound_of_support(const CriteriaVerdict& v) { return v.upper_bound; }
inline std::optional<double> lower_bound_of_support(const CriteriaVerdict& v) { return v.lower_bound; }

namespace detail {

/// Largest fixed point among contracting atoms. When every expanding fixed
/// point lies at or above it, (-inf, x] is invariant under all affine parts.
inline std::optional<double> max_contracting_fixed_point(const std::vector<Atom>& atoms) {
    std::optional<double> best;
    for (const Atom& at : atoms) {
        if (is_unit(at.a) || at.a > 1.0) continue;
        const double x = at.b / (1.0 - at.a);
        best = best ? std::max(*best, x) : x;
    }
    return best;
}

} // namespace detail

inline CriteriaVerdict full_verdict(const AtomicMeasure& m, FamilyKind family) {
    if (family == FamilyKind::UserLipschitz)
        throw Error(ErrorCode::InvalidArgument, "full_verdict: user maps carry no closed-form criteria");
    CriteriaVerdict v;
    v.family = family;
    v.log_moments = validate(m);
    v.degenerate_point = common_fixed_point(m);
    v.degenerate = v.degenerate_point.has_value();
    if (v.degenerate) {
        v.upper_bound = v.lower_bound = v.degenerate_point;
        v.notes.push_back("degenerate: every map fixes x* = " + detail::fmt(*v.degenerate_point) +
                          "; stationary law is a point mass, tails vanish");
        return v;
    }
    if (auto w = arithmeticity_warning(m)) v.notes.push_back(w->message);

    try {
        v.alpha = solve_alpha(m);
    } catch (const Error& e) {
        v.notes.push_back(std::string("no Cramer exponent: ") + e.what());
    }
    v.moment_ratio = moment_ratio_conditions(m);

    v.support = affine_support_classification(m);
    v.support_class = v.support->overall;

    switch (family) {
    case FamilyKind::Affine: {
        if (v.support->upper == SupportClass::Indeterminate) {
            v.notes.push_back("support lemma does not decide the upper tail; no C_+ verdict");
        } else {
            v.c_plus_positive = detail::unbounded(v.support->upper);
        }
        if (v.support->lower_reflected != SupportClass::Indeterminate)
            v.c_minus_positive = detail::unbounded(v.support->lower_reflected);
        if (v.support->upper == SupportClass::BoundedAbove)
            v.upper_bound = detail::max_contracting_fixed_point(m.atoms);
        if (v.support->lower_reflected == SupportClass::BoundedAbove)
            if (auto r = detail::max_contracting_fixed_point(detail::reflect(m.atoms))) v.lower_bound = -*r;
        v.positivity_explanation = v.support->witness;
        break;
    }
    case FamilyKind::Letac:
    case FamilyKind::Extremal:
    case FamilyKind::MaxZero: {
        const AtomicMeasure triples =
            family == FamilyKind::Letac ? m : letac_equivalent(m, family);
        if (family == FamilyKind::Letac) require_c(m, "full_verdict(letac)");
        v.letac = letac_constants(triples);
        const PositivityVerdict lp = letac_positivity(triples);
        if (family == FamilyKind::MaxZero) {
            const PositivityVerdict mz = maxzero_positivity(m);
            v.cm_positive = mz.positive;
            v.positivity_explanation = mz.explanation;
            if (mz.positive != lp.positive) {
                v.consistent = false;
                v.notes.push_back("inconsistent: max-at-zero verdict differs from Letac reduction with N1 = 0");
            }
        } else {
            v.cl_positive = lp.positive;
            v.positivity_explanation = lp.explanation;
        }
        v.goldie = goldie_sufficient(triples);
        v.cv_flag = cv_condition(triples);
        if (std::isfinite(v.letac->n)) v.halfline_violation = invariant_halfline_check(triples, v.letac->n);

        const LetacConstants& k = *v.letac;
        if (!lp.positive && std::isfinite(k.n)) v.upper_bound = k.n;
        // Every step lands at or above a c + b.
        double floor = kInf;
        for (const Atom& at : triples.atoms) floor = std::min(floor, at.a * *at.c + at.b);
        v.lower_bound = floor;
        if (!lp.via_a1_bpos) {
            if (lp.positive != (k.n3 < k.n2 || k.n3 < k.n1)) v.consistent = false;
            // Extremal triples have affine part (a, 0); the support of the
            // original (a, b) recursion says nothing about them.
            if (family != FamilyKind::Extremal && v.support->upper != SupportClass::Indeterminate &&
                (k.n3 < k.n2) != (v.support->upper == SupportClass::HalfLineUp)) {
                v.consistent = false;
                v.notes.push_back("inconsistent: N3 < N2 disagrees with affine support classification");
            }
            if (!lp.positive && v.halfline_violation && *v.halfline_violation > 1e-9 * (1.0 + std::abs(k.n))) {
                v.consistent = false;
                v.notes.push_back("inconsistent: (-inf, N] is not invariant although C = 0 was claimed");
            }
        }
        if (v.goldie->condition_met() && !lp.positive && lp.cramer_preconditions) {
            v.consistent = false;
            v.notes.push_back("inconsistent: Goldie's sufficient condition holds but verdict is C = 0");
        }
        if (*v.cv_flag && !lp.positive)
            v.notes.push_back("Collamore-Vidyashankar condition holds but C = 0: that condition is not sufficient here");
        if (!lp.cramer_preconditions) v.notes.push_back("Cramer preconditions fail; positivity verdict is formal");
        break;
    }
    case FamilyKind::UserLipschitz: break;
    }
    return v;
}

inline CriteriaVerdict full_verdict(const Driver& d, FamilyKind family) {
    return full_verdict(require_atomic(d, "criteria"), family);
}

} // namespace afftail
