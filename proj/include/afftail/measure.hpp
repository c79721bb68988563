#pragma once
//! Driving measures for affine-type recursions: finitely supported laws of
//! (A, B) or (A, B, C), and parametric continuous families for simulation.

#include "afftail/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

namespace afftail {

/// Tolerances shared by every atom comparison.
inline constexpr double kAbsTol = 1e-12;
inline constexpr double kRelTol = 1e-9;
inline constexpr double kWeightTol = 1e-12;

inline bool approx_equal(double x, double y) noexcept {
    return std::abs(x - y) <= kAbsTol + kRelTol * std::max(std::abs(x), std::abs(y));
}

/// True when a multiplier is treated as exactly 1.
inline bool is_unit(double a) noexcept { return std::abs(a - 1.0) <= kAbsTol; }

struct Atom {
    double a = 1.0;
    double b = 0.0;
    std::optional<double> c;
    double weight = 1.0;

    [[nodiscard]] double c_or(double fallback) const noexcept { return c.value_or(fallback); }
};

inline bool canonical_less(const Atom& x, const Atom& y) noexcept {
    const double xc = x.c_or(0.0);
    const double yc = y.c_or(0.0);
    return std::tie(x.a, x.b, xc, x.weight) < std::tie(y.a, y.b, yc, y.weight);
}

struct AtomicMeasure {
    std::vector<Atom> atoms;
    std::string label;

    [[nodiscard]] bool has_c() const noexcept {
        return !atoms.empty() && atoms.front().c.has_value();
    }
};

struct LogMoments {
    double mean_log_a = 0.0;
    double mean_log_plus_abs_b = 0.0;
    bool has_expanding_atom = false;
    bool has_a1_bpos = false;
};

/// Continuous driver: log A ~ N(mu_log_a, sigma_log_a^2), B ~ N(mu_b, sigma_b^2),
/// independent, with an optional constant Letac threshold C.
struct ParametricDriver {
    enum class Family { LogNormalNormal };

    Family family = Family::LogNormalNormal;
    double mu_log_a = 0.0;
    double sigma_log_a = 0.0;
    double mu_b = 0.0;
    double sigma_b = 0.0;
    std::optional<double> c;
    std::string label;
};

using Driver = std::variant<AtomicMeasure, ParametricDriver>;

namespace detail {

inline std::vector<Atom> sorted_atoms(const AtomicMeasure& m) {
    std::vector<Atom> atoms = m.atoms;
    std::sort(atoms.begin(), atoms.end(), canonical_less);
    return atoms;
}

inline double weight_sum(const std::vector<Atom>& sorted) {
    double s = 0.0;
    for (const Atom& at : sorted) s += at.weight;
    return s;
}

inline void check_structure(const AtomicMeasure& m) {
    if (m.atoms.empty()) throw Error(ErrorCode::InvalidMeasure, "measure has no atoms");
    const bool first_c = m.atoms.front().c.has_value();
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        const Atom& at = m.atoms[i];
        if (!(at.a > 0.0) || !std::isfinite(at.a)) {
            throw Error(ErrorCode::InvalidMeasure,
                        "atom " + std::to_string(i) + ": multiplier a must be positive and finite");
        }
        if (!std::isfinite(at.b)) {
            throw Error(ErrorCode::InvalidMeasure, "atom " + std::to_string(i) + ": b not finite");
        }
        if (!(at.weight > 0.0) || at.weight > 1.0 + kWeightTol) {
            throw Error(ErrorCode::InvalidMeasure,
                        "atom " + std::to_string(i) + ": weight must lie in (0, 1]");
        }
        if (at.c.has_value() != first_c) {
            throw Error(ErrorCode::InvalidMeasure,
                        "c must be present for all atoms or for none");
        }
        if (at.c && !std::isfinite(*at.c)) {
            throw Error(ErrorCode::InvalidMeasure, "atom " + std::to_string(i) + ": c not finite");
        }
    }
}

} // namespace detail

/// Validate structure and weight sum, returning exact log-moments. Sums are
/// taken over canonically sorted atoms so the result does not depend on
/// atom order.
inline LogMoments validate(const AtomicMeasure& m) {
    detail::check_structure(m);
    const auto sorted = detail::sorted_atoms(m);
    const double total = detail::weight_sum(sorted);
    if (std::abs(total - 1.0) > kWeightTol) {
        std::ostringstream os;
        os.precision(17);
        os << "weights sum to " << total << ", not 1";
        throw Error(ErrorCode::InvalidMeasure, os.str());
    }
    LogMoments lm;
    for (const Atom& at : sorted) {
        lm.mean_log_a += at.weight * std::log(at.a);
        const double absb = std::abs(at.b);
        if (absb > 1.0) lm.mean_log_plus_abs_b += at.weight * std::log(absb);
        if (at.a > 1.0 && !is_unit(at.a)) lm.has_expanding_atom = true;
        if (is_unit(at.a) && at.b > 0.0) lm.has_a1_bpos = true;
    }
    return lm;
}

/// Rescale weights to sum to one when they are already within tolerance.
/// Larger deviations are rejected.
inline AtomicMeasure normalized(AtomicMeasure m) {
    detail::check_structure(m);
    const double total = detail::weight_sum(detail::sorted_atoms(m));
    if (std::abs(total - 1.0) > kWeightTol) {
        std::ostringstream os;
        os.precision(17);
        os << "weights sum to " << total << ", outside tolerance of 1";
        throw Error(ErrorCode::InvalidMeasure, os.str());
    }
    for (Atom& at : m.atoms) at.weight /= total;
    return m;
}

inline void validate(const ParametricDriver& p) {
    if (!std::isfinite(p.mu_log_a) || !std::isfinite(p.mu_b))
        throw Error(ErrorCode::InvalidMeasure, "parametric driver: means must be finite");
    if (!(p.sigma_log_a >= 0.0) || !(p.sigma_b >= 0.0) || !std::isfinite(p.sigma_log_a) ||
        !std::isfinite(p.sigma_b))
        throw Error(ErrorCode::InvalidMeasure, "parametric driver: scales must be finite and >= 0");
    if (p.c && !std::isfinite(*p.c))
        throw Error(ErrorCode::InvalidMeasure, "parametric driver: c must be finite");
}

inline double mean_log_a(const Driver& d) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, AtomicMeasure>) {
                return validate(x).mean_log_a;
            } else {
                validate(x);
                return x.mu_log_a;
            }
        },
        d);
}

/// Standard deviation of log A (used for coupling diagnostics).
inline double sd_log_a(const Driver& d) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, AtomicMeasure>) {
                const double mean = validate(x).mean_log_a;
                double var = 0.0;
                for (const Atom& at : detail::sorted_atoms(x)) {
                    const double dev = std::log(at.a) - mean;
                    var += at.weight * dev * dev;
                }
                return std::sqrt(var);
            } else {
                return x.sigma_log_a;
            }
        },
        d);
}

inline const std::string& label_of(const Driver& d) {
    return std::visit([](const auto& x) -> const std::string& { return x.label; }, d);
}

inline const AtomicMeasure& require_atomic(const Driver& d, const char* what) {
    if (const auto* m = std::get_if<AtomicMeasure>(&d)) return *m;
    throw Error(ErrorCode::ParametricRefused,
                std::string(what) + " requires an atomic measure; parametric drivers are refused");
}

/// Common fixed point x* with a_i x* + b_i = x* for every atom, if one exists.
/// Atoms with a = 1 must then have b = 0; with no such constraint from the
/// remaining atoms the point is reported as 0.
inline std::optional<double> common_fixed_point(const AtomicMeasure& m) {
    validate(m);
    const auto sorted = detail::sorted_atoms(m);
    std::optional<double> x;
    for (const Atom& at : sorted) {
        if (!is_unit(at.a)) {
            x = at.b / (1.0 - at.a);
            break;
        }
    }
    const double xs = x.value_or(0.0);
    const double tol = kAbsTol * (1.0 + std::abs(xs));
    for (const Atom& at : sorted) {
        if (is_unit(at.a)) {
            if (std::abs(at.b) > kAbsTol) return std::nullopt;
        } else if (std::abs(at.a * xs + at.b - xs) > tol) {
            return std::nullopt;
        }
    }
    return xs;
}

/// True when every map x -> a x + b fixes one common point, in which case the
/// stationary law is a point mass.
inline bool degeneracy_check(const AtomicMeasure& m) { return common_fixed_point(m).has_value(); }

struct ArithmeticityWarning {
    std::string message;
    double lattice_step = 0.0;  // d with all log a_i in dZ
};

namespace detail {

/// Best rational approximation p/q of r with q <= max_den, by continued
/// fraction convergents; returns q if |r - p/q| <= tol.
inline std::optional<long long> rational_denominator(double r, double tol, long long max_den) {
    long long h_prev = 1, h = static_cast<long long>(std::floor(r));
    long long k_prev = 0, k = 1;
    double frac = r - std::floor(r);
    for (int iter = 0; iter < 64; ++iter) {
        if (std::abs(r - static_cast<double>(h) / static_cast<double>(k)) <= tol) return k;
        if (frac < 1e-15) break;
        const double inv = 1.0 / frac;
        const long long digit = static_cast<long long>(std::floor(inv));
        frac = inv - std::floor(inv);
        const long long h_next = digit * h + h_prev;
        const long long k_next = digit * k + k_prev;
        if (k_next > max_den) break;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    return std::nullopt;
}

} // namespace detail

/// Flags measures whose log-multipliers appear to lie on a lattice dZ. Never
/// an error: the engine still runs such measures, but t^alpha P[X > t] may
/// oscillate instead of converging.
inline std::optional<ArithmeticityWarning> arithmeticity_warning(const AtomicMeasure& m) {
    constexpr long long kMaxDenominator = 1000;
    constexpr double kRatioTol = 1e-9;

    std::vector<double> logs;
    for (const Atom& at : detail::sorted_atoms(m)) {
        const double l = std::log(at.a);
        if (std::abs(l) <= kAbsTol) continue;
        const bool seen = std::any_of(logs.begin(), logs.end(),
                                      [&](double v) { return approx_equal(v, l); });
        if (!seen) logs.push_back(l);
    }
    if (logs.empty()) {
        return ArithmeticityWarning{"all multipliers equal 1; log A is degenerate at 0", 0.0};
    }
    if (logs.size() == 1) {
        return ArithmeticityWarning{"single distinct multiplier; log A lives on a lattice",
                                    std::abs(logs.front())};
    }
    long long lcm = 1;
    for (std::size_t j = 1; j < logs.size(); ++j) {
        const double r = logs[j] / logs[0];
        const auto q = detail::rational_denominator(r, kRatioTol * std::max(1.0, std::abs(r)),
                                                    kMaxDenominator);
        if (!q) return std::nullopt;
        lcm = std::lcm(lcm, *q);
    }
    const double step = std::abs(logs[0]) / static_cast<double>(lcm);
    std::ostringstream os;
    os.precision(10);
    os << "log A appears arithmetic: all log a_i lie on the lattice " << step
       << "Z; tail limits may not exist";
    return ArithmeticityWarning{os.str(), step};
}

} // namespace afftail
