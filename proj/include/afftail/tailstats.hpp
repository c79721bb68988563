#pragma once
//! Tail estimation on i.i.d. samples: empirical CCDF, Hill index, tail-constant
//! grids, log-log slope and the two-sample Kolmogorov-Smirnov distance.
//! Left tails are handled by negating the samples before calling these.

#include "afftail/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace afftail {

struct CcdfPoint {
    double t = 0.0;
    double ccdf = 0.0;
};

struct GridPoint {
    double t = 0.0;
    double ccdf = 0.0;
    double scaled = 0.0;  // t^alpha * ccdf
};

inline std::vector<double> sorted_copy(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    return v;
}

inline std::vector<double> negated(std::span<const double> xs) {
    std::vector<double> v(xs.size());
    std::transform(xs.begin(), xs.end(), v.begin(), std::negate<>{});
    return v;
}

/// Fraction of samples strictly above t, on a pre-sorted ascending vector.
inline double ccdf_sorted(const std::vector<double>& sorted, double t) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

inline std::vector<CcdfPoint> empirical_ccdf(std::span<const double> samples,
                                             std::span<const double> grid) {
    if (samples.empty()) throw Error(ErrorCode::InsufficientData, "empirical_ccdf: no samples");
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empirical_ccdf: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "empirical_ccdf: grid must be strictly increasing");
    const auto sorted = sorted_copy(samples);
    std::vector<CcdfPoint> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back({t, ccdf_sorted(sorted, t)});
    return out;
}

/// Linear-interpolated quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw Error(ErrorCode::InsufficientData, "quantile of empty sample");
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> positive_sorted(std::span<const double> samples) {
    std::vector<double> pos;
    for (double x : samples)
        if (x > 0.0) pos.push_back(x);
    std::sort(pos.begin(), pos.end());
    return pos;
}

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw Error(ErrorCode::InvalidArgument, "geometric grid needs 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double ratio = std::log(hi / lo);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

struct HillEstimate {
    double alpha = 0.0;
    double se = 0.0;
    std::size_t k = 0;
};

inline std::size_t default_hill_k(std::size_t n) {
    return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
}

/// Hill estimator on the k largest order statistics: k / sum log(X_(i) / X_(k+1)).
inline HillEstimate hill_estimator(std::span<const double> samples, std::optional<std::size_t> k_opt = {}) {
    const std::size_t k = k_opt.value_or(default_hill_k(samples.size()));
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "hill_estimator: k must be >= 1");
    std::vector<double> pos;
    for (double x : samples)
        if (x > 0.0) pos.push_back(x);
    if (pos.size() < k + 1)
        throw Error(ErrorCode::InsufficientData, "hill_estimator: need " + std::to_string(k + 1) +
                                                     " positive samples, have " + std::to_string(pos.size()));
    std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k), pos.end(), std::greater<>{});
    const double threshold = pos[k];
    std::vector<double> top(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(top.begin(), top.end());
    double denom = 0.0;
    for (double x : top) denom += std::log(x / threshold);
    if (!(denom > 0.0))
        throw Error(ErrorCode::ZeroDenominator, "hill_estimator: top order statistics are tied");
    HillEstimate h;
    h.k = k;
    h.alpha = static_cast<double>(k) / denom;
    h.se = h.alpha / std::sqrt(static_cast<double>(k));
    return h;
}

struct TailConstantResult {
    std::vector<GridPoint> grid;
    double flatness_ratio = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
    std::size_t exceed_hi = 0;  // samples above t_hi
    std::vector<std::string> warnings;
};

/// t^alpha * P[X > t] on a geometric grid over [t_lo, t_hi].
inline TailConstantResult tail_constant(std::span<const double> samples, double alpha, double t_lo,
                                        double t_hi, std::size_t n_grid) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "tail_constant: alpha must be > 0");
    if (!(t_lo < t_hi)) throw Error(ErrorCode::InvalidArgument, "tail_constant: need t_lo < t_hi");
    if (samples.empty()) throw Error(ErrorCode::InsufficientData, "tail_constant: no samples");
    const auto sorted = sorted_copy(samples);
    const auto ts = geometric_grid(t_lo, t_hi, n_grid);

    TailConstantResult r;
    double largest_usable = 0.0;
    for (double t : ts) {
        const double p = ccdf_sorted(sorted, t);
        if (p == 0.0) {
            throw Error(ErrorCode::ZeroCcdf,
                        "tail_constant: empirical CCDF is zero at t = " + std::to_string(t) +
                            (largest_usable > 0.0 ? "; largest usable t = " + std::to_string(largest_usable)
                                                  : "; no usable grid point"));
        }
        largest_usable = t;
        r.grid.push_back({t, p, std::pow(t, alpha) * p});
    }
    r.exceed_hi = static_cast<std::size_t>(
        std::llround(ccdf_sorted(sorted, t_hi) * static_cast<double>(sorted.size())));
    if (r.exceed_hi < 100)
        r.warnings.push_back("only " + std::to_string(r.exceed_hi) + " samples exceed t_hi");
    const auto [mn, mx] = std::minmax_element(r.grid.begin(), r.grid.end(),
                                              [](const GridPoint& x, const GridPoint& y) { return x.scaled < y.scaled; });
    r.min_value = mn->scaled;
    r.max_value = mx->scaled;
    r.flatness_ratio = r.max_value / r.min_value;
    return r;
}

/// Sup-norm distance between empirical CDFs, by a merge over sorted samples.
inline double ks_distance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.empty() || ys.empty()) throw Error(ErrorCode::InsufficientData, "ks_distance: empty sample");
    const auto a = sorted_copy(xs);
    const auto b = sorted_copy(ys);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == t) ++i;
        while (j < b.size() && b[j] == t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Least-squares slope of ln P[X > t] against ln t for t between the q_lo and
/// q_hi quantiles of the positive samples. About -alpha for power-law tails.
inline double loglog_slope(std::span<const double> samples, double q_lo, double q_hi) {
    if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0))
        throw Error(ErrorCode::InvalidArgument, "loglog_slope: need 0 < q_lo < q_hi < 1");
    const auto sorted = sorted_copy(samples);
    const auto pos = positive_sorted(samples);
    if (pos.empty()) throw Error(ErrorCode::InsufficientData, "loglog_slope: no positive samples");
    const double t_lo = quantile_sorted(pos, q_lo);
    const double t_hi = quantile_sorted(pos, q_hi);

    constexpr std::size_t kMaxPoints = 1000;
    const auto first = std::lower_bound(pos.begin(), pos.end(), t_lo);
    const auto last = std::upper_bound(pos.begin(), pos.end(), t_hi);
    const auto span_len = static_cast<std::size_t>(last - first);
    const std::size_t stride = std::max<std::size_t>(1, span_len / kMaxPoints);

    std::vector<std::pair<double, double>> pts;
    double prev_t = -1.0;
    for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(stride)) {
        if (*it == prev_t) continue;
        prev_t = *it;
        const double p = ccdf_sorted(sorted, *it);
        if (p > 0.0) pts.emplace_back(std::log(*it), std::log(p));
    }
    if (pts.size() < 10)
        throw Error(ErrorCode::InsufficientData, "loglog_slope: fewer than 10 points in band");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::ZeroDenominator, "loglog_slope: degenerate band");
    return sxy / sxx;
}

struct TailOptions {
    std::optional<std::size_t> hill_k;
    std::optional<double> alpha;  // exponent for the c-grid; Hill estimate if absent
    std::optional<double> t_lo;   // defaults: q90 and q99.9 of the positive samples
    std::optional<double> t_hi;
    std::size_t n_grid = 20;
    double slope_q_lo = 0.9;
    double slope_q_hi = 0.999;
};

struct TailReport {
    double alpha_hill = 0.0;
    double hill_se = 0.0;
    std::size_t k_used = 0;
    double alpha_used = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<CcdfPoint> ccdf;
    std::vector<GridPoint> c_grid;
    double loglog_slope = 0.0;
    double flatness_ratio = 0.0;
    double c_min = 0.0;
    double c_max = 0.0;
    std::size_t n = 0;
    std::size_t n_positive = 0;
    std::vector<std::string> warnings;
};

/// Right-tail report combining all estimators.
inline TailReport tail_report(std::span<const double> samples, const TailOptions& opt = {}) {
    TailReport r;
    r.n = samples.size();
    const auto pos = positive_sorted(samples);
    r.n_positive = pos.size();
    if (pos.size() < 20)
        throw Error(ErrorCode::InsufficientData, "tail_report: fewer than 20 positive samples");

    const std::size_t k = opt.hill_k.value_or(std::min(default_hill_k(samples.size()), pos.size() - 1));
    const HillEstimate h = hill_estimator(samples, k);
    r.alpha_hill = h.alpha;
    r.hill_se = h.se;
    r.k_used = h.k;
    r.alpha_used = opt.alpha.value_or(h.alpha);

    r.t_lo = opt.t_lo.value_or(quantile_sorted(pos, 0.9));
    r.t_hi = opt.t_hi.value_or(quantile_sorted(pos, 0.999));
    if (!(r.t_lo > 0.0) || !(r.t_hi > r.t_lo))
        throw Error(ErrorCode::InsufficientData, "tail_report: degenerate t-range");
    if (r.t_hi < 10.0 * r.t_lo) r.warnings.push_back("t-range spans less than one decade");

    const auto grid = geometric_grid(r.t_lo, r.t_hi, opt.n_grid);
    r.ccdf = empirical_ccdf(samples, grid);
    const TailConstantResult tc = tail_constant(samples, r.alpha_used, r.t_lo, r.t_hi, opt.n_grid);
    r.c_grid = tc.grid;
    r.flatness_ratio = tc.flatness_ratio;
    r.c_min = tc.min_value;
    r.c_max = tc.max_value;
    r.warnings.insert(r.warnings.end(), tc.warnings.begin(), tc.warnings.end());
    // The slope is auxiliary: lattice-valued samples can leave too few
    // distinct points in the band, which should not sink the whole report.
    try {
        r.loglog_slope = loglog_slope(samples, opt.slope_q_lo, opt.slope_q_hi);
    } catch (const Error& e) {
        r.loglog_slope = std::numeric_limits<double>::quiet_NaN();
        r.warnings.push_back(std::string("log-log slope unavailable: ") + e.what());
    }
    return r;
}

} // namespace afftail
