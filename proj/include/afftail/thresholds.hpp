#pragma once
//! Tolerances shared by the experiment agreement summary and the acceptance
//! suite. These are tool tolerances for desk-scale Monte Carlo, not constants
//! of the underlying theory.

#include <cmath>
#include <cstddef>

namespace afftail::thresholds {

/// max/min of t^alpha P[X > t] over the grid for a tail to count as flat.
inline constexpr double kFlatnessMax = 3.0;
/// min grid value must be at least this fraction of the max (lower bound away from 0).
inline constexpr double kMinToMaxRatio = 0.01;
/// Slack when comparing samples against a proven support bound.
inline constexpr double kBoundSlack = 1e-9;
/// Forward vs backward sample KS distance at 10^5 + 10^5 samples.
inline constexpr double kKsMax = 0.01;
/// Hill estimate window around a known alpha, relative.
inline constexpr double kHillRelWindow = 0.15;

/// Asymptotic two-sample KS critical value at level 0.001:
/// c * sqrt((n + m) / (n m)) with c = sqrt(-ln(0.0005) / 2).
inline double ks_critical_001(std::size_t n, std::size_t m) {
    const double c = std::sqrt(-std::log(0.0005) / 2.0);
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return c * std::sqrt((dn + dm) / (dn * dm));
}

/// KS threshold used by reports: the fixed acceptance tolerance, widened for
/// small batches where sampling noise alone exceeds it.
inline double ks_threshold(std::size_t n, std::size_t m) {
    return std::fmax(kKsMax, ks_critical_001(n, m));
}

inline double bound_slack(double bound) { return kBoundSlack * (1.0 + std::abs(bound)); }

} // namespace afftail::thresholds
