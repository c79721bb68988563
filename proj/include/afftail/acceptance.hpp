#pragma once
//! Built-in acceptance suite. Each criterion runs at its full stated scale and
//! reports one pass/fail line; tolerances are pinned here and in thresholds.hpp.

#include "afftail/cramer.hpp"
#include "afftail/criteria.hpp"
#include "afftail/engine.hpp"
#include "afftail/measure.hpp"
#include "afftail/report.hpp"
#include "afftail/rng.hpp"
#include "afftail/tailstats.hpp"
#include "afftail/thresholds.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace afftail {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240601;
    unsigned workers = 4;        // "N" in the 1-vs-N reproducibility check
    std::vector<int> only;       // empty: run every criterion
};

namespace acceptance_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline AtomicMeasure atoms(std::vector<std::array<double, 4>> abcw, bool with_c, std::string label) {
    AtomicMeasure m;
    m.label = std::move(label);
    for (const auto& x : abcw) {
        Atom at{x[0], x[1], std::nullopt, x[3]};
        if (with_c) at.c = x[2];
        m.atoms.push_back(at);
    }
    return m;
}

inline AtomicMeasure counterexample() { return atoms({{3, 1, -1, 0.2}, {0.5, -1, 0, 0.8}}, true, "counterexample"); }
inline AtomicMeasure positive_affine() {
    return atoms({{2, -1, 0, 1.0 / 3.0}, {0.5, 1, 0, 2.0 / 3.0}}, false, "positive-affine");
}
inline AtomicMeasure third_half() { return atoms({{2, 0, 0, 1.0 / 3.0}, {0.5, 0, 0, 2.0 / 3.0}}, false, "2|1/2"); }
inline AtomicMeasure three_half() { return atoms({{3, 0, 0, 0.2}, {0.5, 0, 0, 0.8}}, false, "3|1/2"); }

inline std::uint64_t ulp_distance(double x, double y) {
    auto key = [](double v) {
        std::int64_t i = 0;
        std::memcpy(&i, &v, sizeof v);
        return i < 0 ? std::numeric_limits<std::int64_t>::min() - i : i;
    };
    const std::int64_t a = key(x), b = key(y);
    return a > b ? static_cast<std::uint64_t>(a - b) : static_cast<std::uint64_t>(b - a);
}

/// Random atomic measure on a coarse grid (ties between fixed points occur)
/// with E log A < 0 and an expanding atom.
inline AtomicMeasure random_cramer_measure(Xoshiro256& rng) {
    static const double mults[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
    auto grid = [&] { return -3.0 + 0.5 * static_cast<double>(rng() % 13); };
    while (true) {
        const std::size_t n = 2 + rng() % 3;
        AtomicMeasure m;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 0.1 + rng.uniform();
            total += w;
            m.atoms.push_back({mults[rng() % 7], grid(), grid(), w});
        }
        for (auto& at : m.atoms) at.weight /= total;
        m = normalized(m);
        const LogMoments lm = validate(m);
        if (lm.mean_log_a < 0.0 && lm.has_expanding_atom) return m;
    }
}

inline std::string fmt(double x) { return num(x); }

// 1
inline CriterionResult cramer_closed_forms() {
    CriterionResult r{1, "Cramer exponent closed forms", true, "", 0.0};
    std::ostringstream os;
    for (const auto& m : {third_half(), three_half()}) {
        std::vector<double> times;
        CramerRoot root;
        for (int rep = 0; rep < 11; ++rep) {
            const auto t0 = Clock::now();
            root = solve_alpha(m);
            times.push_back(seconds_since(t0));
        }
        std::nth_element(times.begin(), times.begin() + 5, times.end());
        const double first = times[5];
        const bool ok = std::abs(root.alpha - 1.0) <= 1e-10 && root.residual <= 1e-12 && first < 1e-3;
        r.passed = r.passed && ok;
        os << m.label << ": alpha " << fmt(root.alpha) << ", residual " << fmt(root.residual) << ", median "
           << fmt(first * 1e3) << " ms; ";
    }
    r.detail = os.str();
    return r;
}

// 2
inline CriterionResult counterexample_analytic() {
    CriterionResult r{2, "Counterexample constants and verdicts", false, "", 0.0};
    const auto m = counterexample();
    const auto k = letac_constants(m);
    const bool pos = letac_positivity(m).positive;
    const bool cv = cv_condition(m);
    r.passed = k.n1 == -1.0 && k.n2 == -2.0 && k.n3 == -0.5 && !pos && cv;
    r.detail = "N1 " + fmt(k.n1) + ", N2 " + fmt(k.n2) + ", N3 " + fmt(k.n3) + ", C_L > 0: " +
               (pos ? "true" : "false") + ", CV: " + (cv ? "true" : "false");
    return r;
}

// 3
inline CriterionResult counterexample_empirical(const AcceptanceOptions& o) {
    CriterionResult r{3, "Counterexample samples stay below N = -1", false, "", 0.0};
    SimConfig cfg;
    cfg.n_samples = 1000000;
    cfg.seed = o.seed;
    cfg.threads = 1;
    const auto t0 = Clock::now();
    const auto batch = sample_stationary(FamilyKind::Letac, Driver{counterexample()}, cfg);
    const double secs = seconds_since(t0);
    const double mx = *std::max_element(batch.values.begin(), batch.values.end());
    r.passed = mx <= -1.0 + 1e-12 && secs < 60.0 && batch.coupling.ok();
    r.detail = "max " + fmt(mx) + " over 10^6 samples (burn-in " + std::to_string(batch.config.burn_in) + "), " +
               fmt(secs) + " s single-threaded";
    return r;
}

// 4
inline CriterionResult positive_affine_tail(const AcceptanceOptions& o) {
    CriterionResult r{4, "Positive affine tail constant and Hill index", false, "", 0.0};
    SimConfig cfg;
    cfg.n_samples = 1000000;
    cfg.seed = o.seed + 4;
    cfg.threads = o.workers;
    const auto t0 = Clock::now();
    const auto batch = sample_stationary(FamilyKind::Affine, Driver{positive_affine()}, cfg);
    const auto pos = positive_sorted(batch.values);
    const double t_lo = quantile_sorted(pos, 0.9);
    const double t_hi = quantile_sorted(pos, 0.999);
    const auto tc = tail_constant(batch.values, 1.0, t_lo, t_hi, 20);
    const auto hill = hill_estimator(batch.values, 1000);
    const double secs = seconds_since(t0);
    const bool decade = t_hi >= 10.0 * t_lo;
    const bool flat = tc.flatness_ratio <= thresholds::kFlatnessMax;
    const bool floor = tc.min_value >= thresholds::kMinToMaxRatio * tc.max_value;
    const bool hill_ok = hill.alpha >= 1.0 - thresholds::kHillRelWindow && hill.alpha <= 1.0 + thresholds::kHillRelWindow;
    r.passed = decade && flat && floor && hill_ok && secs < 120.0;
    r.detail = "t in [" + fmt(t_lo) + ", " + fmt(t_hi) + "], flatness " + fmt(tc.flatness_ratio) + ", min/max " +
               fmt(tc.min_value / tc.max_value) + ", Hill(k=1000) " + fmt(hill.alpha) + ", " + fmt(secs) + " s";
    return r;
}

// 5
inline CriterionResult forward_backward(const AcceptanceOptions& o) {
    CriterionResult r{5, "Forward and backward samples agree in law", false, "", 0.0};
    SimConfig cfg;
    cfg.n_samples = 100000;
    cfg.threads = o.workers;
    cfg.seed = o.seed + 5;
    const auto fwd = sample_stationary(FamilyKind::Affine, Driver{positive_affine()}, cfg);
    cfg.seed = o.seed + 55;
    const auto bwd = sample_perpetuity(Driver{positive_affine()}, cfg);
    const double ks = ks_distance(fwd.values, bwd.values);
    r.passed = ks <= thresholds::kKsMax && bwd.max_steps_hits == 0;
    r.detail = "KS " + fmt(ks) + " (10^5 vs 10^5), worst truncation " + fmt(bwd.worst_truncation);
    return r;
}

// 6
inline CriterionResult sup_pi_tail(const AcceptanceOptions& o) {
    CriterionResult r{6, "Tail of max Pi_n is flat and positive", false, "", 0.0};
    SimConfig cfg;
    cfg.n_samples = 1000000;
    cfg.threads = o.workers;
    cfg.seed = o.seed + 6;
    const auto batch = sample_sup_pi(Driver{three_half()}, cfg);
    const double mn = *std::min_element(batch.values.begin(), batch.values.end());
    const auto tc = tail_constant(batch.values, 1.0, 10.0, 1000.0, 20);
    r.passed = tc.flatness_ratio <= thresholds::kFlatnessMax && tc.min_value > 0.0 && mn > 0.0 &&
               batch.max_steps_hits == 0;
    r.detail = "flatness " + fmt(tc.flatness_ratio) + " over [10, 1000], t P[M > t] in [" + fmt(tc.min_value) +
               ", " + fmt(tc.max_value) + "], min M " + fmt(mn);
    return r;
}

// 7
inline CriterionResult domination(const AcceptanceOptions& o) {
    CriterionResult r{7, "Pathwise domination of the affine minorant", false, "", 0.0};
    const double letac = pathwise_domination_check(FamilyKind::Letac, Driver{counterexample()}, 1000, 1000, o.seed + 7);
    const double maxzero = pathwise_domination_check(FamilyKind::MaxZero, Driver{counterexample()}, 1000, 1000, o.seed + 77);
    const double pos = pathwise_domination_check(FamilyKind::Letac,
                                                 Driver{atoms({{3, 1, -1, 0.2}, {0.5, -1, 10, 0.8}}, true, "")},
                                                 1000, 1000, o.seed + 777);
    const double worst = std::max({letac, maxzero, pos});
    r.passed = worst <= 1e-12;
    r.detail = "max(affine - Letac) " + fmt(letac) + ", max(affine - maxzero) " + fmt(maxzero) +
               ", positive Letac " + fmt(pos) + " (10^3 paths x 10^3 steps each)";
    return r;
}

// 8
inline CriterionResult degeneracy_equivariance(const AcceptanceOptions& o) {
    CriterionResult r{8, "Degenerate point mass and b-scaling equivariance", false, "", 0.0};
    // Weights 1/3, 2/3 keep E log A < 0 so the chain contracts.
    const auto deg = atoms({{2, -1, 0, 1.0 / 3.0}, {0.5, 0.5, 0, 2.0 / 3.0}}, false, "degenerate");
    SimConfig cfg;
    cfg.n_samples = 100000;
    cfg.seed = o.seed + 8;
    cfg.threads = o.workers;
    const auto batch = sample_stationary(FamilyKind::Affine, Driver{deg}, cfg);
    double dev = 0.0;
    for (double x : batch.values) dev = std::max(dev, std::abs(x - 1.0));

    const double lambda = 7.0;
    AtomicMeasure scaled = positive_affine();
    for (auto& at : scaled.atoms) at.b *= lambda;
    std::uint64_t worst_ulp = 0;
    const auto base = sample_stationary(FamilyKind::Affine, Driver{positive_affine()}, cfg);
    const auto big = sample_stationary(FamilyKind::Affine, Driver{scaled}, cfg);
    for (std::size_t i = 0; i < base.values.size(); ++i)
        worst_ulp = std::max(worst_ulp, ulp_distance(big.values[i], lambda * base.values[i]));
    const DriverSampler s1(Driver{positive_affine()}), s7(Driver{scaled});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Xoshiro256 r1(derive_subseed(o.seed, seed)), r7(derive_subseed(o.seed, seed));
        const auto t1 = iterate_forward(FamilyKind::Affine, s1, 0.0, 1000, r1, true);
        const auto t7 = iterate_forward(FamilyKind::Affine, s7, 0.0, 1000, r7, true);
        for (std::size_t i = 0; i < t1.trajectory.size(); ++i)
            worst_ulp = std::max(worst_ulp, ulp_distance(t7.trajectory[i], lambda * t1.trajectory[i]));
    }
    r.passed = dev <= 1e-9 && worst_ulp <= 4;
    r.detail = "max |X - 1| " + fmt(dev) + " over 10^5 degenerate samples; worst ulp distance for b*7: " +
               std::to_string(worst_ulp);
    return r;
}

// 9
inline CriterionResult property_suites(const AcceptanceOptions& o) {
    CriterionResult r{9, "Property suites", true, "", 0.0};
    Xoshiro256 rng(o.seed + 9);
    std::ostringstream os;

    // Log-convexity of phi on s = 0, 0.1, ..., 4.
    std::size_t convex_fail = 0;
    for (int t = 0; t < 1000; ++t) {
        const MomentFunction mf(random_cramer_measure(rng));
        for (int i = 0; i <= 40; ++i)
            for (int j = i + 2; j <= 40; j += 2) {
                const double s = i / 10.0, u = j / 10.0, mid = (s + u) / 2.0;
                if (2.0 * mf.log_phi(mid) > mf.log_phi(s) + mf.log_phi(u) + 1e-12) ++convex_fail;
            }
    }
    os << "log-convexity violations " << convex_fail << "; ";

    // Hill scale invariance.
    double hill_dev = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double alpha = 0.5 + 2.0 * rng.uniform();
        std::vector<double> v(5000);
        for (auto& x : v) x = std::pow(rng.uniform_pos(), -1.0 / alpha);
        const double h = hill_estimator(v).alpha;
        const double lambda = std::exp(6.0 * rng.uniform() - 3.0);
        for (auto& x : v) x *= lambda;
        hill_dev = std::max(hill_dev, std::abs(hill_estimator(v).alpha - h) / h);
    }
    os << "Hill scale deviation " << fmt(hill_dev) << "; ";

    // Goldie's condition implies C_L > 0; letac constants ignore weights and order.
    std::size_t goldie_met = 0, goldie_fail = 0, weight_fail = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto m = random_cramer_measure(rng);
        if (goldie_sufficient(m).condition_met()) {
            ++goldie_met;
            if (!letac_positivity(m).positive) ++goldie_fail;
        }
        AtomicMeasure w = m;
        std::reverse(w.atoms.begin(), w.atoms.end());
        double total = 0.0;
        for (auto& at : w.atoms) total += (at.weight = 0.05 + rng.uniform());
        for (auto& at : w.atoms) at.weight /= total;
        const auto k1 = letac_constants(m), k2 = letac_constants(normalized(w));
        if (k1.n1 != k2.n1 || k1.n2 != k2.n2 || k1.n3 != k2.n3 || k1.n != k2.n) ++weight_fail;
    }
    os << "Goldie met " << goldie_met << "/1000 with " << goldie_fail << " non-positive; weight-invariance failures "
       << weight_fail << "; ";

    // 1 vs N workers.
    std::size_t repro_fail = 0;
    SimConfig cfg;
    cfg.n_samples = 20000;
    cfg.chains = 13;
    cfg.seed = o.seed + 99;
    for (FamilyKind f : {FamilyKind::Affine, FamilyKind::Letac, FamilyKind::MaxZero, FamilyKind::Extremal}) {
        cfg.threads = 1;
        const auto a = sample_stationary(f, Driver{counterexample()}, cfg);
        cfg.threads = o.workers;
        const auto b = sample_stationary(f, Driver{counterexample()}, cfg);
        if (std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) != 0) ++repro_fail;
    }
    cfg.threads = 1;
    const auto p1 = sample_perpetuity(Driver{positive_affine()}, cfg);
    const auto s1 = sample_sup_pi(Driver{three_half()}, cfg);
    cfg.threads = o.workers;
    const auto pn = sample_perpetuity(Driver{positive_affine()}, cfg);
    const auto sn = sample_sup_pi(Driver{three_half()}, cfg);
    if (digest_values(p1.values) != digest_values(pn.values)) ++repro_fail;
    if (digest_values(s1.values) != digest_values(sn.values)) ++repro_fail;
    os << "1 vs " << o.workers << " worker mismatches " << repro_fail;

    r.passed = convex_fail == 0 && hill_dev <= 1e-12 && goldie_met > 0 && goldie_fail == 0 && weight_fail == 0 &&
               repro_fail == 0;
    r.detail = os.str();
    return r;
}

} // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o = {},
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
    namespace ad = acceptance_detail;
    const std::vector<std::pair<int, std::function<CriterionResult()>>> suite = {
        {1, [] { return ad::cramer_closed_forms(); }},
        {2, [] { return ad::counterexample_analytic(); }},
        {3, [&] { return ad::counterexample_empirical(o); }},
        {4, [&] { return ad::positive_affine_tail(o); }},
        {5, [&] { return ad::forward_backward(o); }},
        {6, [&] { return ad::sup_pi_tail(o); }},
        {7, [&] { return ad::domination(o); }},
        {8, [&] { return ad::degeneracy_equivariance(o); }},
        {9, [&] { return ad::property_suites(o); }},
    };
    std::vector<CriterionResult> out;
    for (const auto& [id, fn] : suite) {
        if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), id) == o.only.end()) continue;
        const auto t0 = ad::Clock::now();
        CriterionResult res;
        try {
            res = fn();
        } catch (const std::exception& e) {
            res = {id, "criterion " + std::to_string(id), false, std::string("threw: ") + e.what(), 0.0};
        }
        res.seconds = ad::seconds_since(t0);
        if (on_result) on_result(res);
        out.push_back(std::move(res));
    }
    return out;
}

inline std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << " -- " << r.detail << " ("
       << num(std::round(r.seconds * 100.0) / 100.0) << " s)";
    return os.str();
}

} // namespace afftail
