#pragma once
//! Forward iteration of affine-type Lipschitz recursions, backward
//! perpetuities and the running maximum of products of multipliers.
//!
//! Work is split into chains. Chain i owns the contiguous block of output
//! indices [i*n/chains, (i+1)*n/chains) and draws from its own stream seeded by
//! derive_subseed(seed, i). Workers pick chains round-robin; since each chain
//! writes only its own block, output is identical for any worker count.

#include "afftail/error.hpp"
#include "afftail/measure.hpp"
#include "afftail/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace afftail {

enum class FamilyKind { Affine, Extremal, Letac, MaxZero, UserLipschitz };

inline const char* to_string(FamilyKind k) noexcept {
    switch (k) {
    case FamilyKind::Affine: return "affine";
    case FamilyKind::Extremal: return "extremal";
    case FamilyKind::Letac: return "letac";
    case FamilyKind::MaxZero: return "maxzero";
    case FamilyKind::UserLipschitz: return "user";
    }
    return "unknown";
}

inline FamilyKind parse_family(std::string_view s) {
    if (s == "affine") return FamilyKind::Affine;
    if (s == "extremal") return FamilyKind::Extremal;
    if (s == "letac") return FamilyKind::Letac;
    if (s == "maxzero" || s == "max-zero") return FamilyKind::MaxZero;
    throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(s) +
                                                "' (expected affine, extremal, letac, maxzero)");
}

/// The pair (A, B) of a map x -> A x + B.
struct AffinePair {
    double a = 1.0;
    double b = 0.0;
};

/// A random Lipschitz map Psi(atom, x) together with its Lipschitz constant and
/// an affine minorant Psi(atom, x) >= A x + B.
class MapFamily {
public:
    using MapFn = std::function<double(const Atom&, double)>;
    using LipschitzFn = std::function<double(const Atom&)>;
    using MinorantFn = std::function<AffinePair(const Atom&)>;

    MapFamily(FamilyKind kind = FamilyKind::Affine) : kind_(kind) {  // NOLINT(google-explicit-constructor)
        if (kind == FamilyKind::UserLipschitz)
            throw Error(ErrorCode::InvalidArgument, "use MapFamily::user for user-defined maps");
    }

    /// User map; the caller vouches that the minorant holds on the support of
    /// the stationary law.
    static MapFamily user(MapFn map, LipschitzFn lipschitz, MinorantFn minorant) {
        if (!map || !lipschitz || !minorant)
            throw Error(ErrorCode::InvalidArgument, "user family needs map, Lipschitz bound and minorant");
        MapFamily f;
        f.kind_ = FamilyKind::UserLipschitz;
        f.map_ = std::move(map);
        f.lipschitz_ = std::move(lipschitz);
        f.minorant_ = std::move(minorant);
        return f;
    }

    [[nodiscard]] FamilyKind kind() const noexcept { return kind_; }

    [[nodiscard]] double apply(const Atom& at, double x) const {
        switch (kind_) {
        case FamilyKind::Affine: return at.a * x + at.b;
        case FamilyKind::Extremal: return std::max(at.a * x, at.b);
        case FamilyKind::Letac: return std::max(at.a * x + at.b, at.a * letac_c(at) + at.b);
        case FamilyKind::MaxZero: return std::max(at.a * x + at.b, 0.0);
        case FamilyKind::UserLipschitz: return map_(at, x);
        }
        return x;
    }

    [[nodiscard]] double lipschitz(const Atom& at) const {
        return kind_ == FamilyKind::UserLipschitz ? lipschitz_(at) : at.a;
    }

    [[nodiscard]] AffinePair minorant(const Atom& at) const {
        switch (kind_) {
        case FamilyKind::Extremal: return {at.a, -std::abs(at.b)};
        case FamilyKind::UserLipschitz: return minorant_(at);
        default: return {at.a, at.b};
        }
    }

private:
    static double letac_c(const Atom& at) {
        if (!at.c) throw Error(ErrorCode::InvalidMeasure, "letac family needs c on every atom");
        return *at.c;
    }

    FamilyKind kind_ = FamilyKind::Affine;
    MapFn map_;
    LipschitzFn lipschitz_;
    MinorantFn minorant_;
};

/// Draws i.i.d. driver atoms.
class DriverSampler {
public:
    explicit DriverSampler(const Driver& d) {
        if (const auto* m = std::get_if<AtomicMeasure>(&d)) {
            validate(*m);
            atoms_ = m->atoms;
            double acc = 0.0;
            for (const Atom& at : atoms_) {
                acc += at.weight;
                cumulative_.push_back(acc);
            }
            for (double& c : cumulative_) c /= acc;
            cumulative_.back() = 1.0;
        } else {
            param_ = std::get<ParametricDriver>(d);
            validate(*param_);
        }
    }

    Atom draw(Xoshiro256& rng) const {
        if (param_) {
            const double za = rng.normal();
            const double zb = rng.normal();
            return Atom{std::exp(param_->mu_log_a + param_->sigma_log_a * za),
                        param_->mu_b + param_->sigma_b * zb, param_->c, 1.0};
        }
        const double u = rng.uniform();
        std::size_t i = 0;
        while (i + 1 < cumulative_.size() && u >= cumulative_[i]) ++i;
        return atoms_[i];
    }

private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
    std::optional<ParametricDriver> param_;
};

struct SimConfig {
    std::uint64_t burn_in = 0;  // 0 selects default_burn_in
    std::size_t n_samples = 1000;
    std::size_t chains = 64;
    std::uint64_t seed = 0;
    double truncation_eps = 1e-12;
    double pi_floor = 1e-8;
    std::uint64_t max_steps = 100'000'000;
    double x0 = 0.0;
    unsigned threads = 1;
};

inline void validate(const SimConfig& c) {
    if (c.chains < 1) throw Error(ErrorCode::InvalidArgument, "chains must be >= 1");
    if (!(c.truncation_eps > 0.0 && c.truncation_eps < 1.0))
        throw Error(ErrorCode::InvalidArgument, "truncation_eps must lie in (0, 1)");
    if (!(c.pi_floor > 0.0 && c.pi_floor < 1.0))
        throw Error(ErrorCode::InvalidArgument, "pi_floor must lie in (0, 1)");
    if (c.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be >= 1");
    if (!std::isfinite(c.x0)) throw Error(ErrorCode::InvalidArgument, "x0 must be finite");
}

/// Steps needed for the a-priori contraction exp(n E log A) to fall below 1e-40.
inline std::uint64_t default_burn_in(double mean_log_a) {
    if (!(mean_log_a < 0.0))
        throw Error(ErrorCode::NotContracting, "E log A >= 0; the recursion does not contract");
    return static_cast<std::uint64_t>(std::ceil(40.0 * std::numbers::ln10 / -mean_log_a));
}

inline double require_contracting(const Driver& d) {
    const double m = mean_log_a(d);
    if (!(m < 0.0))
        throw Error(ErrorCode::NotContracting, "E log A >= 0; the recursion does not contract");
    return m;
}

struct ForwardResult {
    double value = 0.0;
    std::vector<double> trajectory;  // X_1..X_n when requested
};

/// X_n = Psi_n(X_{n-1}) from X_0 = x0.
inline ForwardResult iterate_forward(const MapFamily& family, const DriverSampler& sampler,
                                     double x0, std::uint64_t n, Xoshiro256& rng,
                                     bool record_trajectory = false) {
    ForwardResult out;
    if (record_trajectory) out.trajectory.reserve(n);
    double x = x0;
    for (std::uint64_t step = 1; step <= n; ++step) {
        x = family.apply(sampler.draw(rng), x);
        if (!std::isfinite(x))
            throw Error(ErrorCode::NonFinite, "non-finite value at step " + std::to_string(step));
        if (record_trajectory) out.trajectory.push_back(x);
    }
    out.value = x;
    return out;
}

enum class BatchKind { Stationary, Perpetuity, SupPi };

inline const char* to_string(BatchKind k) noexcept {
    switch (k) {
    case BatchKind::Stationary: return "stationary";
    case BatchKind::Perpetuity: return "perpetuity";
    case BatchKind::SupPi: return "sup_pi";
    }
    return "unknown";
}

/// Two chains started at -1e6 and +1e6 under one atom stream.
struct CouplingDiagnostic {
    double max_gap = 0.0;
    double apriori_bound = 0.0;  // 2e6 * exp(burn_in * E log A)
    double safety = 1.0;         // exp(4 sd(log A) sqrt(burn_in))
    std::size_t pairs = 0;

    [[nodiscard]] bool ok() const noexcept { return max_gap <= apriori_bound * safety; }
};

struct SampleBatch {
    BatchKind kind = BatchKind::Stationary;
    std::vector<double> values;
    SimConfig config;  // burn_in resolved
    FamilyKind family = FamilyKind::Affine;
    std::string label;
    std::vector<std::uint64_t> subseeds;
    CouplingDiagnostic coupling;
    // Perpetuity: largest |Pi_n| at stop. SupPi: largest stop step.
    double worst_truncation = 0.0;
    std::uint64_t max_stop_step = 0;
    std::size_t max_steps_hits = 0;
};

/// FNV-1a over a byte range.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t digest_values(const std::vector<double>& v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : v) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &x, sizeof bits);
        h = fnv1a(&bits, sizeof bits, h);
    }
    return h;
}

inline std::uint64_t config_digest(const SimConfig& c, BatchKind kind, FamilyKind family,
                                   std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const auto& value) { h = fnv1a(&value, sizeof value, h); };
    mix(c.burn_in);
    mix(static_cast<std::uint64_t>(c.n_samples));
    mix(static_cast<std::uint64_t>(c.chains));
    mix(c.seed);
    mix(c.truncation_eps);
    mix(c.pi_floor);
    mix(c.max_steps);
    mix(c.x0);
    mix(static_cast<int>(kind));
    mix(static_cast<int>(family));
    return fnv1a(label.data(), label.size(), h);
}

namespace detail {

/// Run fn(chain, begin, end) for every chain, spreading chains over workers.
/// The first failure by chain index is rethrown after all workers join.
template <typename Fn>
void run_chains(const SimConfig& cfg, Fn&& fn) {
    const std::size_t chains = std::max<std::size_t>(1, std::min(cfg.chains, std::max<std::size_t>(1, cfg.n_samples)));
    std::vector<std::exception_ptr> errors(chains);
    auto work = [&](std::size_t worker, std::size_t workers) {
        for (std::size_t c = worker; c < chains; c += workers) {
            const std::size_t begin = c * cfg.n_samples / chains;
            const std::size_t end = (c + 1) * cfg.n_samples / chains;
            try {
                fn(c, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads, chains));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::vector<std::uint64_t> subseeds_for(const SimConfig& cfg) {
    const std::size_t chains = std::max<std::size_t>(1, std::min(cfg.chains, std::max<std::size_t>(1, cfg.n_samples)));
    std::vector<std::uint64_t> seeds(chains);
    for (std::size_t c = 0; c < chains; ++c) seeds[c] = derive_subseed(cfg.seed, c);
    return seeds;
}

} // namespace detail

inline CouplingDiagnostic coupling_diagnostic(const MapFamily& family, const Driver& driver,
                                              std::uint64_t burn_in, std::uint64_t seed,
                                              std::size_t pairs = 16) {
    const double m = require_contracting(driver);
    const DriverSampler sampler(driver);
    CouplingDiagnostic diag;
    diag.pairs = pairs;
    diag.apriori_bound = 2e6 * std::exp(static_cast<double>(burn_in) * m);
    diag.safety = std::exp(4.0 * sd_log_a(driver) * std::sqrt(static_cast<double>(burn_in)));
    for (std::size_t p = 0; p < pairs; ++p) {
        Xoshiro256 rng(derive_subseed(seed ^ 0xC0FFEE1234567890ULL, p));
        double lo = -1e6;
        double hi = 1e6;
        for (std::uint64_t step = 0; step < burn_in; ++step) {
            const Atom at = sampler.draw(rng);
            lo = family.apply(at, lo);
            hi = family.apply(at, hi);
        }
        diag.max_gap = std::max(diag.max_gap, std::abs(hi - lo));
    }
    return diag;
}

/// n_samples endpoints of independent chains of length burn_in started at x0.
inline SampleBatch sample_stationary(const MapFamily& family, const Driver& driver, SimConfig cfg) {
    validate(cfg);
    const double m = require_contracting(driver);
    if (cfg.burn_in == 0) cfg.burn_in = default_burn_in(m);
    const DriverSampler sampler(driver);

    SampleBatch batch;
    batch.kind = BatchKind::Stationary;
    batch.config = cfg;
    batch.family = family.kind();
    batch.label = label_of(driver);
    batch.subseeds = detail::subseeds_for(cfg);
    batch.values.assign(cfg.n_samples, 0.0);

    detail::run_chains(cfg, [&](std::size_t chain, std::size_t begin, std::size_t end) {
        Xoshiro256 rng(batch.subseeds[chain]);
        for (std::size_t i = begin; i < end; ++i)
            batch.values[i] = iterate_forward(family, sampler, cfg.x0, cfg.burn_in, rng).value;
    });
    batch.coupling = coupling_diagnostic(family, driver, cfg.burn_in, cfg.seed);
    return batch;
}

struct PerpetuityDraw {
    double value = 0.0;
    double pi_reached = 1.0;  // Pi_n when summation stopped
    std::uint64_t steps = 0;
    bool max_steps_exceeded = false;
};

/// One draw of sum_{k>=1} Pi_{k-1} B_k, truncated once Pi_n < truncation_eps.
inline PerpetuityDraw backward_perpetuity(const DriverSampler& sampler, const SimConfig& cfg,
                                          Xoshiro256& rng) {
    PerpetuityDraw d;
    double pi = 1.0;
    double sum = 0.0;
    while (true) {
        const Atom at = sampler.draw(rng);
        sum += pi * at.b;
        pi *= at.a;
        ++d.steps;
        if (pi < cfg.truncation_eps) break;
        if (d.steps >= cfg.max_steps) {
            d.max_steps_exceeded = true;
            break;
        }
    }
    if (!std::isfinite(sum))
        throw Error(ErrorCode::NonFinite, "perpetuity sum not finite after " + std::to_string(d.steps) + " steps");
    d.value = sum;
    d.pi_reached = pi;
    return d;
}

inline SampleBatch sample_perpetuity(const Driver& driver, SimConfig cfg) {
    validate(cfg);
    require_contracting(driver);
    const DriverSampler sampler(driver);

    SampleBatch batch;
    batch.kind = BatchKind::Perpetuity;
    batch.config = cfg;
    batch.family = FamilyKind::Affine;
    batch.label = label_of(driver);
    batch.subseeds = detail::subseeds_for(cfg);
    batch.values.assign(cfg.n_samples, 0.0);
    std::vector<double> worst(batch.subseeds.size(), 0.0);
    std::vector<std::size_t> hits(batch.subseeds.size(), 0);

    detail::run_chains(cfg, [&](std::size_t chain, std::size_t begin, std::size_t end) {
        Xoshiro256 rng(batch.subseeds[chain]);
        for (std::size_t i = begin; i < end; ++i) {
            const PerpetuityDraw d = backward_perpetuity(sampler, cfg, rng);
            batch.values[i] = d.value;
            worst[chain] = std::max(worst[chain], d.pi_reached);
            hits[chain] += d.max_steps_exceeded ? 1 : 0;
        }
    });
    for (std::size_t c = 0; c < worst.size(); ++c) {
        batch.worst_truncation = std::max(batch.worst_truncation, worst[c]);
        batch.max_steps_hits += hits[c];
    }
    return batch;
}

struct SupPiDraw {
    double max = 1.0;
    std::uint64_t stop_step = 0;
    bool max_steps_exceeded = false;
};

/// One draw of M = max_{n>=0} Pi_n, stopping once Pi_n < pi_floor * running max.
inline SupPiDraw sup_pi(const DriverSampler& sampler, const SimConfig& cfg, Xoshiro256& rng) {
    SupPiDraw d;
    double pi = 1.0;
    while (true) {
        pi *= sampler.draw(rng).a;
        ++d.stop_step;
        if (pi > d.max) d.max = pi;
        if (pi < cfg.pi_floor * d.max) break;
        if (d.stop_step >= cfg.max_steps) {
            d.max_steps_exceeded = true;
            break;
        }
    }
    if (!std::isfinite(d.max))
        throw Error(ErrorCode::NonFinite, "running product overflowed at step " + std::to_string(d.stop_step));
    return d;
}

inline SampleBatch sample_sup_pi(const Driver& driver, SimConfig cfg) {
    validate(cfg);
    require_contracting(driver);
    const DriverSampler sampler(driver);

    SampleBatch batch;
    batch.kind = BatchKind::SupPi;
    batch.config = cfg;
    batch.family = FamilyKind::Affine;
    batch.label = label_of(driver);
    batch.subseeds = detail::subseeds_for(cfg);
    batch.values.assign(cfg.n_samples, 0.0);
    std::vector<std::uint64_t> stop(batch.subseeds.size(), 0);
    std::vector<std::size_t> hits(batch.subseeds.size(), 0);

    detail::run_chains(cfg, [&](std::size_t chain, std::size_t begin, std::size_t end) {
        Xoshiro256 rng(batch.subseeds[chain]);
        for (std::size_t i = begin; i < end; ++i) {
            const SupPiDraw d = sup_pi(sampler, cfg, rng);
            batch.values[i] = d.max;
            stop[chain] = std::max(stop[chain], d.stop_step);
            hits[chain] += d.max_steps_exceeded ? 1 : 0;
        }
    });
    for (std::size_t c = 0; c < stop.size(); ++c) {
        batch.max_stop_step = std::max(batch.max_stop_step, stop[c]);
        batch.max_steps_hits += hits[c];
    }
    return batch;
}

/// Runs `high` and the affine recursion built from its minorant on one shared
/// atom stream per path, and returns max over paths and steps of
/// (minorant iterate - high iterate). Non-positive when the domination holds.
inline double pathwise_domination_check(const MapFamily& high, const Driver& driver,
                                        std::size_t n_paths, std::uint64_t n_steps,
                                        std::uint64_t seed, double x0 = 0.0) {
    const DriverSampler sampler(driver);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n_paths; ++p) {
        Xoshiro256 rng(derive_subseed(seed, p));
        double x = x0;
        double y = x0;
        for (std::uint64_t s = 0; s < n_steps; ++s) {
            const Atom at = sampler.draw(rng);
            const AffinePair low = high.minorant(at);
            x = high.apply(at, x);
            y = low.a * y + low.b;
            worst = std::max(worst, y - x);
        }
    }
    return worst;
}

} // namespace afftail
