#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ltsim/diffusion.hpp"
#include "ltsim/rng.hpp"

namespace ltsim {

// ---------------------------------------------------------------------------
// Path: a discretized trajectory on a uniform grid
// ---------------------------------------------------------------------------

struct Path {
    std::vector<Real> times;
    std::vector<Real> values;
    bool killed = false;
    Real lifetime = kInf;
    std::uint64_t seed = 0;          // master seed
    std::uint64_t stream_index = 0;  // per-path stream

    size_t size() const { return times.size(); }
};

// ---------------------------------------------------------------------------
// Stop rules
// ---------------------------------------------------------------------------

struct StopRule {
    std::optional<Real> horizon;
    struct HitLevel {
        Real z = 0.0;
        Real tol = 0.0;
    };
    std::optional<HitLevel> hit;
    struct LocalTimeReached {
        Real level = 0.0;      // y
        Real bandwidth = 0.0;  // eps; 0 means the default 5 sigma(y) sqrt(dt)
        Real a = 0.0;          // stop at tau^y_{a-}
    };
    std::optional<LocalTimeReached> local_time;
    bool boundary_exit = true;

    bool any() const { return horizon || hit || local_time || boundary_exit; }
};

enum class StopReason {
    Horizon,
    KilledLeft,
    KilledRight,
    HitLevel,
    LocalTimeReached,
    EscapeLow,
    EscapeHigh,
    Observer,
    MaxSteps,
};

const char* to_string(StopReason r);

// ---------------------------------------------------------------------------
// Low-level walk
// ---------------------------------------------------------------------------

struct WalkConfig {
    Real x0 = 0.0;
    Real t0 = 0.0;
    Real dt = 1e-4;
    Real horizon = kInf;  // absolute time
    Real left = -kInf, right = kInf;
    bool kill_left = false, kill_right = false;
    bool reflect_left = false, reflect_right = false;  // inaccessible finite ends
    Real drift_cap = 0.0;    // 0 -> default 1/sqrt(dt)
    Real snap_tol = 1e-12;
    // Brownian-bridge crossing correction for a regular boundary: adds the
    // conditional within-step crossing probability exp(-2 d0 d1 / (sigma^2 dt)).
    bool bb_correct_left = false, bb_correct_right = false;
    std::optional<StopRule::HitLevel> hit;
    // One-sided escape thresholds in state space (exit-side decision for
    // boundaries at infinite scale distance).
    std::optional<Real> escape_low, escape_high;
    std::uint64_t max_steps = 1ull << 33;
};

struct WalkResult {
    Real t_end = 0.0;
    Real x_end = 0.0;
    StopReason reason = StopReason::Horizon;
    bool killed = false;
    Real lifetime = kInf;
    std::uint64_t steps = 0;
};

struct NullObserver {
    // Returns true to keep walking. May mutate x_new (teleports) on steps that
    // did not kill or stop.
    bool operator()(Real /*t_new*/, Real /*x_prev*/, Real& /*x_new*/) { return true; }
};

// Euler-Maruyama walk with killing at accessible boundaries. Drift values are
// clamped to |drift| <= drift_cap before stepping so a single step cannot
// overshoot a singular level. Observer is invoked once per accepted step.
template <class DriftF, class SigmaF, class ObsF>
WalkResult walk(const WalkConfig& cfg, DriftF&& drift, SigmaF&& sigma,
                NormalStream& ns, ObsF&& obs) {
    const Real dt = cfg.dt;
    const Real sqdt = std::sqrt(dt);
    const Real cap = cfg.drift_cap > 0.0 ? cfg.drift_cap : 1.0 / sqdt;

    WalkResult res;
    Real x = cfg.x0;
    std::uint64_t k = 0;

    while (true) {
        const Real t_new = cfg.t0 + static_cast<Real>(k + 1) * dt;
        if (cfg.t0 + static_cast<Real>(k) * dt >= cfg.horizon - 0.5 * dt) {
            res.reason = StopReason::Horizon;
            break;
        }
        if (k >= cfg.max_steps) {
            res.reason = StopReason::MaxSteps;
            break;
        }

        const Real sg = sigma(x);
        Real b = drift(x);
        if (!std::isfinite(b) || !std::isfinite(sg)) {
            throw std::runtime_error("walk: non-finite coefficient at x = " +
                                     std::to_string(x));
        }
        if (b > cap) b = cap;
        if (b < -cap) b = -cap;

        const Real z = ns.normal();
        Real x_new = x + b * dt + sg * sqdt * z;
        bool fatal = false;

        if (cfg.kill_right && x_new >= cfg.right - cfg.snap_tol) {
            x_new = cfg.right;
            res.reason = StopReason::KilledRight;
            fatal = true;
        } else if (cfg.kill_left && x_new <= cfg.left + cfg.snap_tol) {
            x_new = cfg.left;
            res.reason = StopReason::KilledLeft;
            fatal = true;
        } else {
            if (cfg.bb_correct_right && cfg.kill_right) {
                const Real d0 = cfg.right - x, d1 = cfg.right - x_new;
                const Real p = std::exp(-2.0 * d0 * d1 / (sg * sg * dt));
                if (ns.uniform() < p) {
                    x_new = cfg.right;
                    res.reason = StopReason::KilledRight;
                    fatal = true;
                }
            }
            if (!fatal && cfg.bb_correct_left && cfg.kill_left) {
                const Real d0 = x - cfg.left, d1 = x_new - cfg.left;
                const Real p = std::exp(-2.0 * d0 * d1 / (sg * sg * dt));
                if (ns.uniform() < p) {
                    x_new = cfg.left;
                    res.reason = StopReason::KilledLeft;
                    fatal = true;
                }
            }
        }

        if (!fatal) {
            // Reflection guard at inaccessible finite endpoints: the continuous
            // process never crosses; a discrete overshoot is folded back.
            if (cfg.reflect_left && x_new <= cfg.left) {
                x_new = cfg.left + (cfg.left - x_new);
                if (x_new >= cfg.right) x_new = 0.5 * (cfg.left + cfg.right);
            }
            if (cfg.reflect_right && x_new >= cfg.right) {
                x_new = cfg.right - (x_new - cfg.right);
                if (x_new <= cfg.left) x_new = 0.5 * (cfg.left + cfg.right);
            }
        }

        const Real x_prev = x;
        const bool keep_going = obs(t_new, x_prev, x_new);
        ++k;
        res.steps = k;

        if (fatal) {
            res.killed = true;
            res.lifetime = t_new;
            res.t_end = t_new;
            res.x_end = x_new;
            return res;
        }
        x = x_new;
        if (!keep_going) {
            res.reason = StopReason::Observer;
            res.t_end = t_new;
            res.x_end = x;
            return res;
        }
        if (cfg.hit) {
            const Real gap_prev = x_prev - cfg.hit->z;
            const Real gap_new = x - cfg.hit->z;
            if (std::fabs(gap_new) <= cfg.hit->tol || gap_prev * gap_new <= 0.0) {
                res.reason = StopReason::HitLevel;
                res.t_end = t_new;
                res.x_end = x;
                return res;
            }
        }
        if (cfg.escape_low && x <= *cfg.escape_low) {
            res.reason = StopReason::EscapeLow;
            res.t_end = t_new;
            res.x_end = x;
            return res;
        }
        if (cfg.escape_high && x >= *cfg.escape_high) {
            res.reason = StopReason::EscapeHigh;
            res.t_end = t_new;
            res.x_end = x;
            return res;
        }
    }
    res.t_end = cfg.t0 + static_cast<Real>(k) * dt;
    res.x_end = x;
    return res;
}

// ---------------------------------------------------------------------------
// High-level simulate and related operations
// ---------------------------------------------------------------------------

// One Euler-Maruyama step (exposed for tests and composition).
inline Real em_step(Real x, Real drift_val, Real sigma_val, Real dt, Real z) {
    if (!std::isfinite(x) || !std::isfinite(drift_val) || !std::isfinite(sigma_val) ||
        !(dt > 0.0))
        throw std::runtime_error("em_step: non-finite input");
    return x + drift_val * dt + sigma_val * std::sqrt(dt) * z;
}

struct SimOptions {
    Real drift_cap = 0.0;  // 0 -> 1/sqrt(dt)
    bool bb_correction = false;
    bool record_path = true;
    // Exit-side decision thresholds in scale units (eta); used to derive
    // escape levels for ends at infinite scale distance from nothing; ends at
    // finite scale distance use s^{-1}(eta), s^{-1}(1 - eta).
    Real eta = 1e-3;
};

// Boundary treatment derived from classification, cached per spec.
struct BoundaryPolicy {
    bool kill_left = false, kill_right = false;
    bool reflect_left = false, reflect_right = false;
};

BoundaryPolicy boundary_policy(const DiffusionSpec& spec, const ScaleTable& scale);

// Weak-solution sampler: steps drift_fn/spec.sigma until the first triggered
// stop rule. A grid crossing of an accessible boundary kills the path.
Path simulate(const DiffusionSpec& spec, const Fn1& drift_fn, Real x0,
              const StopRule& stop, Real dt, const RandomSource& rng,
              std::uint64_t stream_index, const SimOptions& opt = {});

// First grid time with a sign change of (value - z) or |value - z| <= tol;
// +inf if none.
Real first_hitting_time(const Path& path, Real z, Real tol);

// Last grid crossing time of level z; -inf if never crossed. `warning` is set
// when the path terminates near z (the last passage may be underestimated).
struct LastPassage {
    Real time = -kInf;
    bool warning = false;
};
LastPassage last_passage_time(const Path& path, Real z, Real tol);

// ---------------------------------------------------------------------------
// Batch helpers
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, n); uses a small thread pool when hardware allows.
// Work must write only to per-index slots.
void parallel_paths(std::size_t n, const std::function<void(std::size_t)>& fn);

struct BatchSummary {
    std::size_t n_paths = 0;
    Real dt = 0.0;
    Real killed_fraction = 0.0;
    Real terminal_mean = 0.0, terminal_sd = 0.0, terminal_min = 0.0, terminal_max = 0.0;
};

BatchSummary summarize_terminals(const std::vector<Real>& terminal,
                                 const std::vector<bool>& killed, Real dt);

void write_path_csv(const Path& path, const std::string& filename);
std::string batch_summary_json(const BatchSummary& s);

}  // namespace ltsim
