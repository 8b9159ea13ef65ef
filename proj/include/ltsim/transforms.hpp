#pragma once

#include <functional>
#include <vector>

#include "ltsim/diffusion.hpp"
#include "ltsim/engine.hpp"
#include "ltsim/local_time.hpp"

namespace ltsim {

enum class TransformKind { Recurrent, BesselLow, BesselHigh, CondExitLow, CondExitHigh };
enum class BesselSide { Low, High };

const char* to_string(TransformKind k);

// ---------------------------------------------------------------------------
// Drift evaluators (total drift including the base b)
// ---------------------------------------------------------------------------

// u_x(x, y) / u(x, y) with the left-derivative convention at x = y.
Real log_deriv_u(const ScaleTable& scale, Real x, Real y);

// Recurrent-transform drift: b + sigma^2 u_x(., y)/u(., y). Makes the process
// hit y indefinitely; the local time at y then grows without bound.
Real recurrent_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y, Real x);

// Bessel-type drift on (l, y) or (y, r): pushes away from y, which becomes an
// entrance boundary of the transformed diffusion.
Real bessel_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y,
                  BesselSide side, Real x);

// Drift of the side process conditioned to converge to y (h-transform with
// h = s on the low side, h = 1 - s on the high side). Used by the
// time-reversal check.
Real cond_exit_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y,
                     BesselSide side, Real x);

// ---------------------------------------------------------------------------
// TransformedSpec: a drift change bound to a base diffusion
// ---------------------------------------------------------------------------

struct TransformedSpec {
    DiffusionSpec base;
    ScaleTable scale;
    TransformKind kind = TransformKind::Recurrent;
    Real y = 0.0;
    Real dom_left = -kInf, dom_right = kInf;  // effective domain
    Fn1 drift;                                 // composed total drift
    BoundaryPolicy base_policy;                // killing policy of the base diffusion

    BesselSide side() const {
        return (kind == TransformKind::BesselLow || kind == TransformKind::CondExitLow)
                   ? BesselSide::Low
                   : BesselSide::High;
    }
};

TransformedSpec make_transformed(const DiffusionSpec& spec, const ScaleTable& scale,
                                 TransformKind kind, Real y);

// ---------------------------------------------------------------------------
// Entrance launchers for the Bessel-type motions started at y
// ---------------------------------------------------------------------------

struct EntranceLauncher {
    enum class Mode { Offset, ExactBessel3 };
    Mode mode = Mode::Offset;
    Real delta_e = 0.0;  // 0 -> default from the scale criterion
    Real du = 0.0;       // exact-mode clock quantum per Bessel-3 step; 0 -> dt/8
};

// delta_e such that the side scale magnitude at y -/+ delta_e is >= 1e6
// (deep in the entrance regime), floored at a machine-scale offset.
Real default_entrance_offset(const ScaleTable& scale, Real y, BesselSide side);

// Walks a Bessel-type motion launched from its entrance boundary y, feeding
// every uniform-dt step through obs(t_new, x_prev, x_new). Offset mode starts
// at y -/+ delta_e and uses the Euler walk; exact mode maps a 3-dimensional
// Bessel path (norm of a 3-d Brownian motion, so the entrance start is exact)
// through the side scale and an additive-functional time change, then
// resamples onto the uniform grid.
struct LaunchConfig {
    Real dt = 1e-4;
    Real horizon = kInf;
    Real drift_cap = 0.0;
    std::uint64_t max_steps = 1ull << 33;
};

template <class ObsF>
WalkResult launch_entrance_walk(const TransformedSpec& ts, const EntranceLauncher& launcher,
                                const LaunchConfig& cfg, NormalStream& ns, ObsF&& obs);

// Path-returning wrapper (the spec-level operation).
Path launch_entrance(const TransformedSpec& ts, const EntranceLauncher& launcher,
                     Real horizon, Real dt, const RandomSource& rng,
                     std::uint64_t stream_index);

// ---------------------------------------------------------------------------
// Survival-probability estimator from the recurrent transform
// ---------------------------------------------------------------------------

// Importance-sampling estimate of P^x(zeta > T):
//   u(x,y) * mean_i [ exp(-lambda(y) Lhat^y_T) / u(X_T, y) ]
// over recurrent-transform paths started at x.
struct SurvivalEstimate {
    Real value = 0.0;
    Real std_error = 0.0;
    std::size_t n = 0;
};

SurvivalEstimate survival_estimator(const DiffusionSpec& spec, const ScaleTable& scale,
                                    Real y, Real x, Real horizon, Real dt,
                                    std::size_t n_paths, const RandomSource& rng,
                                    Real bandwidth = 0.0);

// ---------------------------------------------------------------------------
// Implementation of the templated launcher
// ---------------------------------------------------------------------------

namespace detail {

struct ExactLaunchMaps {
    // Normalized side scale st: side domain -> (-inf, 0) (high side) or
    // (0, +inf) (low side), with st = 0 at the accessible end.
    Real s_y = 0.0;        // s(y)
    Real s_acc = 0.0;      // side-scale value at the accessible end
    Real q_sign = 0.0;     // -1 high side, +1 low side
    const ScaleTable* scale = nullptr;
    Real y = 0.0;

    // Inverts st(x) = q back to state space.
    Real state_from_q(Real q) const {
        const Real denom = q + s_acc;
        const Real target = s_y - 1.0 / denom;
        return scale_inverse(*scale, target, y);
    }
    Real st_deriv(Real x) const {
        const Real gap = s_y - scale->s(x);
        return scale->s_deriv(x) / (gap * gap);
    }
};

ExactLaunchMaps exact_launch_maps(const TransformedSpec& ts);

}  // namespace detail

template <class ObsF>
WalkResult launch_entrance_walk(const TransformedSpec& ts, const EntranceLauncher& launcher,
                                const LaunchConfig& cfg, NormalStream& ns, ObsF&& obs) {
    if (ts.kind != TransformKind::BesselLow && ts.kind != TransformKind::BesselHigh)
        throw InvalidSpecError("launch_entrance: transform must be a Bessel-type motion");
    const bool high = ts.kind == TransformKind::BesselHigh;

    if (launcher.mode == EntranceLauncher::Mode::Offset) {
        Real delta = launcher.delta_e > 0.0 ? launcher.delta_e
                                            : default_entrance_offset(ts.scale, ts.y,
                                                                      high ? BesselSide::High
                                                                           : BesselSide::Low);
        WalkConfig wc;
        wc.x0 = high ? ts.y + delta : ts.y - delta;
        wc.dt = cfg.dt;
        wc.horizon = cfg.horizon;
        wc.left = ts.dom_left;
        wc.right = ts.dom_right;
        wc.drift_cap = cfg.drift_cap;
        wc.max_steps = cfg.max_steps;
        // y is an entrance boundary of the transformed diffusion: reflect the
        // discretization overshoot. The far end keeps the base policy.
        if (high) {
            wc.reflect_left = true;
            wc.kill_right = ts.base_policy.kill_right;
            wc.reflect_right = ts.base_policy.reflect_right;
        } else {
            wc.reflect_right = true;
            wc.kill_left = ts.base_policy.kill_left;
            wc.reflect_left = ts.base_policy.reflect_left;
        }
        return walk(wc, std::cref(ts.drift), std::cref(ts.base.sigma), ns, obs);
    }

    // Exact mode: 3-d Bessel process W from 0 (norm of a 3-d Brownian motion,
    // which is exact in law at any step size), q = -/+ 1/W mapped through the
    // normalized side scale, time-changed by the clock
    //   A_t = int du / (sigma^2(Y_u) [W_u^2 st'(Y_u)]^2).
    // The W-grid is adaptive: each step advances the left-point clock by
    // about dt/8, so the construction terminates even as the clock integrand
    // vanishes near the target's death time. The grid is predictable (the
    // step size depends on the past only), so the stations stay exact in law.
    const auto maps = detail::exact_launch_maps(ts);
    const Real dt = cfg.dt;
    const Real clock_quantum = launcher.du > 0.0 ? launcher.du : 0.125 * dt;

    const bool kill_far = high ? ts.base_policy.kill_right : ts.base_policy.kill_left;
    const Real far_end = high ? ts.dom_right : ts.dom_left;
    // Deep-scale kill threshold: once the remaining scale gap to the far end
    // is this small the residual clock mass is far below dt.
    const Real s_far = high ? ts.scale.s_r : ts.scale.s_l;
    const Real kill_gap = 1e-6 * std::fabs(maps.s_y - s_far);

    Real w1 = 0.0, w2 = 0.0, w3 = 0.0;  // 3-d Brownian motion; W = |(w1,w2,w3)|
    Real a_clock = 0.0;
    Real y_prev = ts.y;

    WalkResult res;
    Real emit_prev = ts.y;
    std::uint64_t emitted = 0;
    std::uint64_t wsteps = 0;

    const Real sigma_y = ts.base.sigma(ts.y);
    const Real sd_y = ts.scale.s_deriv(ts.y);
    const Real integrand_at_entry = 1.0 / (sigma_y * sigma_y * sd_y * sd_y);

    while (true) {
        if (wsteps >= cfg.max_steps) {
            res.reason = StopReason::MaxSteps;
            res.t_end = static_cast<Real>(emitted) * dt;
            res.x_end = emit_prev;
            return res;
        }
        // Left-point clock integrand at the current station.
        Real integrand;
        const Real w_norm = std::sqrt(w1 * w1 + w2 * w2 + w3 * w3);
        if (w_norm < 1e-12) {
            integrand = integrand_at_entry;
        } else {
            const Real wd = w_norm * w_norm * maps.st_deriv(y_prev);
            integrand = 1.0 / (ts.base.sigma(y_prev) * ts.base.sigma(y_prev) * wd * wd);
        }
        const Real du = clock_quantum / integrand;
        const Real sq_du = std::sqrt(du);
        const Real a_new = a_clock + clock_quantum;

        w1 += sq_du * ns.normal();
        w2 += sq_du * ns.normal();
        w3 += sq_du * ns.normal();
        const Real w_new = std::sqrt(w1 * w1 + w2 * w2 + w3 * w3);
        ++wsteps;
        Real y_new = (w_new < 1e-300) ? ts.y : maps.state_from_q(maps.q_sign / w_new);

        // Emit uniform-grid states that the clock has passed.
        while ((emitted + 1) * dt <= a_new) {
            const Real t_emit = static_cast<Real>(emitted + 1) * dt;
            Real frac = (t_emit - a_clock) / clock_quantum;
            if (frac < 0.0) frac = 0.0;
            if (frac > 1.0) frac = 1.0;
            Real x_emit = y_prev + frac * (y_new - y_prev);
            bool fatal = false;
            if (kill_far) {
                if ((high && x_emit >= far_end - 1e-12) ||
                    (!high && x_emit <= far_end + 1e-12)) {
                    x_emit = far_end;
                    fatal = true;
                }
            }
            Real x_mut = x_emit;
            const bool keep = obs(t_emit, emit_prev, x_mut);
            ++emitted;
            emit_prev = x_mut;
            if (fatal) {
                res.killed = true;
                res.lifetime = t_emit;
                res.reason = high ? StopReason::KilledRight : StopReason::KilledLeft;
                res.t_end = t_emit;
                res.x_end = x_emit;
                res.steps = emitted;
                return res;
            }
            if (!keep) {
                res.reason = StopReason::Observer;
                res.t_end = t_emit;
                res.x_end = x_mut;
                res.steps = emitted;
                return res;
            }
            if (t_emit >= cfg.horizon - 0.5 * dt) {
                res.reason = StopReason::Horizon;
                res.t_end = t_emit;
                res.x_end = x_mut;
                res.steps = emitted;
                return res;
            }
        }
        // Death of the target: the mapped state has driven the scale gap to
        // the far end below the threshold; the residual clock mass is
        // negligible, so the path dies at the next grid time.
        if (kill_far && std::fabs(ts.scale.s(y_new) - s_far) <= kill_gap) {
            const Real t_emit = (std::floor(a_new / dt) + 1.0) * dt;
            Real x_mut = far_end;
            obs(t_emit, emit_prev, x_mut);
            ++emitted;
            res.killed = true;
            res.lifetime = t_emit;
            res.reason = high ? StopReason::KilledRight : StopReason::KilledLeft;
            res.t_end = t_emit;
            res.x_end = far_end;
            res.steps = emitted;
            return res;
        }
        a_clock = a_new;
        y_prev = y_new;
    }
}

}  // namespace ltsim
