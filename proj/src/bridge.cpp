#include "ltsim/bridge.hpp"

#include <cmath>
#include <cstdio>

#include "ltsim/stats.hpp"

namespace ltsim {

const char* to_string(ExitSide s) {
    switch (s) {
        case ExitSide::None: return "none";
        case ExitSide::Left: return "left";
        case ExitSide::Right: return "right";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// BridgeSampler
// ---------------------------------------------------------------------------

BridgeSampler::BridgeSampler(const DiffusionSpec& spec, const ScaleTable& scale,
                             BridgeConfig cfg)
    : spec_(spec),
      scale_(scale),
      cfg_(std::move(cfg)),
      recurrent_(make_transformed(spec, scale, TransformKind::Recurrent, cfg_.y)) {
    if (!spec_.contains(cfg_.y)) throw DomainError("bridge: y outside (l, r)");
    if (cfg_.a < 0.0) throw InvalidSpecError("bridge: a must be >= 0");
    rho_y_ = rho(scale_, cfg_.y);
    gamma_rate_ = cfg_.gamma_rate > 0.0 ? cfg_.gamma_rate : terminal_lt_rate(scale_, cfg_.y);
    eps_ = cfg_.eps > 0.0 ? cfg_.eps : default_bandwidth(spec_.sigma(cfg_.y), cfg_.dt);

    if (scale_.left_finite()) {
        bessel_low_ = make_transformed(spec_, scale_, TransformKind::BesselLow, cfg_.y);
        has_low_ = true;
    }
    if (scale_.right_finite()) {
        bessel_high_ = make_transformed(spec_, scale_, TransformKind::BesselHigh, cfg_.y);
        has_high_ = true;
    }

    // Exit-side thresholds for non-killing far ends at finite scale distance.
    const BoundaryPolicy& pol = recurrent_.base_policy;
    if (!pol.kill_left && scale_.left_finite()) {
        escape_low_x_ = scale_inverse(scale_, cfg_.eta, cfg_.y);
        use_escape_low_ = true;
    }
    if (!pol.kill_right && scale_.right_finite()) {
        escape_high_x_ = scale_inverse(scale_, 1.0 - cfg_.eta, cfg_.y);
        use_escape_high_ = true;
    }
}

BridgeOutcome BridgeSampler::sample(const RandomSource& rng,
                                    std::uint64_t stream_index) const {
    return sample_impl(rng, stream_index, nullptr);
}

BridgeOutcome BridgeSampler::sample_with_target(const RandomSource& rng,
                                                std::uint64_t stream_index, Real a) const {
    return sample_impl(rng, stream_index, &a);
}

BridgeOutcome BridgeSampler::sample_impl(const RandomSource& rng,
                                         std::uint64_t stream_index,
                                         const Real* a_override) const {
    NormalStream ns(rng.master_seed, stream_index);

    BridgeOutcome out;
    out.stream_index = stream_index;
    // theta is drawn up front: the theorem wants it independent of the noise.
    out.theta = ns.bernoulli(rho_y_) ? 1 : 0;
    out.gamma = a_override ? *a_override
                           : (cfg_.randomized ? ns.exponential(gamma_rate_) : cfg_.a);

    const Real dt = cfg_.dt;
    LocalTimeAccum lt{cfg_.y, eps_, 0.0};

    Real t_cursor = 0.0;
    Real x_cursor = cfg_.y;
    bool probed = false;
    const Real probe_t = cfg_.probe_time ? *cfg_.probe_time : -1.0;

    auto probe = [&](Real t_new, Real x_new) {
        if (!probed && probe_t >= 0.0 && t_new >= probe_t - 0.25 * dt) {
            probed = true;
            out.probe_valid = true;
            out.x_probe = x_new;
            out.lt_probe = lt.value;
        }
    };

    // ---------------- Phase 1: recurrent transform until tau^y_{gamma-} ----
    if (out.gamma > 0.0) {
        Real h1 = cfg_.phase1_horizon > 0.0 ? cfg_.phase1_horizon
                                            : 40.0 * (1.0 + out.gamma);
        if (!cfg_.require_switch) h1 = cfg_.horizon;

        int attempt = 0;
        while (true) {
            WalkConfig wc;
            wc.x0 = x_cursor;
            wc.t0 = t_cursor;
            wc.dt = dt;
            wc.horizon = h1;
            wc.left = spec_.left;
            wc.right = spec_.right;
            // The recurrent transform does not reach the ends; guard the
            // discretization at finite ones.
            wc.reflect_left = std::isfinite(spec_.left);
            wc.reflect_right = std::isfinite(spec_.right);
            wc.drift_cap = cfg_.drift_cap;

            bool switched_now = false;
            auto obs = [&](Real t_new, Real x_prev, Real& x_new) {
                const Real before = lt.value;
                lt.update(x_prev, spec_.sigma(x_prev), dt);
                probe(t_new, x_new);
                if (lt.value >= out.gamma) {
                    out.switch_time = t_new - dt + dt * (out.gamma - before) /
                                                      (lt.value - before);
                    out.lt_at_switch = lt.value;
                    switched_now = true;
                    return false;
                }
                if (cfg_.excise_low && x_new <= *cfg_.excise_low)
                    x_new = cfg_.y - 1.25 * eps_;
                if (cfg_.excise_high && x_new >= *cfg_.excise_high)
                    x_new = cfg_.y + 1.25 * eps_;
                return true;
            };
            const WalkResult res =
                walk(wc, std::cref(recurrent_.drift), std::cref(spec_.sigma), ns, obs);
            t_cursor = res.t_end;
            x_cursor = res.x_end;
            if (switched_now) {
                out.switched = true;
                break;
            }
            if (!cfg_.require_switch) {
                // Decomposition semantics: the horizon ran out first.
                out.t_end = res.t_end;
                out.x_end = res.x_end;
                out.lt_terminal = lt.value;
                return out;
            }
            if (++attempt > cfg_.max_retries) {
                out.incomplete = true;
                out.t_end = res.t_end;
                out.x_end = res.x_end;
                out.lt_terminal = lt.value;
                return out;
            }
            h1 *= 4.0;  // auto-extension, continuing the same trajectory
        }
    } else {
        out.switched = true;
        out.switch_time = 0.0;
        out.lt_at_switch = 0.0;
    }

    // ---------------- Phase 2: Bessel-type motion on the theta side --------
    const bool high = out.theta == 1;
    if ((high && !has_high_) || (!high && !has_low_))
        throw InvalidSpecError("bridge: theta side has no Bessel-type motion");
    const TransformedSpec& side = high ? bessel_high_ : bessel_low_;

    const Real t_switch_grid = t_cursor;
    Real budget = cfg_.require_switch ? cfg_.horizon : cfg_.horizon - t_switch_grid;
    if (budget <= 0.5 * dt) {
        out.t_end = t_cursor;
        out.x_end = cfg_.y;
        out.lt_terminal = lt.value;
        return out;
    }

    // Discretization-leakage monitor: under the exact law the Bessel-type
    // motion never touches y again, so any post-switch crossing of y (after
    // the path has once cleared the band) is leakage chargeable to the grid.
    // The y-side reflection is handled here so crossings stay observable.
    bool left_band = false;
    auto obs2 = [&](Real t_local, Real x_prev, Real& x_new) {
        if (high) {
            if (x_new <= cfg_.y) {
                if (left_band) out.band_reentry = true;
                x_new = cfg_.y + std::max(cfg_.y - x_new, 1e-14 * (1.0 + std::fabs(cfg_.y)));
            }
        } else {
            if (x_new >= cfg_.y) {
                if (left_band) out.band_reentry = true;
                x_new = cfg_.y - std::max(x_new - cfg_.y, 1e-14 * (1.0 + std::fabs(cfg_.y)));
            }
        }
        lt.update(x_prev, spec_.sigma(x_prev), dt);
        probe(t_switch_grid + t_local, x_new);
        if (!left_band && std::fabs(x_new - cfg_.y) > eps_) left_band = true;
        return true;
    };

    LaunchConfig lc;
    lc.dt = dt;
    lc.horizon = budget;
    lc.drift_cap = cfg_.drift_cap;

    WalkResult res;
    if (cfg_.launcher.mode == EntranceLauncher::Mode::Offset) {
        // Escape thresholds are attached to the plain walk, so run it directly
        // rather than through the launcher wrapper.
        EntranceLauncher l = cfg_.launcher;
        Real delta = l.delta_e > 0.0 ? l.delta_e
                                     : default_entrance_offset(scale_, cfg_.y,
                                                               high ? BesselSide::High
                                                                    : BesselSide::Low);
        WalkConfig wc;
        wc.x0 = high ? cfg_.y + delta : cfg_.y - delta;
        wc.dt = dt;
        wc.horizon = budget;
        wc.left = side.dom_left;
        wc.right = side.dom_right;
        wc.drift_cap = cfg_.drift_cap;
        // The y side is reflected inside obs2 (so crossings are counted as
        // leakage); only the far end keeps the base policy.
        if (high) {
            wc.kill_right = side.base_policy.kill_right;
            wc.reflect_right = side.base_policy.reflect_right;
            if (use_escape_high_) wc.escape_high = escape_high_x_;
        } else {
            wc.kill_left = side.base_policy.kill_left;
            wc.reflect_left = side.base_policy.reflect_left;
            if (use_escape_low_) wc.escape_low = escape_low_x_;
        }
        res = walk(wc, std::cref(side.drift), std::cref(spec_.sigma), ns, obs2);
    } else {
        res = launch_entrance_walk(side, cfg_.launcher, lc, ns, obs2);
    }

    out.t_end = t_switch_grid + res.t_end;
    out.x_end = res.x_end;
    out.killed = res.killed;
    if (res.killed) out.lifetime = t_switch_grid + res.lifetime;
    switch (res.reason) {
        case StopReason::KilledLeft:
        case StopReason::EscapeLow:
            out.exit_side = ExitSide::Left;
            break;
        case StopReason::KilledRight:
        case StopReason::EscapeHigh:
            out.exit_side = ExitSide::Right;
            break;
        default:
            break;
    }
    out.lt_terminal = lt.value;
    if (out.killed && probe_t >= 0.0 && out.lifetime <= probe_t + 0.25 * cfg_.dt)
        out.probe_valid = false;
    return out;
}

// ---------------------------------------------------------------------------
// Spec-level wrappers
// ---------------------------------------------------------------------------

BridgeOutcome sample_bridge(const DiffusionSpec& spec, const ScaleTable& scale,
                            const BridgeConfig& cfg, const RandomSource& rng,
                            std::uint64_t stream_index) {
    BridgeConfig c = cfg;
    c.randomized = false;
    c.require_switch = true;
    BridgeSampler sampler(spec, scale, c);
    BridgeOutcome out = sampler.sample(rng, stream_index);
    if (out.incomplete)
        throw IncompleteBridgeError("sample_bridge: phase-1 horizon exhausted before tau");
    return out;
}

BridgeOutcome sample_randomized_bridge(const DiffusionSpec& spec, const ScaleTable& scale,
                                       const BridgeConfig& cfg, const RandomSource& rng,
                                       std::uint64_t stream_index) {
    BridgeConfig c = cfg;
    c.randomized = true;
    c.require_switch = true;
    BridgeSampler sampler(spec, scale, c);
    BridgeOutcome out = sampler.sample(rng, stream_index);
    if (out.incomplete)
        throw IncompleteBridgeError(
            "sample_randomized_bridge: phase-1 horizon exhausted before tau");
    return out;
}

BridgeOutcome sample_decomposition(const DiffusionSpec& spec, const ScaleTable& scale,
                                   const BridgeConfig& cfg, const RandomSource& rng,
                                   std::uint64_t stream_index) {
    BridgeConfig c = cfg;
    c.randomized = true;
    c.require_switch = false;
    BridgeSampler sampler(spec, scale, c);
    return sampler.sample(rng, stream_index);
}

std::string bridge_outcome_jsonl(const BridgeOutcome& o) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"seed\":%llu,\"theta\":%d,\"tau\":%.10g,\"lt_at_switch\":%.10g,"
                  "\"lt_terminal\":%.10g,\"exit_side\":\"%s\",\"lifetime\":%.10g}",
                  static_cast<unsigned long long>(o.stream_index), o.theta,
                  o.switch_time, o.lt_at_switch, o.lt_terminal, to_string(o.exit_side),
                  std::isfinite(o.lifetime) ? o.lifetime : -1.0);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// TerminalLTSampler
// ---------------------------------------------------------------------------

TerminalLTSampler::TerminalLTSampler(const DiffusionSpec& spec, const ScaleTable& scale,
                                     TerminalLTConfig cfg)
    : spec_(spec), scale_(scale), cfg_(std::move(cfg)) {
    policy_ = boundary_policy(spec_, scale_);
    eps_ = cfg_.eps > 0.0 ? cfg_.eps : default_bandwidth(spec_.sigma(cfg_.y), cfg_.dt);
    if (!std::isfinite(cfg_.x0)) cfg_.x0 = cfg_.y;
    // Default escape thresholds where the side neither kills nor has an
    // explicit rule, provided the scale is finite there.
    if (cfg_.low.kind == SideRule::Kind::None && !policy_.kill_left && scale_.left_finite())
        escape_low_ = scale_inverse(scale_, cfg_.eta, cfg_.y);
    if (cfg_.high.kind == SideRule::Kind::None && !policy_.kill_right &&
        scale_.right_finite())
        escape_high_ = scale_inverse(scale_, 1.0 - cfg_.eta, cfg_.y);
}

TerminalLTDraw TerminalLTSampler::sample(const RandomSource& rng,
                                         std::uint64_t stream_index) const {
    NormalStream ns(rng.master_seed, stream_index);
    LocalTimeAccum lt{cfg_.y, eps_, 0.0};

    WalkConfig wc;
    wc.x0 = cfg_.x0;
    wc.dt = cfg_.dt;
    wc.horizon = cfg_.horizon_cap;
    wc.left = spec_.left;
    wc.right = spec_.right;
    wc.kill_left = policy_.kill_left;
    wc.kill_right = policy_.kill_right;
    wc.reflect_left = policy_.reflect_left;
    wc.reflect_right = policy_.reflect_right;
    wc.drift_cap = cfg_.drift_cap;
    wc.bb_correct_left = cfg_.bb_correction;
    wc.bb_correct_right = cfg_.bb_correction;

    ExitSide decided = ExitSide::None;
    auto obs = [&](Real, Real x_prev, Real& x_new) {
        lt.update(x_prev, spec_.sigma(x_prev), cfg_.dt);

        // Explicit barrier rules first.
        if (cfg_.low.kind == SideRule::Kind::Teleport && x_new <= cfg_.low.level) {
            x_new = cfg_.low.target;
            return true;
        }
        if (cfg_.low.kind == SideRule::Kind::PsiRestart && x_new <= cfg_.low.level) {
            if (ns.bernoulli(hitting_prob(scale_, x_new, cfg_.y))) {
                x_new = cfg_.y;
                return true;
            }
            decided = ExitSide::Left;
            return false;
        }
        if (cfg_.high.kind == SideRule::Kind::Teleport && x_new >= cfg_.high.level) {
            x_new = cfg_.high.target;
            return true;
        }
        if (cfg_.high.kind == SideRule::Kind::PsiRestart && x_new >= cfg_.high.level) {
            if (ns.bernoulli(hitting_prob(scale_, x_new, cfg_.y))) {
                x_new = cfg_.y;
                return true;
            }
            decided = ExitSide::Right;
            return false;
        }

        // Scale-threshold exit decision with an optional psi-weighted restart
        // for the residual return probability.
        if (escape_low_ && x_new <= *escape_low_) {
            if (cfg_.psi_restart_at_escape &&
                ns.bernoulli(hitting_prob(scale_, x_new, cfg_.y))) {
                x_new = cfg_.y;
                return true;
            }
            decided = ExitSide::Left;
            return false;
        }
        if (escape_high_ && x_new >= *escape_high_) {
            if (cfg_.psi_restart_at_escape &&
                ns.bernoulli(hitting_prob(scale_, x_new, cfg_.y))) {
                x_new = cfg_.y;
                return true;
            }
            decided = ExitSide::Right;
            return false;
        }
        return true;
    };

    const WalkResult res = walk(wc, std::cref(spec_.drift), std::cref(spec_.sigma), ns, obs);

    TerminalLTDraw draw;
    draw.lt = lt.value;
    if (res.reason == StopReason::KilledLeft)
        draw.side = ExitSide::Left;
    else if (res.reason == StopReason::KilledRight)
        draw.side = ExitSide::Right;
    else if (res.reason == StopReason::Observer)
        draw.side = decided;
    else
        draw.censored = true;
    return draw;
}

// ---------------------------------------------------------------------------
// Independence check
// ---------------------------------------------------------------------------

IndependenceResult lt_independence_check(const DiffusionSpec& spec, const ScaleTable& scale,
                                         Real x, Real y, std::size_t n_paths, Real dt,
                                         const RandomSource& rng) {
    IndependenceResult out;
    if (scale.scale_case != ScaleCase::BothFinite) {
        out.inconclusive = true;
        out.note = "exit side deterministic (one-sided model); test skipped";
        return out;
    }
    TerminalLTConfig cfg;
    cfg.y = y;
    cfg.x0 = x;
    cfg.dt = dt;
    TerminalLTSampler sampler(spec, scale, cfg);

    std::vector<Real> lt(n_paths);
    std::vector<int> side(n_paths);
    parallel_paths(n_paths, [&](std::size_t i) {
        const auto d = sampler.sample(rng, i);
        lt[i] = d.lt;
        side[i] = d.censored ? -1 : (d.side == ExitSide::Right ? 1 : 0);
    });

    std::vector<Real> left_lt, right_lt;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (side[i] == 1)
            right_lt.push_back(lt[i]);
        else if (side[i] == 0)
            left_lt.push_back(lt[i]);
    }
    out.n_left = left_lt.size();
    out.n_right = right_lt.size();
    if (left_lt.size() < 50 || right_lt.size() < 50) {
        out.inconclusive = true;
        out.note = "insufficient exits on one side";
        return out;
    }
    const auto ks = ks_two_sample(left_lt, right_lt);
    out.statistic = ks.statistic;
    out.p_value = ks.p_value;
    out.note = "two-sample KS of terminal local time by exit side";
    return out;
}

}  // namespace ltsim
