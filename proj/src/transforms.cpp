#include "ltsim/transforms.hpp"

#include <cmath>

namespace ltsim {

const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::Recurrent: return "recurrent";
        case TransformKind::BesselLow: return "bessel_low";
        case TransformKind::BesselHigh: return "bessel_high";
        case TransformKind::CondExitLow: return "cond_exit_low";
        case TransformKind::CondExitHigh: return "cond_exit_high";
    }
    return "?";
}

Real log_deriv_u(const ScaleTable& scale, Real x, Real y) {
    // u(., y) is flat on the side where the case table makes it constant;
    // at x = y the left derivative applies.
    switch (scale.scale_case) {
        case ScaleCase::BothFinite:
            if (x <= y) return scale.s_deriv(x) / scale.s(x);
            return -scale.s_deriv(x) / (1.0 - scale.s(x));
        case ScaleCase::LeftFinite:
            if (x <= y) return scale.s_deriv(x) / scale.s(x);
            return 0.0;
        case ScaleCase::RightFinite:
            if (x <= y) return 0.0;
            return -scale.s_deriv(x) / (1.0 - scale.s(x));
    }
    return 0.0;
}

Real recurrent_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y, Real x) {
    if (!spec.contains(x)) throw DomainError("recurrent_drift: x outside (l, r)");
    const Real sg = spec.sigma(x);
    return spec.drift(x) + sg * sg * log_deriv_u(scale, x, y);
}

Real bessel_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y,
                  BesselSide side, Real x) {
    if (side == BesselSide::Low) {
        if (!(x > spec.left && x < y)) throw DomainError("bessel_drift: x outside (l, y)");
    } else {
        if (!(x > y && x < spec.right)) throw DomainError("bessel_drift: x outside (y, r)");
    }
    const Real sg = spec.sigma(x);
    const Real num = scale.s_deriv(x) * sg * sg;
    if (side == BesselSide::Low)
        return spec.drift(x) - num / (scale.s(y) - scale.s(x));
    return spec.drift(x) + num / (scale.s(x) - scale.s(y));
}

Real cond_exit_drift(const DiffusionSpec& spec, const ScaleTable& scale, Real y,
                     BesselSide side, Real x) {
    const Real sg = spec.sigma(x);
    if (side == BesselSide::Low) {
        if (!scale.left_finite())
            throw InvalidSpecError("cond_exit_drift: low side needs s(l) finite");
        if (!(x > spec.left && x < y))
            throw DomainError("cond_exit_drift: x outside (l, y)");
        return spec.drift(x) + sg * sg * scale.s_deriv(x) / scale.s(x);
    }
    if (!scale.right_finite())
        throw InvalidSpecError("cond_exit_drift: high side needs s(r) finite");
    if (!(x > y && x < spec.right))
        throw DomainError("cond_exit_drift: x outside (y, r)");
    return spec.drift(x) - sg * sg * scale.s_deriv(x) / (1.0 - scale.s(x));
}

TransformedSpec make_transformed(const DiffusionSpec& spec, const ScaleTable& scale,
                                 TransformKind kind, Real y) {
    if (!spec.contains(y)) throw DomainError("make_transformed: y outside (l, r)");
    TransformedSpec ts;
    ts.base = spec;
    ts.scale = scale;
    ts.kind = kind;
    ts.y = y;
    ts.base_policy = boundary_policy(spec, scale);

    const DiffusionSpec base = spec;
    const ScaleTable sc = scale;
    switch (kind) {
        case TransformKind::Recurrent:
            ts.dom_left = spec.left;
            ts.dom_right = spec.right;
            ts.drift = [base, sc, y](Real x) { return recurrent_drift(base, sc, y, x); };
            break;
        case TransformKind::BesselLow:
            if (!scale.left_finite())
                throw InvalidSpecError("bessel_low requires s(l) finite");
            ts.dom_left = spec.left;
            ts.dom_right = y;
            ts.drift = [base, sc, y](Real x) {
                return bessel_drift(base, sc, y, BesselSide::Low, x);
            };
            break;
        case TransformKind::BesselHigh:
            if (!scale.right_finite())
                throw InvalidSpecError("bessel_high requires s(r) finite");
            ts.dom_left = y;
            ts.dom_right = spec.right;
            ts.drift = [base, sc, y](Real x) {
                return bessel_drift(base, sc, y, BesselSide::High, x);
            };
            break;
        case TransformKind::CondExitLow:
            if (!scale.left_finite())
                throw InvalidSpecError("cond_exit_low requires s(l) finite");
            ts.dom_left = spec.left;
            ts.dom_right = y;
            ts.drift = [base, sc, y](Real x) {
                return cond_exit_drift(base, sc, y, BesselSide::Low, x);
            };
            break;
        case TransformKind::CondExitHigh:
            if (!scale.right_finite())
                throw InvalidSpecError("cond_exit_high requires s(r) finite");
            ts.dom_left = y;
            ts.dom_right = spec.right;
            ts.drift = [base, sc, y](Real x) {
                return cond_exit_drift(base, sc, y, BesselSide::High, x);
            };
            break;
    }
    return ts;
}

Real default_entrance_offset(const ScaleTable& scale, Real y, BesselSide side) {
    // |1 / (s(y) - s(x))| >= 1e6  <=>  |s(x) - s(y)| <= 1e-6.
    const Real sy = scale.s(y);
    const Real target = (side == BesselSide::High) ? sy + 1e-6 : sy - 1e-6;
    Real x;
    try {
        x = scale_inverse(scale, target, y);
    } catch (const DomainError&) {
        // Scale range smaller than 1e-6 on that side; fall back to a fraction
        // of the side width.
        const Real end = (side == BesselSide::High) ? scale.right : scale.left;
        x = std::isfinite(end) ? y + 0.25 * (end - y) : y + (side == BesselSide::High ? 1 : -1);
    }
    Real delta = std::fabs(x - y);
    const Real floor_ = 64.0 * std::numeric_limits<Real>::epsilon() * (1.0 + std::fabs(y));
    return std::max(delta, floor_);
}

namespace detail {

ExactLaunchMaps exact_launch_maps(const TransformedSpec& ts) {
    const bool high = ts.kind == TransformKind::BesselHigh;
    if (high && !ts.scale.right_finite())
        throw InvalidSpecError("exact launcher: high side needs s(r) finite");
    if (!high && !ts.scale.left_finite())
        throw InvalidSpecError("exact launcher: low side needs s(l) finite");
    ExactLaunchMaps m;
    m.scale = &ts.scale;
    m.y = ts.y;
    m.s_y = ts.scale.s(ts.y);
    m.q_sign = high ? -1.0 : 1.0;
    // Side-scale value at the accessible end: 1 / (s(y) - s_end).
    const Real s_end = high ? ts.scale.s_r : ts.scale.s_l;
    m.s_acc = 1.0 / (m.s_y - s_end);
    return m;
}

}  // namespace detail

Path launch_entrance(const TransformedSpec& ts, const EntranceLauncher& launcher,
                     Real horizon, Real dt, const RandomSource& rng,
                     std::uint64_t stream_index) {
    NormalStream ns(rng.master_seed, stream_index);
    LaunchConfig cfg;
    cfg.dt = dt;
    cfg.horizon = horizon;

    Path path;
    path.seed = rng.master_seed;
    path.stream_index = stream_index;
    path.times.push_back(0.0);
    path.values.push_back(ts.y);
    auto obs = [&path](Real t_new, Real, Real& x_new) {
        path.times.push_back(t_new);
        path.values.push_back(x_new);
        return true;
    };
    const WalkResult res = launch_entrance_walk(ts, launcher, cfg, ns, obs);
    path.killed = res.killed;
    path.lifetime = res.lifetime;
    return path;
}

SurvivalEstimate survival_estimator(const DiffusionSpec& spec, const ScaleTable& scale,
                                    Real y, Real x, Real horizon, Real dt,
                                    std::size_t n_paths, const RandomSource& rng,
                                    Real bandwidth) {
    if (n_paths == 0) throw std::invalid_argument("survival_estimator: empty batch");
    const TransformedSpec ts = make_transformed(spec, scale, TransformKind::Recurrent, y);
    const Real eps = bandwidth > 0.0 ? bandwidth : default_bandwidth(spec.sigma(y), dt);
    const Real lambda = terminal_lt_rate(scale, y);
    const Real u_xy = potential_density(scale, x, y);

    std::vector<Real> weights(n_paths);
    parallel_paths(n_paths, [&](std::size_t i) {
        NormalStream ns(rng.master_seed, i);
        LocalTimeAccum lt{y, eps, 0.0};
        WalkConfig wc;
        wc.x0 = x;
        wc.dt = dt;
        wc.horizon = horizon;
        wc.left = spec.left;
        wc.right = spec.right;
        // The recurrent transform never reaches the ends of (l, r); finite
        // ones only need the discretization guard.
        wc.reflect_left = std::isfinite(spec.left);
        wc.reflect_right = std::isfinite(spec.right);
        auto obs = [&](Real, Real x_prev, Real&) {
            lt.update(x_prev, spec.sigma(x_prev), dt);
            return true;
        };
        const WalkResult res = walk(wc, std::cref(ts.drift), std::cref(spec.sigma), ns, obs);
        weights[i] = std::exp(-lambda * lt.value) / potential_density(scale, res.x_end, y);
    });

    Real mean = 0.0;
    for (Real w : weights) mean += w;
    mean /= static_cast<Real>(n_paths);
    Real ss = 0.0;
    for (Real w : weights) ss += (w - mean) * (w - mean);
    const Real sd = n_paths > 1 ? std::sqrt(ss / (n_paths - 1)) : 0.0;

    SurvivalEstimate est;
    est.value = u_xy * mean;
    est.std_error = u_xy * sd / std::sqrt(static_cast<Real>(n_paths));
    est.n = n_paths;
    return est;
}

}  // namespace ltsim
