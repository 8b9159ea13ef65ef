#include "ltsim/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace ltsim {

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

DiffusionSpec make_killed_bm(Real b) {
    if (b <= 0.0) throw InvalidSpecError("killed_bm: require b > 0");
    DiffusionSpec spec;
    spec.left = -kInf;
    spec.right = b;
    spec.drift = [](Real) { return 0.0; };
    spec.sigma = [](Real) { return 1.0; };
    spec.closed_form_scale = std::make_pair(Fn1([b](Real x) { return x / b; }),
                                            Fn1([b](Real) { return 1.0 / b; }));
    spec.anchor = 0.0;
    spec.name = "killed_bm";
    return spec;
}

DiffusionSpec make_ou(Real r_coef, Real b_coef) {
    if (r_coef <= 0.0) throw InvalidSpecError("ou: require r_coef > 0 (transient case)");
    DiffusionSpec spec;
    spec.left = -kInf;
    spec.right = kInf;
    spec.drift = [r_coef, b_coef](Real x) { return r_coef * x + b_coef; };
    spec.sigma = [](Real) { return 1.0; };
    const Real center = b_coef / r_coef;
    const Real norm = std::sqrt(r_coef / M_PI);
    spec.closed_form_scale = std::make_pair(
        Fn1([r_coef, center](Real x) {
            return 0.5 * (1.0 + std::erf(std::sqrt(r_coef) * (x + center)));
        }),
        Fn1([r_coef, center, norm](Real x) {
            const Real t = x + center;
            return norm * std::exp(-r_coef * t * t);
        }));
    spec.anchor = -center;
    spec.name = "ou";
    return spec;
}

DiffusionSpec make_sq_bessel(Real delta) {
    if (delta <= 2.0) throw InvalidSpecError("sq_bessel: require delta > 2 (transient case)");
    DiffusionSpec spec;
    spec.left = 0.0;
    spec.right = kInf;
    spec.drift = [delta](Real) { return delta; };
    spec.sigma = [](Real x) { return 2.0 * std::sqrt(std::max(x, 0.0)); };
    const Real p = 0.5 * (2.0 - delta);  // negative exponent
    spec.closed_form_scale = std::make_pair(
        Fn1([p](Real x) { return 1.0 - std::pow(x, p); }),
        Fn1([p](Real x) { return -p * std::pow(x, p - 1.0); }));
    spec.anchor = 1.0;
    spec.name = "sq_bessel";
    return spec;
}

DiffusionSpec make_polynomial(const std::vector<Real>& drift_coef,
                              const std::vector<Real>& sigma_coef,
                              Real l, Real r, Real anchor) {
    auto horner = [](const std::vector<Real>& c, Real x) {
        Real v = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
        return v;
    };
    DiffusionSpec spec;
    spec.left = l;
    spec.right = r;
    spec.drift = [drift_coef, horner](Real x) { return horner(drift_coef, x); };
    spec.sigma = [sigma_coef, horner](Real x) { return horner(sigma_coef, x); };
    spec.anchor = anchor;
    spec.name = "custom";
    return spec;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

std::vector<Real> probe_grid(const DiffusionSpec& spec, int n) {
    std::vector<Real> pts;
    const Real l = spec.left, r = spec.right, c = spec.anchor;
    if (std::isfinite(l) && std::isfinite(r)) {
        const Real w = (r - l) / (n + 1);
        for (int i = 1; i <= n; ++i) pts.push_back(l + i * w);
    } else {
        pts.push_back(c);
        const int half = n / 2;
        for (int j = 0; j < half; ++j) {
            const Real step = std::ldexp(0.25, j);  // 0.25, 0.5, 1, 2, ...
            Real lo = c - step, hi = c + step;
            if (lo > l) pts.push_back(lo);
            if (hi < r) pts.push_back(hi);
        }
        std::sort(pts.begin(), pts.end());
    }
    return pts;
}

}  // namespace

void validate_spec(const DiffusionSpec& spec, int grid_points) {
    if (!(spec.left < spec.right))
        throw InvalidSpecError("spec: require l < r");
    if (!spec.contains(spec.anchor))
        throw InvalidSpecError("spec: anchor must lie in (l, r)");
    if (!spec.drift || !spec.sigma)
        throw InvalidSpecError("spec: drift and sigma must be set");

    const auto pts = probe_grid(spec, grid_points);
    for (size_t i = 0; i < pts.size(); ++i) {
        const Real x = pts[i];
        const Real sg = spec.sigma(x);
        if (!(sg > 0.0) || !std::isfinite(sg))
            throw InvalidSpecError("spec: sigma must be positive at x = " + std::to_string(x));
        // Local integrability of (1 + |b|) / sigma^2 around x.
        Real h = 0.25;
        if (i > 0) h = std::min(h, 0.5 * (x - pts[i - 1]));
        if (i + 1 < pts.size()) h = std::min(h, 0.5 * (pts[i + 1] - x));
        h = std::max(h, 1e-6);
        const Real lo = std::max(x - h, spec.left + 0.25 * h);
        const Real hi = std::min(x + h, spec.right - 0.25 * h);
        Fn1 f = [&spec](Real z) {
            const Real s2 = spec.sigma(z) * spec.sigma(z);
            return (1.0 + std::fabs(spec.drift(z))) / s2;
        };
        Real out;
        if (!try_adaptive_simpson(f, lo, hi, 1e-6, out, 40) || !std::isfinite(out))
            throw InvalidSpecError(
                "spec: (1+|b|)/sigma^2 not locally integrable near x = " + std::to_string(x));
    }
}

// ---------------------------------------------------------------------------
// Scale construction
// ---------------------------------------------------------------------------

namespace {

// Raw (unnormalized) scale derivative from the coefficients, anchored so that
// s_raw'(anchor) = 1.
Fn1 numeric_scale_deriv(const DiffusionSpec& spec, Real tol) {
    const Real c = spec.anchor;
    auto b_over_s2 = std::make_shared<Fn1>([spec](Real u) {
        const Real sg = spec.sigma(u);
        return spec.drift(u) / (sg * sg);
    });
    return [b_over_s2, c, tol](Real z) {
        Real inner;
        if (!try_adaptive_simpson(*b_over_s2, c, z, tol, inner, 60))
            throw InvalidSpecError("scale: inner integral of b/sigma^2 diverges near x = " +
                                   std::to_string(z));
        return std::exp(-2.0 * inner);
    };
}

Fn1 numeric_scale(const Fn1& s_deriv, Real anchor, Real tol) {
    return [s_deriv, anchor, tol](Real x) {
        Real out;
        if (!try_adaptive_simpson(s_deriv, anchor, x, tol, out, 60))
            throw InvalidSpecError("scale: outer integral diverges near x = " +
                                   std::to_string(x));
        return out;
    };
}

// Limit of the raw scale at an endpoint via the improper integral of s'.
Real raw_scale_limit(const Fn1& s_deriv, Real anchor, Real endpoint, Real raw_at_anchor,
                     Real tol) {
    const auto res = improper_toward(s_deriv, anchor, endpoint, tol);
    if (!res.converged)
        throw InvalidSpecError("scale: endpoint limit did not settle");
    if (res.diverged) return endpoint > anchor ? kInf : -kInf;
    return endpoint > anchor ? raw_at_anchor + res.value : raw_at_anchor - res.value;
}

// Limit of a closed-form scale at an endpoint by direct evaluation along a
// geometric sequence with a Richardson tail estimate.
Real direct_scale_limit(const Fn1& s_raw, Real anchor, Real endpoint, Real tol) {
    const bool inf_end = std::isinf(endpoint);
    const Real dir = (endpoint > anchor) ? 1.0 : -1.0;
    Real v_prev = s_raw(anchor);
    Real d_prev = kInf;
    for (int k = 0; k < 60; ++k) {
        const Real x = inf_end ? anchor + dir * std::ldexp(1.0, k)
                               : endpoint - (endpoint - anchor) * std::ldexp(1.0, -k - 1);
        const Real v = s_raw(x);
        if (!std::isfinite(v) || std::fabs(v) > 1e12) return dir * kInf;
        const Real d = v - v_prev;
        if (std::isfinite(d_prev) && d_prev != 0.0) {
            const Real r = d / d_prev;
            if (r >= 0.0 && r < 0.95) {
                const Real rem = d * r / (1.0 - r);
                if (std::fabs(rem) + std::fabs(d) <= tol * (1.0 + std::fabs(v)))
                    return v + rem;
            }
        }
        if (d == 0.0 && k >= 2) return v;
        v_prev = v;
        d_prev = d;
    }
    throw InvalidSpecError("scale: closed-form endpoint limit did not settle");
}

}  // namespace

ScaleTable build_scale(const DiffusionSpec& spec, Real tol) {
    validate_spec(spec);

    Fn1 raw_s, raw_sd;
    if (spec.closed_form_scale) {
        raw_s = spec.closed_form_scale->first;
        raw_sd = spec.closed_form_scale->second;
    } else {
        raw_sd = numeric_scale_deriv(spec, tol);
        raw_s = numeric_scale(raw_sd, spec.anchor, tol);
    }

    const Real raw_at_anchor = raw_s(spec.anchor);
    Real raw_l, raw_r;
    if (spec.closed_form_scale) {
        raw_l = direct_scale_limit(raw_s, spec.anchor, spec.left, tol);
        raw_r = direct_scale_limit(raw_s, spec.anchor, spec.right, tol);
    } else {
        raw_l = raw_scale_limit(raw_sd, spec.anchor, spec.left, raw_at_anchor, tol);
        raw_r = raw_scale_limit(raw_sd, spec.anchor, spec.right, raw_at_anchor, tol);
    }

    ScaleTable t;
    t.left = spec.left;
    t.right = spec.right;
    if (std::isfinite(raw_l) && std::isfinite(raw_r)) {
        t.scale_case = ScaleCase::BothFinite;
        t.affine_mul = 1.0 / (raw_r - raw_l);
        t.affine_add = -raw_l * t.affine_mul;
        t.s_l = 0.0;
        t.s_r = 1.0;
    } else if (std::isfinite(raw_l)) {
        t.scale_case = ScaleCase::LeftFinite;
        t.affine_mul = 1.0;
        t.affine_add = -raw_l;
        t.s_l = 0.0;
        t.s_r = kInf;
    } else if (std::isfinite(raw_r)) {
        t.scale_case = ScaleCase::RightFinite;
        t.affine_mul = 1.0;
        t.affine_add = 1.0 - raw_r;
        t.s_l = -kInf;
        t.s_r = 1.0;
    } else {
        throw NotTransientError("scale: both endpoint limits infinite; diffusion is recurrent");
    }

    const Real mul = t.affine_mul, add = t.affine_add;
    t.s = [raw_s, mul, add](Real x) { return mul * raw_s(x) + add; };
    t.s_deriv = [raw_sd, mul](Real x) { return mul * raw_sd(x); };
    return t;
}

Real speed_density(const DiffusionSpec& spec, const ScaleTable& scale, Real x) {
    if (!spec.contains(x)) throw DomainError("speed_density: x outside (l, r)");
    const Real sg = spec.sigma(x);
    return 2.0 / (scale.s_deriv(x) * sg * sg);
}

Real scale_inverse(const ScaleTable& scale, Real v, Real hint) {
    if (!(v > scale.s_l && v < scale.s_r))
        throw DomainError("scale_inverse: value outside (s_l, s_r)");
    Real lo, hi;
    Real x0 = hint;
    if (!(x0 > scale.left && x0 < scale.right)) {
        if (std::isfinite(scale.left) && std::isfinite(scale.right))
            x0 = 0.5 * (scale.left + scale.right);
        else if (std::isfinite(scale.left))
            x0 = scale.left + 1.0;
        else if (std::isfinite(scale.right))
            x0 = scale.right - 1.0;
        else
            x0 = 0.0;
    }
    // Expand a bracket around x0.
    Real step = std::max(1e-6, 1e-6 * std::fabs(x0));
    lo = hi = x0;
    for (int i = 0; i < 200 && scale.s(lo) > v; ++i) {
        hi = lo;
        lo = std::isfinite(scale.left) ? 0.5 * (lo + scale.left) : lo - step;
        step *= 2.0;
    }
    step = std::max(1e-6, 1e-6 * std::fabs(x0));
    for (int i = 0; i < 200 && scale.s(hi) < v; ++i) {
        lo = std::max(lo, hi);
        hi = std::isfinite(scale.right) ? 0.5 * (hi + scale.right) : hi + step;
        step *= 2.0;
    }
    if (!(scale.s(lo) <= v && scale.s(hi) >= v))
        throw DomainError("scale_inverse: failed to bracket value v = " + std::to_string(v) +
                          " in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    // Bisection with Newton polish.
    Real x = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        const Real sx = scale.s(x);
        if (sx > v) hi = x; else lo = x;
        const Real sd = scale.s_deriv(x);
        Real xn = (sd > 0.0) ? x - (sx - v) / sd : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::fabs(xn - x) <= 1e-15 * (1.0 + std::fabs(x))) return xn;
        x = xn;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Boundary classification
// ---------------------------------------------------------------------------

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Regular: return "regular";
        case BoundaryKind::Exit: return "exit";
        case BoundaryKind::Entrance: return "entrance";
        case BoundaryKind::Natural: return "natural";
    }
    return "?";
}

BoundaryKind classify_boundary(const DiffusionSpec& spec, const ScaleTable& scale,
                               Side which, Real tol) {
    const Real c = spec.anchor;
    const Real endpoint = (which == Side::Left) ? spec.left : spec.right;
    const Real s_end = (which == Side::Left) ? scale.s_l : scale.s_r;
    const Real s_c = scale.s(c);

    auto m_density = [&spec, &scale](Real a) {
        const Real sg = spec.sigma(a);
        return 2.0 / (scale.s_deriv(a) * sg * sg);
    };

    // A = int (|s(a) - s(c)|) m(da) toward the endpoint: finiteness together
    // with inaccessibility marks an entrance boundary.
    Fn1 fa = [m_density, &scale, s_c](Real a) {
        return std::fabs(scale.s(a) - s_c) * m_density(a);
    };
    const auto ra = improper_toward(fa, c, endpoint, tol);

    // B = int (|s_end - s(a)|) m(da): finite iff the endpoint is accessible.
    ImproperResult rb;
    if (!std::isfinite(s_end)) {
        rb.diverged = true;
        rb.converged = true;
    } else {
        Fn1 fb = [m_density, &scale, s_end](Real a) {
            return std::fabs(s_end - scale.s(a)) * m_density(a);
        };
        rb = improper_toward(fb, c, endpoint, tol);
    }

    if (!ra.converged || !rb.converged)
        throw IndeterminateClassification("classify_boundary: Feller integrals did not settle",
                                          ra.value, rb.value);

    const bool a_fin = ra.finite;
    const bool b_fin = rb.finite;
    if (a_fin && b_fin) return BoundaryKind::Regular;
    if (!a_fin && b_fin) return BoundaryKind::Exit;
    if (a_fin && !b_fin) return BoundaryKind::Entrance;
    return BoundaryKind::Natural;
}

// ---------------------------------------------------------------------------
// psi, u, rho, lambda, MixedLaw
// ---------------------------------------------------------------------------

namespace {

void check_interior(const ScaleTable& scale, Real x, const char* who) {
    if (!(x > scale.left && x < scale.right))
        throw DomainError(std::string(who) + ": point outside (l, r)");
}

}  // namespace

Real hitting_prob(const ScaleTable& scale, Real x, Real y) {
    check_interior(scale, x, "hitting_prob");
    check_interior(scale, y, "hitting_prob");
    if (x == y) return 1.0;
    const Real sx = scale.s(x), sy = scale.s(y);
    switch (scale.scale_case) {
        case ScaleCase::BothFinite:
            return (y > x) ? sx / sy : (1.0 - sx) / (1.0 - sy);
        case ScaleCase::LeftFinite:
            return (y > x) ? sx / sy : 1.0;
        case ScaleCase::RightFinite:
            return (y > x) ? 1.0 : (1.0 - sx) / (1.0 - sy);
    }
    return 0.0;
}

Real potential_density(const ScaleTable& scale, Real x, Real y) {
    check_interior(scale, x, "potential_density");
    check_interior(scale, y, "potential_density");
    const Real lo = std::min(x, y), hi = std::max(x, y);
    switch (scale.scale_case) {
        case ScaleCase::BothFinite:
            return scale.s(lo) * (1.0 - scale.s(hi));
        case ScaleCase::LeftFinite:
            return scale.s(lo);
        case ScaleCase::RightFinite:
            return 1.0 - scale.s(hi);
    }
    return 0.0;
}

Real rho(const ScaleTable& scale, Real y) {
    check_interior(scale, y, "rho");
    switch (scale.scale_case) {
        case ScaleCase::BothFinite:
            return scale.s(y);
        case ScaleCase::LeftFinite:
            return 0.0;
        case ScaleCase::RightFinite:
            return 1.0;
    }
    return 0.0;
}

Real terminal_lt_rate(const ScaleTable& scale, Real y) {
    check_interior(scale, y, "terminal_lt_rate");
    return scale.s_deriv(y) / (2.0 * potential_density(scale, y, y));
}

Real MixedLaw::density(Real a) const {
    // Right-continuous at the atom so the tail integrates cleanly.
    if (a < atom_location) return 0.0;
    return tail_mass * rate * std::exp(-rate * (a - atom_location));
}

Real MixedLaw::total_mass_quadrature(Real tol) const {
    const Real horizon = atom_location + 60.0 / rate;
    Fn1 f = [this](Real a) { return density(a); };
    return atom_mass + adaptive_simpson(f, atom_location, horizon, tol);
}

Real MixedLaw::cdf(Real a) const {
    if (a < atom_location) return 0.0;
    return atom_mass + tail_mass * (1.0 - std::exp(-rate * (a - atom_location)));
}

MixedLaw conditional_terminal_lt_law(const ScaleTable& scale, Real x_now, Real y,
                                     Real l_now) {
    if (l_now < 0.0) throw DomainError("conditional_terminal_lt_law: l_now must be >= 0");
    MixedLaw law;
    law.atom_location = l_now;
    const Real psi = hitting_prob(scale, x_now, y);
    law.atom_mass = 1.0 - psi;
    law.tail_mass = psi;
    law.rate = terminal_lt_rate(scale, y);
    return law;
}

}  // namespace ltsim
