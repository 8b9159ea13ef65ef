#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ltsim/quadrature.hpp"

namespace ltsim {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct InvalidSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotTransientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Boundary classification could not settle on finite vs infinite for one of
// the Feller integrals; carries the partial sums for diagnostics.
struct IndeterminateClassification : std::runtime_error {
    Real partial_a, partial_b;
    IndeterminateClassification(const std::string& msg, Real pa, Real pb)
        : std::runtime_error(msg), partial_a(pa), partial_b(pb) {}
};

// ---------------------------------------------------------------------------
// DiffusionSpec: coefficients b, sigma on (l, r) plus metadata
// ---------------------------------------------------------------------------

struct DiffusionSpec {
    Real left = -kInf;   // l, may be -inf
    Real right = kInf;   // r, may be +inf
    Fn1 drift;           // x -> b(x)
    Fn1 sigma;           // x -> sigma(x) > 0
    // Optional closed-form scale and its derivative (unnormalized is fine).
    std::optional<std::pair<Fn1, Fn1>> closed_form_scale;
    Real anchor = 0.0;   // quadrature base point c in (l, r)
    std::string name = "custom";

    bool contains(Real x) const { return x > left && x < right; }
};

// Builtin models from the worked examples.
DiffusionSpec make_killed_bm(Real b);                 // BM on (-inf, b), killed at b
DiffusionSpec make_ou(Real r_coef, Real b_coef);      // dX = dB + (r X + b) dt
DiffusionSpec make_sq_bessel(Real delta);             // dX = 2 sqrt(X) dB + delta dt
// Polynomial drift/sigma on (l, r); exercises the numeric-scale path.
DiffusionSpec make_polynomial(const std::vector<Real>& drift_coef,
                              const std::vector<Real>& sigma_coef,
                              Real l, Real r, Real anchor);

// Checks sigma > 0 and local integrability of (1+|b|)/sigma^2 on a probe grid.
// Throws InvalidSpecError on failure.
void validate_spec(const DiffusionSpec& spec, int grid_points = 17);

// ---------------------------------------------------------------------------
// ScaleTable: normalized scale function with endpoint limits
// ---------------------------------------------------------------------------

enum class ScaleCase {
    BothFinite,   // s(l) = 0, s(r) = 1
    LeftFinite,   // s(l) = 0, s(r) = +inf   (X -> l a.s.)
    RightFinite,  // s(l) = -inf, s(r) = 1   (X -> r a.s.)
};

struct ScaleTable {
    Fn1 s;        // normalized scale
    Fn1 s_deriv;  // its derivative, > 0
    Real s_l = -kInf;  // s(l+): 0 when finite
    Real s_r = kInf;   // s(r-): 1 when finite
    Real left = -kInf, right = kInf;  // domain copied from the spec
    ScaleCase scale_case = ScaleCase::BothFinite;
    // Affine map applied to the raw (quadrature or closed-form) scale:
    // s(x) = affine_mul * s_raw(x) + affine_add.
    Real affine_mul = 1.0, affine_add = 0.0;

    bool left_finite() const { return scale_case != ScaleCase::RightFinite; }
    bool right_finite() const { return scale_case != ScaleCase::LeftFinite; }
};

// Builds the scale by adaptive quadrature of exp(-2 int b/sigma^2) from the
// anchor, or from the closed form when provided, then renormalizes affinely
// so that finite endpoint limits sit at 0 and 1.
// Throws InvalidSpecError (non-integrable coefficients) or NotTransientError
// (both endpoint limits infinite).
ScaleTable build_scale(const DiffusionSpec& spec, Real tol = 1e-10);

// Speed measure density m(x) = 2 / (s'(x) sigma^2(x)).
Real speed_density(const DiffusionSpec& spec, const ScaleTable& scale, Real x);

// Inverse of the (strictly increasing) scale: x with s(x) = v. Expands a
// bracket from the anchor hint and polishes by bisection/Newton. Throws
// DomainError when v lies outside (s_l, s_r).
Real scale_inverse(const ScaleTable& scale, Real v, Real hint = 0.0);

// ---------------------------------------------------------------------------
// Boundary classification (Feller integral tests)
// ---------------------------------------------------------------------------

enum class BoundaryKind { Regular, Exit, Entrance, Natural };
enum class Side { Left, Right };

const char* to_string(BoundaryKind k);

BoundaryKind classify_boundary(const DiffusionSpec& spec, const ScaleTable& scale,
                               Side which, Real tol = 1e-8);

// ---------------------------------------------------------------------------
// Hitting probabilities, potential density, exit probability, local-time law
// ---------------------------------------------------------------------------

// psi(x, y) = P^x(T_y < inf), from the case table of the scale limits.
Real hitting_prob(const ScaleTable& scale, Real x, Real y);

// Potential density u(x, y) w.r.t. the speed measure; symmetric in (x, y).
Real potential_density(const ScaleTable& scale, Real x, Real y);

// rho(y) = P^y(X_inf = r).
Real rho(const ScaleTable& scale, Real y);

// Exponential rate of L^y_inf under P^y: lambda(y) = s'(y) / (2 u(y,y)).
// The mean terminal local time is 2 u(y,y) / s'(y).
Real terminal_lt_rate(const ScaleTable& scale, Real y);

// Law of L^y_inf given the current state and accrued local time: an atom at
// l_now plus an exponential tail.
struct MixedLaw {
    Real atom_location = 0.0;  // current local-time value
    Real atom_mass = 0.0;      // 1 - psi(x_now, y)
    Real rate = 0.0;           // exponential tail rate lambda(y)
    Real tail_mass = 0.0;      // psi(x_now, y)

    Real density(Real a) const;  // tail density at a > atom_location
    Real total_mass_quadrature(Real tol = 1e-12) const;  // atom + integral
    Real cdf(Real a) const;
};

MixedLaw conditional_terminal_lt_law(const ScaleTable& scale, Real x_now, Real y,
                                     Real l_now);

}  // namespace ltsim
