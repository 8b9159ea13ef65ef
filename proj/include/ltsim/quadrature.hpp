#pragma once

#include <functional>
#include <limits>

namespace ltsim {

using Real = double;
using Fn1 = std::function<Real(Real)>;

inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

// Result of an improper integral evaluated as a series of shrinking (or
// growing) pieces toward an endpoint.
struct ImproperResult {
    Real value = 0.0;        // partial sum; meaningful when finite==true
    bool finite = false;     // series converged to a finite value
    bool diverged = false;   // partial sums exceeded the divergence cap
    bool converged = false;  // finite || diverged (i.e. verdict reached)
    int pieces = 0;          // number of geometric pieces consumed
};

// Adaptive Simpson on a finite interval with absolute tolerance.
// Throws std::runtime_error if the recursion exhausts max_depth without
// meeting the tolerance (treated as a non-integrable integrand).
Real adaptive_simpson(const Fn1& f, Real a, Real b, Real abs_tol, int max_depth = 60);

// Like adaptive_simpson but reports failure instead of throwing.
bool try_adaptive_simpson(const Fn1& f, Real a, Real b, Real abs_tol, Real& out,
                          int max_depth = 60);

// Integral of f over (endpoint, z] or [z, endpoint) where endpoint may be
// +-infinity or a finite singular point. Pieces are generated geometrically
// toward the endpoint (halving the gap for finite endpoints, doubling the
// span for infinite ones) and summed until the tail is below tol, the sum
// passes diverge_cap, or max_pieces is exhausted.
ImproperResult improper_toward(const Fn1& f, Real z, Real endpoint, Real tol,
                               int max_pieces = 60, Real diverge_cap = 1e12);

}  // namespace ltsim
