#include "ltsim/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ltsim {

namespace {

struct SimpsonFail {};

Real simpson(const Fn1& f, Real a, Real fa, Real m, Real fm, Real b, Real fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

Real simpson_rec(const Fn1& f, Real a, Real fa, Real b, Real fb, Real m, Real fm,
                 Real whole, Real tol, int depth) {
    const Real lm = 0.5 * (a + m);
    const Real rm = 0.5 * (m + b);
    const Real flm = f(lm);
    const Real frm = f(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm)) throw SimpsonFail{};
    const Real left = simpson(f, a, fa, lm, flm, m, fm);
    const Real right = simpson(f, m, fm, rm, frm, b, fb);
    const Real delta = left + right - whole;
    // Relative floor: the absolute tolerance halves per level and would fall
    // below double precision on wide intervals.
    if (std::fabs(delta) <= 15.0 * tol ||
        std::fabs(delta) <= 1e-14 * (std::fabs(left) + std::fabs(right)))
        return left + right + delta / 15.0;
    if (depth <= 0) throw SimpsonFail{};
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

Real adaptive_simpson(const Fn1& f, Real a, Real b, Real abs_tol, int max_depth) {
    Real out;
    if (!try_adaptive_simpson(f, a, b, abs_tol, out, max_depth))
        throw std::runtime_error("adaptive_simpson: integrand not integrable on interval");
    return out;
}

bool try_adaptive_simpson(const Fn1& f, Real a, Real b, Real abs_tol, Real& out,
                          int max_depth) {
    if (a == b) {
        out = 0.0;
        return true;
    }
    const Real sign = (a < b) ? 1.0 : -1.0;
    if (a > b) std::swap(a, b);
    try {
        const Real m = 0.5 * (a + b);
        const Real fa = f(a), fb = f(b), fm = f(m);
        if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
            throw SimpsonFail{};
        const Real whole = simpson(f, a, fa, m, fm, b, fb);
        out = sign * simpson_rec(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
        return true;
    } catch (const SimpsonFail&) {
        return false;
    }
}

ImproperResult improper_toward(const Fn1& f, Real z, Real endpoint, Real tol,
                               int max_pieces, Real diverge_cap) {
    ImproperResult res;
    const bool inf_end = std::isinf(endpoint);
    const Real dir = (endpoint > z) ? 1.0 : -1.0;  // direction of travel from z

    Real outer = z;  // boundary of the region already integrated, moving toward endpoint
    Real span = inf_end ? 1.0 : 0.5 * std::fabs(endpoint - z);
    Real tail = kInf;
    std::vector<Real> recent;  // |piece| history for the divergence heuristic
    recent.reserve(max_pieces);

    for (int k = 0; k < max_pieces; ++k) {
        Real next;
        if (inf_end) {
            next = outer + dir * span;
            span *= 2.0;
        } else {
            next = endpoint - dir * span;  // halfway between outer and endpoint
            span *= 0.5;
        }
        Real piece;
        // Piece tolerance is relative to the requested total tolerance.
        if (!try_adaptive_simpson(f, outer, next, tol * 0.25, piece, 48)) {
            // Integrand misbehaves inside this piece: treat as divergence.
            res.diverged = true;
            res.converged = true;
            res.pieces = k;
            return res;
        }
        // res.value accumulates the integral over the swept region in natural
        // (low, high) order regardless of travel direction.
        res.value += (dir > 0 ? piece : -piece);
        outer = next;
        const Real prev_tail = tail;
        tail = std::fabs(piece);
        recent.push_back(tail);
        res.pieces = k + 1;
        if (std::fabs(res.value) > diverge_cap) {
            res.diverged = true;
            res.converged = true;
            return res;
        }
        // Geometrically decaying pieces admit a tail extrapolation
        // rem = piece r / (1 - r); stop once the estimated remainder is below
        // tolerance and fold it in. Exact for an exactly geometric tail.
        Real rem = kInf;
        if (tail == 0.0) {
            rem = 0.0;
        } else if (std::isfinite(prev_tail) && prev_tail > 0.0 && tail < 0.95 * prev_tail) {
            const Real r = tail / prev_tail;
            rem = tail * r / (1.0 - r);
        }
        if (rem <= tol * (1.0 + std::fabs(res.value))) {
            res.value += (dir > 0 ? 1.0 : -1.0) * (piece >= 0.0 ? rem : -rem);
            res.finite = true;
            res.converged = true;
            return res;
        }
    }
    // Ran out of pieces with a non-vanishing remainder. Non-decaying pieces
    // over the geometric sweep mean slow divergence (e.g. logarithmic);
    // decaying ones get the extrapolated remainder at reduced precision.
    const size_t n = recent.size();
    if (n >= 6 && recent[n - 1] >= 0.5 * recent[n - 6]) {
        res.diverged = true;
        res.converged = true;
    } else if (n >= 2 && recent[n - 1] < 0.95 * recent[n - 2]) {
        const Real r = recent[n - 1] / recent[n - 2];
        res.value += (dir > 0 ? 1.0 : -1.0) * recent[n - 1] * r / (1.0 - r);
        res.finite = true;
        res.converged = true;
    } else {
        res.converged = false;
    }
    return res;
}

}  // namespace ltsim
