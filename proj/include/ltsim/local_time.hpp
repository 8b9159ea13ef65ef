#pragma once

#include <cmath>
#include <vector>

#include "ltsim/diffusion.hpp"

namespace ltsim {

// Default bandwidth: keeps expected per-visit band occupancy well above one
// step, controlling the discretization bias of the occupation estimator.
inline Real default_bandwidth(Real sigma_at_level, Real dt) {
    return 5.0 * sigma_at_level * std::sqrt(dt);
}

// Lean occupation-density estimator of the semimartingale local time at a
// level: Lhat += sigma^2(x_prev) dt / (2 eps) while |x_prev - y| <= eps.
// A path started at the level counts its first step as in-band, matching the
// left-limit convention of tau^y_{a-}.
struct LocalTimeAccum {
    Real level = 0.0;
    Real bandwidth = 0.0;
    Real value = 0.0;

    bool in_band(Real x) const { return std::fabs(x - level) <= bandwidth; }

    // Returns the increment added this step.
    Real update(Real x_prev, Real sigma_val, Real dt) {
        if (!in_band(x_prev)) return 0.0;
        const Real inc = sigma_val * sigma_val * dt / (2.0 * bandwidth);
        value += inc;
        return inc;
    }
};

// Full tracker: keeps the (time, Lhat) history so inverse-local-time queries
// can interpolate inside the triggering step.
class LocalTimeTracker {
public:
    LocalTimeTracker(Real level, Real bandwidth, Real t0 = 0.0)
        : accum_{level, bandwidth, 0.0} {
        times_.push_back(t0);
        values_.push_back(0.0);
    }

    Real level() const { return accum_.level; }
    Real bandwidth() const { return accum_.bandwidth; }
    Real value() const { return accum_.value; }

    void update(Real t_new, Real x_prev, Real sigma_val, Real dt) {
        const Real inc = accum_.update(x_prev, sigma_val, dt);
        last_dt_ = dt;
        if (inc > 0.0) {
            times_.push_back(t_new);
            values_.push_back(accum_.value);
        }
    }

    // tau^y_{a-}: first time Lhat >= a, linearly interpolated inside the step
    // whose increment crosses a; +inf if never reached. a = 0 returns 0.
    Real inverse_local_time(Real a) const {
        if (a <= 0.0) return 0.0;
        if (values_.back() < a) return kInf;
        size_t lo = 0, hi = values_.size() - 1;
        while (lo + 1 < hi) {
            const size_t mid = (lo + hi) / 2;
            if (values_[mid] >= a) hi = mid; else lo = mid;
        }
        // The increment that crossed a happened within [times_[hi]-dt, times_[hi]].
        const Real l_prev = values_[hi - 1];
        const Real l_new = values_[hi];
        const Real frac = (a - l_prev) / (l_new - l_prev);
        return times_[hi] - last_dt_ + frac * last_dt_;
    }

    const std::vector<Real>& history_times() const { return times_; }
    const std::vector<Real>& history_values() const { return values_; }

private:
    LocalTimeAccum accum_;
    Real last_dt_ = 0.0;
    std::vector<Real> times_;
    std::vector<Real> values_;
};

// Diffusion local time from the semimartingale one: Ltilde = s'(y) L / 2.
inline Real diffusion_local_time(const ScaleTable& scale, Real y, Real l_semimart) {
    return 0.5 * scale.s_deriv(y) * l_semimart;
}

}  // namespace ltsim
