#include <doctest.h>

#include <cmath>

#include "ltsim/engine.hpp"
#include "ltsim/local_time.hpp"
#include "ltsim/stats.hpp"
#include "ltsim/transforms.hpp"

using namespace ltsim;

TEST_CASE("accumulator updates only inside the band and scales with sigma^2") {
    LocalTimeAccum acc{0.0, 0.1, 0.0};
    acc.update(1.0, 1.0, 0.01);  // outside
    CHECK(acc.value == 0.0);
    acc.update(0.05, 1.0, 0.01);  // inside
    const Real one = acc.value;
    CHECK(one == doctest::Approx(0.01 / 0.2));

    LocalTimeAccum acc2{0.0, 0.1, 0.0};
    acc2.update(0.05, 2.0, 0.01);  // doubled sigma, same occupancy pattern
    CHECK(acc2.value == doctest::Approx(4.0 * one));
}

TEST_CASE("tracker monotone, constant off the band, interpolated inverse") {
    LocalTimeTracker tr(0.0, 0.1);
    Real prev = 0.0;
    const Real dt = 0.01;
    const Real xs[] = {0.0, 0.05, 0.5, 0.7, 0.02, -0.03, 5.0};
    Real t = 0.0;
    for (Real x : xs) {
        t += dt;
        tr.update(t, x, 1.0, dt);
        CHECK(tr.value() >= prev);
        prev = tr.value();
    }
    // Off-band steps leave the estimate constant.
    const Real before = tr.value();
    tr.update(t + dt, 3.0, 1.0, dt);
    CHECK(tr.value() == before);

    // a = 0 is the left-limit inverse at zero; beyond the terminal value
    // there is no inverse.
    CHECK(tr.inverse_local_time(0.0) == 0.0);
    CHECK(tr.inverse_local_time(1e9) == kInf);

    // Interpolation inside the triggering step: the first update at t = dt
    // raised Lhat from 0 to inc, so a = inc/2 maps to dt/2.
    LocalTimeTracker fresh(0.0, 0.1);
    fresh.update(dt, 0.0, 1.0, dt);
    const Real inc = fresh.value();
    CHECK(fresh.inverse_local_time(0.5 * inc) == doctest::Approx(0.5 * dt));
}

TEST_CASE("expected local time of BM at zero matches the Tanaka oracle") {
    // E L^0_1 = E|B_1| = sqrt(2/pi); the oracle is estimated by independent
    // Monte Carlo of |B_1|.
    const std::size_t n = 10000;
    const Real dt = 1e-4;
    const Real eps = default_bandwidth(1.0, dt);
    std::vector<Real> lt(n);
    parallel_paths(n, [&](std::size_t i) {
        NormalStream ns(31337, i);
        LocalTimeAccum acc{0.0, eps, 0.0};
        WalkConfig wc;
        wc.dt = dt;
        wc.horizon = 1.0;
        auto obs = [&](Real, Real x_prev, Real&) {
            acc.update(x_prev, 1.0, dt);
            return true;
        };
        walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; }, ns, obs);
        lt[i] = acc.value;
    });
    Real oracle = 0.0;
    {
        NormalStream ns(999, 0);
        const std::size_t m = 200000;
        for (std::size_t i = 0; i < m; ++i) oracle += std::fabs(ns.normal());
        oracle /= m;
    }
    CHECK(mean_of(lt) == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("diffusion local time conversion") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    CHECK(diffusion_local_time(scale, 0.3, 0.0) == 0.0);
    // killed BM with b=1 has s' = 1: Ltilde = L/2.
    CHECK(diffusion_local_time(scale, 0.3, 2.0) == doctest::Approx(1.0));

    // Unit-scale toy: s' = 1 after normalization on (0,1).
    const auto toy = make_polynomial({0.0}, {1.0}, 0.0, 1.0, 0.5);
    const auto toy_scale = build_scale(toy);
    CHECK(diffusion_local_time(toy_scale, 0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("bandwidth halving changes the estimate within noise") {
    // eps = 5 sigma sqrt(dt): halving eps means dt/4. The estimator carries a
    // discrete-walk occupation deficit of order sqrt(dt), so the check runs
    // from the reference operating point dt = 1e-4 downward.
    const std::size_t n = 6000;
    auto run = [&](Real dt, std::uint64_t seed) {
        const Real eps = default_bandwidth(1.0, dt);
        std::vector<Real> lt(n);
        parallel_paths(n, [&](std::size_t i) {
            NormalStream ns(seed, i);
            LocalTimeAccum acc{0.0, eps, 0.0};
            WalkConfig wc;
            wc.dt = dt;
            wc.horizon = 1.0;
            auto obs = [&](Real, Real x_prev, Real&) {
                acc.update(x_prev, 1.0, dt);
                return true;
            };
            walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; }, ns, obs);
            lt[i] = acc.value;
        });
        return lt;
    };
    const auto coarse = run(1e-4, 11);
    const auto fine = run(2.5e-5, 12);
    const Real se = std::sqrt(stddev_of(coarse) * stddev_of(coarse) / n +
                              stddev_of(fine) * stddev_of(fine) / n);
    CHECK(std::fabs(mean_of(coarse) - mean_of(fine)) < 2.0 * se);
}

TEST_CASE("inverse local time is finite under the recurrent transform") {
    // Under the recurrent transform of killed BM the local time at y grows
    // beyond any level; tau-hat at a = 2b is reached in every path. Sub-band
    // excursions are excised through a barrier teleport to keep the sojourn
    // times bounded.
    const auto spec = make_killed_bm(1.0);
    const auto scale = build_scale(spec);
    const auto ts = make_transformed(spec, scale, TransformKind::Recurrent, 0.0);
    const std::size_t n = 10000;
    const Real dt = 2.5e-4;
    const Real eps = default_bandwidth(1.0, dt);
    const Real target = 2.0;  // a = 2b
    std::vector<char> reached(n, 0);
    parallel_paths(n, [&](std::size_t i) {
        NormalStream ns(616, i);
        LocalTimeAccum acc{0.0, eps, 0.0};
        WalkConfig wc;
        wc.dt = dt;
        wc.horizon = 400.0;
        wc.left = spec.left;
        wc.right = spec.right;
        wc.reflect_right = true;
        auto obs = [&](Real, Real x_prev, Real& x_new) {
            acc.update(x_prev, 1.0, dt);
            if (acc.value >= target) return false;
            if (x_new <= -2.0) x_new = -1.25 * eps;
            return true;
        };
        const auto res = walk(wc, std::cref(ts.drift), std::cref(spec.sigma), ns, obs);
        reached[i] = res.reason == StopReason::Observer ? 1 : 0;
    });
    std::size_t ok = 0;
    for (char c : reached) ok += c;
    CHECK(ok == n);
}
