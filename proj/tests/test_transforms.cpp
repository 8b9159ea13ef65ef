#include <doctest.h>

#include <cmath>
#include <random>

#include "ltsim/stats.hpp"
#include "ltsim/transforms.hpp"

using namespace ltsim;

TEST_CASE("recurrent drift closed forms") {
    const auto kbm = make_killed_bm(1.0);
    const auto kbm_scale = build_scale(kbm);
    // Above y = 0 the drift is -1/(b - x); below it vanishes.
    for (Real x : {0.1, 0.5, 0.9})
        CHECK(recurrent_drift(kbm, kbm_scale, 0.0, x) ==
              doctest::Approx(-1.0 / (1.0 - x)).epsilon(1e-10));
    for (Real x : {-2.0, -0.3})
        CHECK(recurrent_drift(kbm, kbm_scale, 0.0, x) == doctest::Approx(0.0));
    // Left-derivative convention exactly at x = y.
    CHECK(recurrent_drift(kbm, kbm_scale, 0.0, 0.0) == doctest::Approx(0.0));

    // Squared Bessel delta = 4, y = 1: total drift vanishes above y.
    const auto sqb = make_sq_bessel(4.0);
    const auto sqb_scale = build_scale(sqb);
    for (Real x : {1.5, 3.0, 10.0})
        CHECK(recurrent_drift(sqb, sqb_scale, 1.0, x) ==
              doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bessel drift closed forms and sign") {
    const auto kbm = make_killed_bm(1.0);
    const auto kbm_scale = build_scale(kbm);
    // High side of y = 0: drift 1/x (the 3-dimensional Bessel drift).
    for (Real x : {0.05, 0.4, 0.9})
        CHECK(bessel_drift(kbm, kbm_scale, 0.0, BesselSide::High, x) ==
              doctest::Approx(1.0 / x).epsilon(1e-10));

    // Squared Bessel delta = 4, high side: 4 + 4y/(x - y).
    const auto sqb = make_sq_bessel(4.0);
    const auto sqb_scale = build_scale(sqb);
    for (Real y : {0.5, 1.0, 2.0})
        for (Real x : {y + 0.2, y + 1.0, y + 5.0})
            CHECK(bessel_drift(sqb, sqb_scale, y, BesselSide::High, x) ==
                  doctest::Approx(4.0 + 4.0 * y / (x - y)).epsilon(1e-9));

    // Unit-scale toy: high-side drift is 1/(x - y).
    const auto toy = make_polynomial({0.0}, {1.0}, 0.0, 1.0, 0.5);
    const auto toy_scale = build_scale(toy);
    CHECK(bessel_drift(toy, toy_scale, 0.3, BesselSide::High, 0.7) ==
          doctest::Approx(1.0 / 0.4).epsilon(1e-8));

    // The extra drift pushes away from y on both sides.
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<Real> u(0.01, 0.99);
    for (int k = 0; k < 100; ++k) {
        const Real y = u(gen);
        Real x = u(gen);
        if (x == y) continue;
        const auto side = x > y ? BesselSide::High : BesselSide::Low;
        const Real extra = bessel_drift(toy, toy_scale, y, side, x);
        CHECK(extra * (x - y) > 0.0);
    }
    CHECK_THROWS_AS(bessel_drift(toy, toy_scale, 0.5, BesselSide::High, 0.2),
                    DomainError);
}

TEST_CASE("conditioned-to-exit drift") {
    // Unit-scale toy on (0,1) conditioned to exit at y = 0 from above:
    // h = 1 - s gives drift -1/(1 - x).
    const auto toy = make_polynomial({0.0}, {1.0}, 0.0, 1.0, 0.5);
    const auto toy_scale = build_scale(toy);
    for (Real x : {0.2, 0.5, 0.8})
        CHECK(cond_exit_drift(toy, toy_scale, 0.0 + 1e-12, BesselSide::High, x) ==
              doctest::Approx(-1.0 / (1.0 - x)).epsilon(1e-6));
    // h decreasing: drift negative throughout on the high side.
    for (Real x : {0.1, 0.9})
        CHECK(cond_exit_drift(toy, toy_scale, 1e-12, BesselSide::High, x) < 0.0);
    // Low side on a model with s(l) = -inf is a configuration error.
    const auto kbm = make_killed_bm(1.0);
    const auto kbm_scale = build_scale(kbm);
    CHECK_THROWS_AS(cond_exit_drift(kbm, kbm_scale, 0.0, BesselSide::Low, -1.0),
                    InvalidSpecError);
}

TEST_CASE("killed-BM recurrent transform maps to the Bessel-3 form") {
    // With U = b - Y the drift of U must be 1{u < b}/u: check
    // -g(b - u) == 1{u<b}/u where g is the transform drift of Y.
    const Real b = 1.0;
    const auto kbm = make_killed_bm(b);
    const auto scale = build_scale(kbm);
    for (Real uu : {0.1, 0.4, 0.9, 1.3, 2.5}) {
        const Real g = recurrent_drift(kbm, scale, 0.0, b - uu);
        const Real expected = uu < b ? 1.0 / uu : 0.0;
        CHECK(-g == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("transformed spec domains and validation") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    const auto rec = make_transformed(kbm, scale, TransformKind::Recurrent, 0.0);
    CHECK(rec.dom_left == kbm.left);
    CHECK(rec.dom_right == kbm.right);
    const auto high = make_transformed(kbm, scale, TransformKind::BesselHigh, 0.0);
    CHECK(high.dom_left == 0.0);
    CHECK(high.dom_right == 1.0);
    // s(l) = -inf: no low-side Bessel motion exists.
    CHECK_THROWS_AS(make_transformed(kbm, scale, TransformKind::BesselLow, 0.0),
                    InvalidSpecError);
}

TEST_CASE("default entrance offset matches the scale criterion") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    const Real d = default_entrance_offset(scale, 0.0, BesselSide::High);
    CHECK(std::fabs(scale.s(0.0 + d) - scale.s(0.0)) ==
          doctest::Approx(1e-6).epsilon(1e-3));
}

TEST_CASE("entrance launches never return to y") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    const auto high = make_transformed(kbm, scale, TransformKind::BesselHigh, 0.0);
    for (std::uint64_t i = 0; i < 200; ++i) {
        NormalStream ns(51, i);
        Real min_gap = kInf;
        auto obs = [&](Real, Real, Real& x_new) {
            min_gap = std::min(min_gap, x_new - 0.0);
            return true;
        };
        LaunchConfig lc;
        lc.dt = 1e-4;
        lc.horizon = 0.2;
        EntranceLauncher launcher;
        launch_entrance_walk(high, launcher, lc, ns, obs);
        CHECK(min_gap > 0.0);
    }
}

TEST_CASE("launch_entrance returns a well-formed path") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    const auto high = make_transformed(kbm, scale, TransformKind::BesselHigh, 0.0);
    EntranceLauncher launcher;
    const Path p = launch_entrance(high, launcher, 0.05, 1e-4, RandomSource{4}, 0);
    REQUIRE(p.size() >= 2);
    CHECK(p.times.front() == 0.0);
    CHECK(p.values.front() == 0.0);
    for (size_t i = 1; i < p.size(); ++i) {
        CHECK(p.times[i] == doctest::Approx(p.times[i - 1] + 1e-4));
        CHECK(p.values[i] >= 0.0);
    }
}

TEST_CASE("survival estimator") {
    const auto kbm = make_killed_bm(1.0);
    const auto scale = build_scale(kbm);
    // T = 0: the weights collapse and the estimate is exactly 1.
    const auto zero = survival_estimator(kbm, scale, 0.0, 0.0, 0.0, 1e-3, 100,
                                         RandomSource{7});
    CHECK(zero.value == doctest::Approx(1.0).epsilon(1e-12));
    // T = 1 from x = 0: reflection oracle 2 Phi(1) - 1.
    const auto est = survival_estimator(kbm, scale, 0.0, 0.0, 1.0, 1e-3, 4000,
                                        RandomSource{8});
    const Real oracle = 2.0 * normal_cdf(1.0) - 1.0;
    CHECK(std::fabs(est.value - oracle) < 3.0 * est.std_error);
    CHECK_THROWS(survival_estimator(kbm, scale, 0.0, 0.0, 1.0, 1e-3, 0, RandomSource{9}));
}

TEST_CASE("recurrence proxy: band visits grow with the horizon") {
    const auto ou = make_ou(1.0, 0.0);
    const auto scale = build_scale(ou);
    const auto rec = make_transformed(ou, scale, TransformKind::Recurrent, 0.0);
    const Real dt = 1e-3;
    const Real eps = default_bandwidth(1.0, dt);
    auto median_visits = [&](Real horizon) {
        const std::size_t n = 301;
        std::vector<Real> visits(n);
        parallel_paths(n, [&](std::size_t i) {
            NormalStream ns(1212, i);
            bool in_band = false;
            int entries = 0;
            auto obs = [&](Real, Real, Real& x_new) {
                const bool now = std::fabs(x_new) <= eps;
                if (now && !in_band) ++entries;
                in_band = now;
                return true;
            };
            WalkConfig wc;
            wc.dt = dt;
            wc.horizon = horizon;
            walk(wc, std::cref(rec.drift), std::cref(ou.sigma), ns, obs);
            visits[i] = entries;
        });
        std::nth_element(visits.begin(), visits.begin() + n / 2, visits.end());
        return visits[n / 2];
    };
    const Real m1 = median_visits(2.0);
    const Real m2 = median_visits(4.0);
    const Real m3 = median_visits(8.0);
    CHECK(m1 < m2);
    CHECK(m2 < m3);
}
