#include <doctest.h>

#include <chrono>
#include <cmath>

#include "ltsim/engine.hpp"
#include "ltsim/stats.hpp"

using namespace ltsim;

TEST_CASE("em_step basics") {
    // Frozen dynamics.
    CHECK(em_step(1.0, 0.0, 0.0, 0.01, 1.7) == 1.0);
    // Deterministic ODE step.
    CHECK(em_step(0.0, 2.0, 0.0, 0.5, -0.3) == doctest::Approx(1.0));
    CHECK_THROWS(em_step(std::nan(""), 0.0, 1.0, 0.1, 0.0));
}

TEST_CASE("unit BM moments at t=1") {
    const std::size_t n = 100000;
    const Real dt = 1e-3;
    std::vector<Real> x1(n);
    parallel_paths(n, [&](std::size_t i) {
        NormalStream ns(2024, i);
        WalkConfig wc;
        wc.dt = dt;
        wc.horizon = 1.0;
        NullObserver nop;
        const auto res = walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; },
                              ns, nop);
        x1[i] = res.x_end;
    });
    const Real m = mean_of(x1);
    const Real v = stddev_of(x1);
    CHECK(std::fabs(m) < 3.0 / std::sqrt(static_cast<Real>(n)));
    CHECK(v * v == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("killed BM killing probability by t=1") {
    // P(killed by t=1) = 2(1 - Phi(1)) by the reflection principle.
    const std::size_t n = 10000;
    std::size_t killed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        NormalStream ns(77, i);
        WalkConfig wc;
        wc.dt = 1e-3;
        wc.horizon = 1.0;
        wc.right = 1.0;
        wc.kill_right = true;
        wc.bb_correct_right = true;
        NullObserver nop;
        const auto res = walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; },
                              ns, nop);
        killed += res.killed ? 1 : 0;
    }
    const Real p = 2.0 * (1.0 - normal_cdf(1.0));
    const Real se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::fabs(static_cast<Real>(killed) / n - p) < 3.0 * se);
}

TEST_CASE("deterministic decay is killed at the expected lifetime") {
    NormalStream ns(5, 0);
    WalkConfig wc;
    wc.x0 = 0.5;
    wc.dt = 1e-3;
    wc.horizon = 2.0;
    wc.left = 0.0;
    wc.right = 1.0;
    wc.kill_left = true;
    wc.kill_right = true;
    NullObserver nop;
    const auto res = walk(wc, [](Real) { return -1.0; }, [](Real) { return 1e-12; },
                          ns, nop);
    CHECK(res.killed);
    CHECK(res.reason == StopReason::KilledLeft);
    CHECK(res.lifetime == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("hit_level at the start level triggers immediately") {
    NormalStream ns(8, 0);
    WalkConfig wc;
    wc.x0 = 0.3;
    wc.dt = 1e-3;
    wc.horizon = 10.0;
    wc.hit = StopRule::HitLevel{0.3, 0.0};
    NullObserver nop;
    const auto res = walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; }, ns, nop);
    CHECK(res.reason == StopReason::HitLevel);
    CHECK(res.t_end == doctest::Approx(1e-3));
}

TEST_CASE("first hitting time of BM at level 1 matches the Levy law") {
    // One-sample KS of T_1 conditioned on T_1 <= H against F(t)/F(H),
    // F(t) = 2(1 - Phi(1/sqrt(t))).
    const std::size_t n = 10000;
    const Real dt = 1e-4, H = 8.0;
    std::vector<Real> all(n, kInf);
    parallel_paths(n, [&](std::size_t i) {
        NormalStream ns(4242, i);
        WalkConfig wc;
        wc.dt = dt;
        wc.horizon = H;
        wc.right = 1.0;
        wc.kill_right = true;
        wc.bb_correct_right = true;
        NullObserver nop;
        const auto res = walk(wc, [](Real) { return 0.0; }, [](Real) { return 1.0; },
                              ns, nop);
        if (res.killed) all[i] = res.lifetime;
    });
    std::vector<Real> hits;
    hits.reserve(n);
    for (Real t : all)
        if (std::isfinite(t)) hits.push_back(t);
    auto cdf_full = [](Real t) { return 2.0 * (1.0 - normal_cdf(1.0 / std::sqrt(t))); };
    const Real fh = cdf_full(H);
    const auto ks = ks_one_sample(hits, [&](Real t) { return cdf_full(t) / fh; });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("path-level hitting and passage helpers") {
    Path p;
    p.times = {0.0, 0.1, 0.2, 0.3};
    p.values = {0.5, 0.5, 0.5, 0.5};
    CHECK(first_hitting_time(p, 0.5, 1e-12) == 0.0);
    CHECK(first_hitting_time(p, 2.0, 1e-12) == kInf);
    CHECK(last_passage_time(p, 2.0, 1e-12).time == -kInf);

    Path q;
    q.times = {0.0, 1.0, 2.0, 3.0};
    q.values = {0.0, 1.0, 0.5, 2.0};  // crosses 0.75 at steps 1, 2, 3
    CHECK(first_hitting_time(q, 0.75, 0.0) == 1.0);
    CHECK(last_passage_time(q, 0.75, 0.0).time == 3.0);
    // Single crossing: first hit equals last passage.
    Path r;
    r.times = {0.0, 1.0, 2.0};
    r.values = {0.0, 0.2, 1.0};
    CHECK(first_hitting_time(r, 0.5, 0.0) == last_passage_time(r, 0.5, 0.0).time);
}

TEST_CASE("simulate is reproducible and respects boundaries") {
    const auto spec = make_killed_bm(1.0);
    StopRule stop;
    stop.horizon = 0.5;
    const RandomSource rng{9001};

    const Path a = simulate(spec, spec.drift, 0.0, stop, 1e-3, rng, 3);
    const Path b = simulate(spec, spec.drift, 0.0, stop, 1e-3, rng, 3);
    REQUIRE(a.values.size() == b.values.size());
    for (size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);

    const Path c = simulate(spec, spec.drift, 0.0, stop, 1e-3, rng, 4);
    bool identical = a.values.size() == c.values.size();
    if (identical)
        for (size_t i = 0; i < a.values.size(); ++i)
            if (a.values[i] != c.values[i]) { identical = false; break; }
    CHECK_FALSE(identical);

    for (std::uint64_t idx = 0; idx < 50; ++idx) {
        const Path p2 = simulate(spec, spec.drift, 0.0, stop, 1e-3, rng, idx);
        if (p2.killed) {
            CHECK(p2.values.back() == 1.0);
        } else {
            for (Real v : p2.values) CHECK(v < 1.0);
        }
    }
    StopRule none;
    none.horizon.reset();
    none.boundary_exit = false;
    CHECK_THROWS(simulate(spec, spec.drift, 0.0, none, 1e-3, rng, 0));
}

TEST_CASE("walk throughput (informational)") {
    NormalStream ns(1, 1);
    WalkConfig wc;
    wc.dt = 1e-4;
    wc.horizon = 200.0;  // 2e6 steps
    NullObserver nop;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = walk(wc, [](Real x) { return -0.1 * x; }, [](Real) { return 1.0; },
                          ns, nop);
    const auto t1 = std::chrono::steady_clock::now();
    const double ns_per_step =
        std::chrono::duration<double, std::nano>(t1 - t0).count() / res.steps;
    MESSAGE("walk throughput: " << ns_per_step << " ns/step");
    CHECK(res.steps == 2000000);
}
