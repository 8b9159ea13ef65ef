#include <doctest.h>

#include <cmath>

#include "ltsim/bridge.hpp"
#include "ltsim/stats.hpp"

using namespace ltsim;

TEST_CASE("killed BM bridges: theta = 1 and right exit in every completed path") {
    const auto spec = make_killed_bm(1.0);
    const auto scale = build_scale(spec);
    BridgeConfig bc;
    bc.y = 0.0;
    bc.a = 0.5;
    bc.dt = 5e-4;
    bc.horizon = 40.0;
    bc.excise_low = -3.0;
    BridgeSampler sampler(spec, scale, bc);
    const RandomSource rng{100};
    for (std::uint64_t i = 0; i < 400; ++i) {
        const auto o = sampler.sample(rng, i);
        CHECK(o.theta == 1);
        if (!o.incomplete && o.killed) {
            CHECK(o.exit_side == ExitSide::Right);
            CHECK(o.lifetime > o.switch_time);
        }
        CHECK_FALSE(o.band_reentry);
    }
}

TEST_CASE("a = 0 bridge reduces to the Bessel-type motion from y") {
    // Killed BM with a = 0: phase 1 is empty and the path is a Bessel-3
    // motion from 0 killed at b. Cross-check the t = 0.25 marginal against a
    // direct entrance launch.
    const auto spec = make_killed_bm(1.0);
    const auto scale = build_scale(spec);
    const std::size_t n = 4000;
    const Real probe = 0.25;

    BridgeConfig bc;
    bc.y = 0.0;
    bc.a = 0.0;
    bc.dt = 2e-4;
    bc.horizon = 5.0;
    bc.probe_time = probe;
    BridgeSampler sampler(spec, scale, bc);
    std::vector<Real> from_bridge;
    const RandomSource rng{2211};
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto o = sampler.sample(rng, i);
        CHECK(o.switch_time == 0.0);
        if (o.probe_valid) from_bridge.push_back(o.x_probe);
    }

    const auto high = make_transformed(spec, scale, TransformKind::BesselHigh, 0.0);
    std::vector<Real> direct;
    for (std::uint64_t i = 0; i < n; ++i) {
        NormalStream ns(777777, i);
        Real x_at = kInf;
        auto obs = [&](Real t_new, Real, Real& x_new) {
            if (t_new >= probe - 1e-4) {
                x_at = x_new;
                return false;
            }
            return true;
        };
        LaunchConfig lc;
        lc.dt = 2e-4;
        lc.horizon = 5.0;
        EntranceLauncher launcher;
        const auto res = launch_entrance_walk(high, launcher, lc, ns, obs);
        if (!res.killed && std::isfinite(x_at)) direct.push_back(x_at);
    }
    const auto ks = ks_two_sample(from_bridge, direct);
    CHECK(ks.p_value > 0.001);
}

TEST_CASE("randomized bridge pins the local time at Gamma") {
    const auto ou = make_ou(1.0, 0.0);
    const auto scale = build_scale(ou);
    BridgeConfig bc;
    bc.y = 0.0;
    bc.dt = 2e-4;
    bc.horizon = 10.0;
    bc.randomized = true;
    BridgeSampler sampler(ou, scale, bc);
    const Real eps = default_bandwidth(1.0, bc.dt);
    const RandomSource rng{55};
    const std::size_t n = 1000;
    std::size_t within = 0, completed = 0;
    Real corr_num = 0.0, tsum = 0.0, gsum = 0.0, t2 = 0.0, g2 = 0.0;
    std::vector<Real> thetas, gammas;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto o = sampler.sample(rng, i);
        thetas.push_back(o.theta);
        gammas.push_back(o.gamma);
        if (o.incomplete) continue;
        ++completed;
        // Band-edge bias (the launch climb-out can make a few band transits,
        // each worth about eps) plus interpolation slack.
        if (std::fabs(o.lt_terminal - o.gamma) <= 3.0 * eps + 0.05 * o.gamma) ++within;
    }
    CHECK(completed > 9 * n / 10);
    CHECK(static_cast<Real>(within) >= 0.99 * completed);

    // theta and Gamma are drawn independently.
    for (std::size_t i = 0; i < n; ++i) {
        tsum += thetas[i];
        gsum += gammas[i];
    }
    tsum /= n;
    gsum /= n;
    for (std::size_t i = 0; i < n; ++i) {
        corr_num += (thetas[i] - tsum) * (gammas[i] - gsum);
        t2 += (thetas[i] - tsum) * (thetas[i] - tsum);
        g2 += (gammas[i] - gsum) * (gammas[i] - gsum);
    }
    const Real corr = corr_num / std::sqrt(t2 * g2);
    CHECK(std::fabs(corr) < 3.0 / std::sqrt(static_cast<Real>(n)));
}

TEST_CASE("disintegration: pooled fixed-a bridges match the randomized bridge") {
    const auto ou = make_ou(1.0, 0.0);
    const auto scale = build_scale(ou);
    const Real rate = terminal_lt_rate(scale, 0.0);
    const std::size_t n = 1500;

    BridgeConfig bc;
    bc.y = 0.0;
    bc.dt = 5e-4;
    bc.horizon = 10.0;
    bc.probe_time = 1.0;

    // Pool fixed-a outcomes over a ~ exponential(rate).
    std::vector<Real> pooled_lt, pooled_x;
    {
        NormalStream adraws(909, 0);
        BridgeSampler sampler(ou, scale, bc);
        for (std::uint64_t i = 0; i < n; ++i) {
            const Real a = adraws.exponential(rate);
            const auto o = sampler.sample_with_target(RandomSource{7100}, i, a);
            if (o.incomplete) continue;
            pooled_lt.push_back(o.lt_terminal);
            if (o.probe_valid) pooled_x.push_back(o.x_probe);
        }
    }
    std::vector<Real> rand_lt, rand_x;
    {
        BridgeConfig rc = bc;
        rc.randomized = true;
        BridgeSampler sampler(ou, scale, rc);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto o = sampler.sample(RandomSource{8200}, i);
            if (o.incomplete) continue;
            rand_lt.push_back(o.lt_terminal);
            if (o.probe_valid) rand_x.push_back(o.x_probe);
        }
    }
    CHECK(ks_two_sample(pooled_lt, rand_lt).p_value > 0.001);
    CHECK(ks_two_sample(pooled_x, rand_x).p_value > 0.001);
}

TEST_CASE("incomplete bridges flag and throw") {
    const auto ou = make_ou(1.0, 0.0);
    const auto scale = build_scale(ou);
    BridgeConfig bc;
    bc.y = 0.0;
    bc.a = 5.0;
    bc.dt = 1e-3;
    bc.phase1_horizon = 0.002;  // far too short for a = 5
    bc.max_retries = 0;
    bc.horizon = 1.0;
    BridgeSampler sampler(ou, scale, bc);
    const auto o = sampler.sample(RandomSource{1}, 0);
    CHECK(o.incomplete);
    CHECK_THROWS_AS(sample_bridge(ou, scale, bc, RandomSource{1}, 0),
                    IncompleteBridgeError);
}

TEST_CASE("terminal local-time sampler: killed BM law at reduced size") {
    const auto spec = make_killed_bm(1.0);
    const auto scale = build_scale(spec);
    TerminalLTConfig tc;
    tc.y = 0.0;
    tc.dt = 2e-4;
    tc.low = {SideRule::Kind::Teleport, -3.0, -1.25 * default_bandwidth(1.0, 2e-4)};
    TerminalLTSampler sampler(spec, scale, tc);
    const std::size_t n = 3000;
    std::vector<Real> lt(n);
    parallel_paths(n, [&](std::size_t i) {
        const auto d = sampler.sample(RandomSource{31415}, i);
        CHECK_FALSE(d.censored);
        CHECK(d.side == ExitSide::Right);
        lt[i] = d.lt;
    });
    const auto e = exp_fit_check(lt, 0.5, 0.001, "lt_law_smoke", "mean 2b");
    CHECK(e.passed);
}

TEST_CASE("independence check degenerates gracefully on one-sided models") {
    const auto spec = make_killed_bm(1.0);
    const auto scale = build_scale(spec);
    const auto r = lt_independence_check(spec, scale, 0.0, 0.0, 200, 1e-3,
                                         RandomSource{5});
    CHECK(r.inconclusive);
}

TEST_CASE("bridge outcome serialization") {
    BridgeOutcome o;
    o.stream_index = 3;
    o.theta = 1;
    o.switch_time = 0.25;
    o.lt_at_switch = 0.5;
    o.lt_terminal = 0.51;
    o.exit_side = ExitSide::Right;
    o.lifetime = 1.5;
    const auto s = bridge_outcome_jsonl(o);
    CHECK(s.find("\"seed\":3") != std::string::npos);
    CHECK(s.find("\"theta\":1") != std::string::npos);
    CHECK(s.find("\"exit_side\":\"right\"") != std::string::npos);
}
