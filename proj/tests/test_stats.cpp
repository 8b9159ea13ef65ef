#include <doctest.h>

#include <cmath>
#include <random>

#include "ltsim/rng.hpp"
#include "ltsim/stats.hpp"

using namespace ltsim;

namespace {

std::vector<Real> normal_sample(std::uint64_t seed, std::size_t n, Real shift = 0.0) {
    NormalStream ns(seed, 0);
    std::vector<Real> v(n);
    for (auto& x : v) x = ns.normal() + shift;
    return v;
}

std::vector<Real> exp_sample(std::uint64_t seed, std::size_t n, Real rate) {
    NormalStream ns(seed, 0);
    std::vector<Real> v(n);
    for (auto& x : v) x = ns.exponential(rate);
    return v;
}

}  // namespace

TEST_CASE("one-sample KS: null calibration over repetitions") {
    // Samples drawn from the hypothesized law itself: at alpha = 0.01 the
    // rejection rate over 500 seeded repetitions must sit in [0.2%, 3%], and
    // at least 98 of the first 100 repetitions must not reject.
    auto cdf = [](Real x) { return normal_cdf(x); };
    int rejections_500 = 0, rejections_100 = 0;
    for (int rep = 0; rep < 500; ++rep) {
        const auto v = normal_sample(1000 + rep, 1000);
        const auto r = ks_one_sample(v, cdf);
        if (r.p_value <= 0.01) {
            ++rejections_500;
            if (rep < 100) ++rejections_100;
        }
    }
    CHECK(rejections_500 >= 1);
    CHECK(rejections_500 <= 15);  // 3% of 500
    CHECK(rejections_100 <= 2);
}

TEST_CASE("one-sample KS: power against a shifted location") {
    auto cdf = [](Real x) { return normal_cdf(x); };
    const std::size_t n = 10000;
    int rejected = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto v = normal_sample(77 + rep, n, 6.0 / std::sqrt(static_cast<Real>(n)));
        if (ks_one_sample(v, cdf).p_value < 0.01) ++rejected;
    }
    CHECK(rejected >= 18);
}

TEST_CASE("one-sample KS guards the minimum sample size") {
    std::vector<Real> tiny(10, 0.5);
    CHECK_THROWS(ks_one_sample(tiny, [](Real x) { return x; }));
}

TEST_CASE("two-sample KS basics and calibration") {
    const auto a = normal_sample(5, 2000);
    CHECK(ks_two_sample(a, a).statistic == 0.0);

    int rejections = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = normal_sample(900 + 2 * rep, 1500);
        const auto y = normal_sample(901 + 2 * rep, 1500);
        if (ks_two_sample(x, y).p_value <= 0.01) ++rejections;
    }
    CHECK(rejections <= 2);

    // Exponentials with rates 20% apart at n = 1e4 reject decisively.
    const auto e1 = exp_sample(42, 10000, 1.0);
    const auto e2 = exp_sample(43, 10000, 1.2);
    CHECK(ks_two_sample(e1, e2).p_value < 0.01);
}

TEST_CASE("KS statistic is in [0,1] and invariant under monotone maps") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<Real> u(0.1, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = normal_sample(3000 + rep, 800);
        const auto b = normal_sample(4000 + rep, 900, 0.1);
        const auto base = ks_two_sample(a, b);
        CHECK(base.statistic >= 0.0);
        CHECK(base.statistic <= 1.0);
        const Real c1 = u(gen), c3 = u(gen), c0 = u(gen) - 1.0;
        auto mono = [&](Real x) { return c0 + c1 * x + c3 * x * x * x; };
        std::vector<Real> ma, mb;
        for (Real x : a) ma.push_back(mono(x));
        for (Real x : b) mb.push_back(mono(x));
        const auto mapped = ks_two_sample(ma, mb);
        CHECK(mapped.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
    }
}

TEST_CASE("exp_fit_check on exponential samples") {
    const auto good = exp_sample(11, 5000, 0.5);
    CHECK(exp_fit_check(good, 0.5).passed);
    // Rate mis-specified by a factor of two: rejected.
    CHECK_FALSE(exp_fit_check(good, 1.0).passed);
}

TEST_CASE("bernoulli_check") {
    CHECK(bernoulli_check(1000, 1000, 1.0).passed);
    CHECK_FALSE(bernoulli_check(999, 1000, 1.0).passed);
    CHECK(bernoulli_check(5023, 10000, 0.5).passed);
    // A 5-standard-error deviation fails.
    const std::size_t n = 10000;
    const std::size_t count =
        static_cast<std::size_t>(0.5 * n + 5.0 * std::sqrt(0.25 * n));
    CHECK_FALSE(bernoulli_check(count, n, 0.5).passed);
    CHECK_THROWS(bernoulli_check(10, 50, 0.5));
}

TEST_CASE("test report rendering") {
    TestReport rep;
    TestEntry e;
    e.name = "demo.check";
    e.statistic = 0.012;
    e.p_value = 0.44;
    e.n = 1234;
    e.alpha = 0.01;
    e.passed = true;
    e.notes = "oracle: closed form";
    rep.add(e);
    e.name = "demo.fail";
    e.passed = false;
    rep.add(e);
    CHECK_FALSE(rep.all_passed());
    const auto js = rep.to_json();
    CHECK(js.find("\"name\":\"demo.check\"") != std::string::npos);
    CHECK(js.find("\"passed\":false") != std::string::npos);
    const auto tbl = rep.to_table();
    CHECK(tbl.find("PASS") != std::string::npos);
    CHECK(tbl.find("FAIL") != std::string::npos);
}
