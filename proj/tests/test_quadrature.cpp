#include <doctest.h>

#include <cmath>

#include "ltsim/quadrature.hpp"

using namespace ltsim;

TEST_CASE("adaptive simpson on smooth integrands") {
    CHECK(adaptive_simpson([](Real x) { return x * x; }, 0.0, 3.0, 1e-12) ==
          doctest::Approx(9.0).epsilon(1e-10));
    CHECK(adaptive_simpson([](Real x) { return std::sin(x); }, 0.0, M_PI, 1e-12) ==
          doctest::Approx(2.0).epsilon(1e-10));
    // Reversed limits flip the sign.
    CHECK(adaptive_simpson([](Real x) { return x; }, 2.0, 0.0, 1e-12) ==
          doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("adaptive simpson reports non-integrable integrands") {
    Real out;
    CHECK_FALSE(try_adaptive_simpson([](Real x) { return 1.0 / (x * x); }, -1.0, 1.0,
                                     1e-10, out));
}

TEST_CASE("improper integral toward a finite singular endpoint") {
    // int_0^1 x^{-1/2} dx = 2, singular at 0.
    const auto res = improper_toward([](Real x) { return 1.0 / std::sqrt(x); }, 1.0, 0.0,
                                     1e-10);
    CHECK(res.converged);
    CHECK(res.finite);
    CHECK(res.value == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("improper integral toward infinity") {
    // int_1^inf x^{-2} dx = 1.
    const auto res = improper_toward([](Real x) { return 1.0 / (x * x); }, 1.0, kInf,
                                     1e-10);
    CHECK(res.converged);
    CHECK(res.finite);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("improper integral detects divergence") {
    // int_0^1 dx/x diverges logarithmically (constant pieces).
    const auto log_div = improper_toward([](Real x) { return 1.0 / x; }, 1.0, 0.0, 1e-10);
    CHECK(log_div.converged);
    CHECK(log_div.diverged);
    // int_1^inf dx/x as well.
    const auto log_div2 = improper_toward([](Real x) { return 1.0 / x; }, 1.0, kInf,
                                          1e-10);
    CHECK(log_div2.converged);
    CHECK(log_div2.diverged);
    // Fast divergence hits the cap.
    const auto fast = improper_toward([](Real x) { return std::exp(x); }, 1.0, kInf,
                                      1e-10);
    CHECK(fast.diverged);
}
