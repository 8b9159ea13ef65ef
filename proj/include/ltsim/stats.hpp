#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ltsim/quadrature.hpp"

namespace ltsim {

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov tests
// ---------------------------------------------------------------------------

struct KsResult {
    Real statistic = 0.0;
    Real p_value = 1.0;
    std::size_t n = 0, n2 = 0;
    bool tie_warning = false;  // ties in samples from a continuous model
};

// One-sample KS against a CDF; asymptotic Kolmogorov p-value with the usual
// finite-n effective argument. Requires n >= 50.
KsResult ks_one_sample(std::vector<Real> samples, const std::function<Real(Real)>& cdf);

// Two-sample KS with effective sample size n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::vector<Real> a, std::vector<Real> b);

// Survival function of the Kolmogorov distribution, Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
Real kolmogorov_q(Real lambda);

// ---------------------------------------------------------------------------
// TestReport
// ---------------------------------------------------------------------------

struct TestEntry {
    std::string name;
    Real statistic = 0.0;
    Real p_value = 1.0;
    std::size_t n = 0;
    std::size_t n2 = 0;      // 0 when not a two-sample test
    Real alpha = 0.01;
    bool passed = false;
    std::string notes;       // names the oracle
};

struct TestReport {
    std::vector<TestEntry> entries;

    bool all_passed() const;
    void add(TestEntry e) { entries.push_back(std::move(e)); }
    void merge(const TestReport& other);
    std::string to_json() const;
    std::string to_table() const;  // fixed-width rendering
};

// ---------------------------------------------------------------------------
// Named checks
// ---------------------------------------------------------------------------

// KS against Exponential(rate) plus a 3-standard-error check of the mean.
TestEntry exp_fit_check(const std::vector<Real>& samples, Real rate, Real alpha = 0.01,
                        const std::string& name = "exp_fit",
                        const std::string& oracle = "exponential law");

// Two-sided normal-approximation test of a Bernoulli frequency. Requires
// n >= 100. Degenerate p in {0,1} is checked exactly.
TestEntry bernoulli_check(std::size_t count_ones, std::size_t n, Real p, Real alpha = 0.01,
                          const std::string& name = "bernoulli",
                          const std::string& oracle = "binomial oracle");

// Convenience wrappers producing TestEntry from KS results.
TestEntry ks_entry_one_sample(const std::string& name, const std::vector<Real>& samples,
                              const std::function<Real(Real)>& cdf, Real alpha,
                              const std::string& oracle);
TestEntry ks_entry_two_sample(const std::string& name, const std::vector<Real>& a,
                              const std::vector<Real>& b, Real alpha,
                              const std::string& oracle);

// Mean-difference check: passes when |mean(a) - ref| <= k * se.
TestEntry mean_vs_value_check(const std::string& name, const std::vector<Real>& samples,
                              Real ref, Real k_se, const std::string& oracle);

// Standard normal CDF.
Real normal_cdf(Real z);

// Sample helpers.
Real mean_of(const std::vector<Real>& v);
Real stddev_of(const std::vector<Real>& v);

}  // namespace ltsim
