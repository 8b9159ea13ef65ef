#include "ltsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ltsim {

Real normal_cdf(Real z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Real mean_of(const std::vector<Real>& v) {
    Real s = 0.0;
    for (Real x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<Real>(v.size());
}

Real stddev_of(const std::vector<Real>& v) {
    if (v.size() < 2) return 0.0;
    const Real m = mean_of(v);
    Real ss = 0.0;
    for (Real x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<Real>(v.size() - 1));
}

Real kolmogorov_q(Real lambda) {
    if (lambda < 1e-8) return 1.0;
    Real sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const Real term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Effective argument with the small-sample adjustment.
Real ks_pvalue(Real d, Real n_eff) {
    const Real rn = std::sqrt(n_eff);
    return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

bool has_ties(const std::vector<Real>& sorted) {
    for (size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] == sorted[i - 1]) return true;
    return false;
}

}  // namespace

KsResult ks_one_sample(std::vector<Real> samples, const std::function<Real(Real)>& cdf) {
    if (samples.size() < 50)
        throw std::invalid_argument("ks_one_sample: need at least 50 samples");
    std::sort(samples.begin(), samples.end());
    const size_t n = samples.size();
    Real d = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Real f = cdf(samples[i]);
        const Real lo = static_cast<Real>(i) / n;
        const Real hi = static_cast<Real>(i + 1) / n;
        d = std::max(d, std::max(std::fabs(f - lo), std::fabs(hi - f)));
    }
    KsResult r;
    r.statistic = d;
    r.n = n;
    r.p_value = ks_pvalue(d, static_cast<Real>(n));
    r.tie_warning = has_ties(samples);
    return r;
}

KsResult ks_two_sample(std::vector<Real> a, std::vector<Real> b) {
    if (a.size() < 50 || b.size() < 50)
        throw std::invalid_argument("ks_two_sample: need at least 50 samples per side");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const size_t n1 = a.size(), n2 = b.size();
    size_t i = 0, j = 0;
    Real d = 0.0;
    while (i < n1 && j < n2) {
        const Real x = std::min(a[i], b[j]);
        while (i < n1 && a[i] <= x) ++i;
        while (j < n2 && b[j] <= x) ++j;
        const Real fa = static_cast<Real>(i) / n1;
        const Real fb = static_cast<Real>(j) / n2;
        d = std::max(d, std::fabs(fa - fb));
    }
    KsResult r;
    r.statistic = d;
    r.n = n1;
    r.n2 = n2;
    const Real n_eff = static_cast<Real>(n1) * n2 / static_cast<Real>(n1 + n2);
    r.p_value = ks_pvalue(d, n_eff);
    return r;
}

bool TestReport::all_passed() const {
    for (const auto& e : entries)
        if (!e.passed) return false;
    return true;
}

void TestReport::merge(const TestReport& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string TestReport::to_json() const {
    std::ostringstream os;
    os << "{\"entries\":[";
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "\"statistic\":%.10g,\"p_value\":%.10g,\"n\":%zu,\"n2\":%zu,"
                      "\"alpha\":%.10g,\"passed\":%s",
                      e.statistic, e.p_value, e.n, e.n2, e.alpha,
                      e.passed ? "true" : "false");
        os << (i ? "," : "") << "{\"name\":\"" << json_escape(e.name) << "\"," << buf
           << ",\"notes\":\"" << json_escape(e.notes) << "\"}";
    }
    os << "]}";
    return os.str();
}

std::string TestReport::to_table() const {
    std::ostringstream os;
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%-44s %10s %10s %8s %8s %6s\n", "check", "stat",
                  "p_value", "n", "alpha", "pass");
    os << buf;
    os << std::string(92, '-') << "\n";
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof(buf), "%-44s %10.4g %10.4g %8zu %8.3g %6s\n",
                      e.name.c_str(), e.statistic, e.p_value, e.n, e.alpha,
                      e.passed ? "PASS" : "FAIL");
        os << buf;
    }
    return os.str();
}

TestEntry exp_fit_check(const std::vector<Real>& samples, Real rate, Real alpha,
                        const std::string& name, const std::string& oracle) {
    TestEntry e;
    e.name = name;
    e.alpha = alpha;
    e.n = samples.size();
    e.notes = oracle;
    const auto ks = ks_one_sample(samples, [rate](Real t) {
        return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * t);
    });
    e.statistic = ks.statistic;
    e.p_value = ks.p_value;
    const Real m = mean_of(samples);
    const Real se = stddev_of(samples) / std::sqrt(static_cast<Real>(samples.size()));
    const bool mean_ok = std::fabs(m - 1.0 / rate) <= 3.0 * se;
    e.passed = (ks.p_value > alpha) && mean_ok;
    if (!mean_ok) e.notes += " [mean outside 3 SE]";
    return e;
}

TestEntry bernoulli_check(std::size_t count_ones, std::size_t n, Real p, Real alpha,
                          const std::string& name, const std::string& oracle) {
    if (n < 100) throw std::invalid_argument("bernoulli_check: need n >= 100");
    TestEntry e;
    e.name = name;
    e.alpha = alpha;
    e.n = n;
    e.notes = oracle;
    const Real phat = static_cast<Real>(count_ones) / n;
    if (p <= 0.0 || p >= 1.0) {
        e.statistic = phat;
        e.p_value = (phat == p) ? 1.0 : 0.0;
        e.passed = phat == p;
        return e;
    }
    const Real z = (phat - p) / std::sqrt(p * (1.0 - p) / n);
    e.statistic = z;
    e.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    e.passed = e.p_value > alpha;
    return e;
}

TestEntry ks_entry_one_sample(const std::string& name, const std::vector<Real>& samples,
                              const std::function<Real(Real)>& cdf, Real alpha,
                              const std::string& oracle) {
    const auto r = ks_one_sample(samples, cdf);
    TestEntry e;
    e.name = name;
    e.statistic = r.statistic;
    e.p_value = r.p_value;
    e.n = r.n;
    e.alpha = alpha;
    e.passed = r.p_value > alpha;
    e.notes = oracle;
    return e;
}

TestEntry ks_entry_two_sample(const std::string& name, const std::vector<Real>& a,
                              const std::vector<Real>& b, Real alpha,
                              const std::string& oracle) {
    const auto r = ks_two_sample(a, b);
    TestEntry e;
    e.name = name;
    e.statistic = r.statistic;
    e.p_value = r.p_value;
    e.n = r.n;
    e.n2 = r.n2;
    e.alpha = alpha;
    e.passed = r.p_value > alpha;
    e.notes = oracle;
    return e;
}

TestEntry mean_vs_value_check(const std::string& name, const std::vector<Real>& samples,
                              Real ref, Real k_se, const std::string& oracle) {
    TestEntry e;
    e.name = name;
    e.n = samples.size();
    e.notes = oracle;
    const Real m = mean_of(samples);
    const Real se = stddev_of(samples) / std::sqrt(static_cast<Real>(samples.size()));
    const Real z = se > 0.0 ? (m - ref) / se : 0.0;
    e.statistic = z;
    e.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    e.alpha = 2.0 * (1.0 - normal_cdf(k_se));  // pass iff |z| <= k_se
    e.passed = std::fabs(z) <= k_se;
    return e;
}

}  // namespace ltsim
