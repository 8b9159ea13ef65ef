#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltsim/stats.hpp"

namespace ltsim::suites {

struct SuiteConfig {
    std::uint64_t seed = 1;  // base seed; statistical entries vote over 3 derived seeds
    std::size_t n = 10000;   // desk-scale batch size
    Real dt = 1e-4;
    Real alpha = 0.01;
    bool quick = false;      // reduced batches for smoke runs
};

// Acceptance criteria. Statistical entries apply the 2-of-3-seeds rule at the
// configured alpha; deterministic entries run once.
TestReport criterion_terminal_lt_law(const SuiteConfig& cfg);     // 1
TestReport criterion_bridge_pinning(const SuiteConfig& cfg);      // 2
TestReport criterion_theta_law(const SuiteConfig& cfg);           // 3
TestReport criterion_path_decomposition(const SuiteConfig& cfg);  // 4
TestReport criterion_randomized_bridge(const SuiteConfig& cfg);   // 5
TestReport criterion_survival_identity(const SuiteConfig& cfg);   // 6
TestReport criterion_time_reversal(const SuiteConfig& cfg);       // 7
TestReport criterion_semigroup_identity(const SuiteConfig& cfg);  // 8
TestReport criterion_entrance_launcher(const SuiteConfig& cfg);   // 9
TestReport criterion_lt_independence(const SuiteConfig& cfg);     // 10
TestReport criterion_numerical_layer(const SuiteConfig& cfg);     // 11

struct Criterion {
    int number;
    const char* label;
    TestReport (*run)(const SuiteConfig&);
};
const std::vector<Criterion>& all_criteria();

// Suites: core, bridge, decomposition, reversal, independence, all.
std::vector<std::string> suite_names();
bool is_suite_name(const std::string& name);
TestReport run_suite(const std::string& name, const SuiteConfig& cfg);

}  // namespace ltsim::suites
