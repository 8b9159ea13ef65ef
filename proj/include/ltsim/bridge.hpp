#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltsim/diffusion.hpp"
#include "ltsim/engine.hpp"
#include "ltsim/local_time.hpp"
#include "ltsim/transforms.hpp"

namespace ltsim {

enum class ExitSide { None, Left, Right };
const char* to_string(ExitSide s);

struct IncompleteBridgeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Bridge configuration
// ---------------------------------------------------------------------------

struct BridgeConfig {
    Real y = 0.0;
    // Fixed target a, or a randomized draw Gamma ~ exponential(gamma_rate).
    bool randomized = false;
    Real a = 0.0;
    Real gamma_rate = 0.0;  // 0 -> default s'(y) / (2 u(y,y))

    Real dt = 1e-4;
    Real eps = 0.0;  // local-time bandwidth; 0 -> 5 sigma(y) sqrt(dt)

    // Two horizon semantics:
    //  - require_switch = true (bridge): phase 1 may auto-extend its horizon
    //    (x4, up to max_retries) until tau^y_{a-} is reached, then phase 2
    //    runs for up to `horizon` additional time or until the exit side is
    //    decided.
    //  - require_switch = false (decomposition): `horizon` is the absolute
    //    time budget; the drift switches only if the local time target is
    //    reached in time.
    bool require_switch = true;
    Real horizon = 10.0;
    Real phase1_horizon = 0.0;  // 0 -> 40 (1 + a) heuristic
    int max_retries = 3;

    EntranceLauncher launcher;
    Real drift_cap = 0.0;
    Real eta = 1e-3;  // exit-side decision threshold in scale units

    // Optional phase-1 excursion excision: when the path crosses the barrier
    // on a side from which return to y is almost sure, it is teleported to
    // just below/above the local-time band. Compresses the sojourn time while
    // preserving the local-time and path-above-barrier laws (strong Markov at
    // the first subsequent hitting of the teleport target).
    std::optional<Real> excise_low, excise_high;

    // Record the state and local-time estimate at this absolute time.
    std::optional<Real> probe_time;
};

struct BridgeOutcome {
    std::uint64_t stream_index = 0;
    int theta = 0;
    Real gamma = 0.0;            // target local time (a or the Gamma draw)
    bool switched = false;
    Real switch_time = kInf;     // interpolated tau-hat
    Real lt_at_switch = 0.0;
    Real lt_terminal = 0.0;
    ExitSide exit_side = ExitSide::None;
    bool killed = false;
    Real lifetime = kInf;
    Real t_end = 0.0;
    Real x_end = 0.0;
    bool incomplete = false;     // require_switch and tau not reached
    bool band_reentry = false;   // post-switch re-entry into the shrunk band
    bool probe_valid = false;
    Real x_probe = 0.0;
    Real lt_probe = 0.0;
};

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

class BridgeSampler {
public:
    BridgeSampler(const DiffusionSpec& spec, const ScaleTable& scale, BridgeConfig cfg);

    BridgeOutcome sample(const RandomSource& rng, std::uint64_t stream_index) const;
    // Fixed-target draw reusing this sampler's setup (used when pooling
    // bridges over externally drawn targets).
    BridgeOutcome sample_with_target(const RandomSource& rng, std::uint64_t stream_index,
                                     Real a) const;

    const BridgeConfig& config() const { return cfg_; }
    Real rho_y() const { return rho_y_; }
    Real default_gamma_rate() const { return gamma_rate_; }

private:
    BridgeOutcome sample_impl(const RandomSource& rng, std::uint64_t stream_index,
                              const Real* a_override) const;

    DiffusionSpec spec_;
    ScaleTable scale_;
    BridgeConfig cfg_;
    TransformedSpec recurrent_;
    TransformedSpec bessel_low_, bessel_high_;  // built on demand per case
    bool has_low_ = false, has_high_ = false;
    Real rho_y_ = 0.0;
    Real gamma_rate_ = 0.0;
    Real eps_ = 0.0;
    Real escape_low_x_ = -kInf, escape_high_x_ = kInf;
    bool use_escape_low_ = false, use_escape_high_ = false;
};

// Spec-level operations. sample_bridge throws IncompleteBridgeError when the
// phase-1 horizon is exhausted after all retries.
BridgeOutcome sample_bridge(const DiffusionSpec& spec, const ScaleTable& scale,
                            const BridgeConfig& cfg, const RandomSource& rng,
                            std::uint64_t stream_index);
BridgeOutcome sample_randomized_bridge(const DiffusionSpec& spec, const ScaleTable& scale,
                                       const BridgeConfig& cfg, const RandomSource& rng,
                                       std::uint64_t stream_index);
// Path-decomposition sampler: Gamma ~ exponential with mean 2u(y,y)/s'(y),
// theta ~ Bernoulli(rho(y)), recurrent transform pasted with a Bessel-type
// motion at tau^y_{Gamma-}; equal in law to the base diffusion.
BridgeOutcome sample_decomposition(const DiffusionSpec& spec, const ScaleTable& scale,
                                   const BridgeConfig& cfg, const RandomSource& rng,
                                   std::uint64_t stream_index);

std::string bridge_outcome_jsonl(const BridgeOutcome& o);

// ---------------------------------------------------------------------------
// Direct terminal local-time sampling (with exactness-preserving restarts)
// ---------------------------------------------------------------------------

struct SideRule {
    enum class Kind { None, Teleport, PsiRestart };
    Kind kind = Kind::None;
    Real level = 0.0;   // trigger level
    Real target = 0.0;  // teleport destination (Teleport only)
};

struct TerminalLTConfig {
    Real y = 0.0;
    Real x0 = kInf;  // start state; inf -> y
    Real dt = 1e-4;
    Real eps = 0.0;
    Real eta = 1e-3;      // escape thresholds at s^{-1}(eta), s^{-1}(1-eta)
    bool psi_restart_at_escape = true;
    SideRule low, high;   // explicit barrier rules override the eta thresholds
    Real horizon_cap = 1e6;
    Real drift_cap = 0.0;
    bool bb_correction = false;
};

struct TerminalLTDraw {
    Real lt = 0.0;
    ExitSide side = ExitSide::None;
    bool censored = false;  // horizon cap reached before the exit was decided
};

class TerminalLTSampler {
public:
    TerminalLTSampler(const DiffusionSpec& spec, const ScaleTable& scale,
                      TerminalLTConfig cfg);
    TerminalLTDraw sample(const RandomSource& rng, std::uint64_t stream_index) const;

private:
    DiffusionSpec spec_;
    ScaleTable scale_;
    TerminalLTConfig cfg_;
    BoundaryPolicy policy_;
    Real eps_ = 0.0;
    std::optional<Real> escape_low_, escape_high_;
};

// Two-sample comparison of terminal local times conditioned on the exit side.
struct IndependenceResult {
    Real statistic = 0.0;
    Real p_value = 1.0;
    std::size_t n_left = 0, n_right = 0;
    bool inconclusive = false;
    std::string note;
};

IndependenceResult lt_independence_check(const DiffusionSpec& spec, const ScaleTable& scale,
                                         Real x, Real y, std::size_t n_paths, Real dt,
                                         const RandomSource& rng);

}  // namespace ltsim
