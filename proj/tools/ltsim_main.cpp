// Command-line harness: inspect the analytic layer of a diffusion, run batch
// simulations, sample local-time bridges and path decompositions, and run the
// validation suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltsim/bridge.hpp"
#include "ltsim/diffusion.hpp"
#include "ltsim/engine.hpp"
#include "ltsim/local_time.hpp"
#include "ltsim/stats.hpp"
#include "ltsim/suites.hpp"
#include "ltsim/transforms.hpp"

using nlohmann::json;
using namespace ltsim;

namespace {

Real json_extended_real(const json& j, Real fallback) {
    if (j.is_null()) return fallback;
    if (j.is_number()) return j.get<Real>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw InvalidSpecError("spec file: cannot parse extended real: " + j.dump());
}

struct LoadedSpec {
    DiffusionSpec spec;
    std::optional<TransformKind> transform;
    Real transform_y = 0.0;
};

LoadedSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpecError("cannot open spec file: " + path);
    json j;
    in >> j;

    const std::string model = j.value("model", "");
    const json params = j.value("params", json::object());
    LoadedSpec out;
    if (model == "killed_bm") {
        out.spec = make_killed_bm(params.value("b", 1.0));
    } else if (model == "ou") {
        out.spec = make_ou(params.value("r_coef", 1.0), params.value("b_coef", 0.0));
    } else if (model == "sq_bessel") {
        out.spec = make_sq_bessel(params.value("delta", 4.0));
    } else if (model == "custom") {
        if (!params.contains("drift_poly") || !params.contains("sigma_poly"))
            throw InvalidSpecError("custom model needs drift_poly and sigma_poly");
        const auto dc = params["drift_poly"].get<std::vector<Real>>();
        const auto sc = params["sigma_poly"].get<std::vector<Real>>();
        const Real l = json_extended_real(j.value("l", json()), -kInf);
        const Real r = json_extended_real(j.value("r", json()), kInf);
        const Real anchor = j.value("anchor", 0.0);
        out.spec = make_polynomial(dc, sc, l, r, anchor);
    } else {
        throw InvalidSpecError("unknown model: '" + model + "'");
    }
    if (j.contains("l")) out.spec.left = json_extended_real(j["l"], out.spec.left);
    if (j.contains("r")) out.spec.right = json_extended_real(j["r"], out.spec.right);
    if (j.contains("anchor")) out.spec.anchor = j["anchor"].get<Real>();

    if (j.contains("transform")) {
        const json t = j["transform"];
        const std::string kind = t.value("kind", "");
        if (kind == "recurrent") out.transform = TransformKind::Recurrent;
        else if (kind == "bessel_low") out.transform = TransformKind::BesselLow;
        else if (kind == "bessel_high") out.transform = TransformKind::BesselHigh;
        else if (kind == "cond_exit_low") out.transform = TransformKind::CondExitLow;
        else if (kind == "cond_exit_high") out.transform = TransformKind::CondExitHigh;
        else throw InvalidSpecError("unknown transform kind: '" + kind + "'");
        if (!t.contains("y")) throw InvalidSpecError("transform needs a level y");
        out.transform_y = t["y"].get<Real>();
    }
    return out;
}

struct CommonOpts {
    std::string spec_path;
    Real y = 0.0;
    Real a = 0.0;
    std::size_t n = 10000;
    Real dt = 1e-4;
    Real eps = 0.0;
    Real horizon = 1.0;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string launcher = "offset";
    Real alpha = 0.01;
    Real x0 = kInf;
    std::size_t dump_paths = 0;
    bool randomize = false;
};

EntranceLauncher parse_launcher(const std::string& name) {
    EntranceLauncher l;
    if (name == "offset") l.mode = EntranceLauncher::Mode::Offset;
    else if (name == "exact") l.mode = EntranceLauncher::Mode::ExactBessel3;
    else throw InvalidSpecError("unknown launcher: '" + name + "'");
    return l;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

int cmd_inspect(const CommonOpts& o) {
    const auto loaded = load_spec_file(o.spec_path);
    const auto& spec = loaded.spec;
    const auto scale = build_scale(spec);

    std::printf("model: %s on (%g, %g), anchor %g\n", spec.name.c_str(), spec.left,
                spec.right, spec.anchor);
    const char* case_name =
        scale.scale_case == ScaleCase::BothFinite ? "both-finite"
        : scale.scale_case == ScaleCase::LeftFinite ? "left-finite" : "right-finite";
    std::printf("scale case: %s  (s_l=%g, s_r=%g)\n", case_name, scale.s_l, scale.s_r);
    std::printf("boundary left: %s  right: %s\n",
                to_string(classify_boundary(spec, scale, Side::Left)),
                to_string(classify_boundary(spec, scale, Side::Right)));

    const Real y = o.y;
    std::printf("y = %g: rho(%g) = %g, lambda(%g) = %g, mean terminal local time = %g\n",
                y, y, rho(scale, y), y, terminal_lt_rate(scale, y),
                1.0 / terminal_lt_rate(scale, y));

    // Probe grid around y, clipped to the interior.
    std::printf("%12s %12s %12s %12s %12s %12s\n", "x", "s", "s'", "m", "psi(x,y)",
                "u(x,y)");
    for (int i = -4; i <= 4; ++i) {
        Real x = y + 0.5 * i;
        if (std::isfinite(spec.left) && x <= spec.left)
            x = spec.left + 0.02 * (std::min(spec.right, spec.left + 4.0) - spec.left);
        if (std::isfinite(spec.right) && x >= spec.right)
            x = spec.right - 0.02 * (spec.right - std::max(spec.left, spec.right - 4.0));
        std::printf("%12.6g %12.6g %12.6g %12.6g %12.6g %12.6g\n", x, scale.s(x),
                    scale.s_deriv(x), speed_density(spec, scale, x),
                    hitting_prob(scale, x, y), potential_density(scale, x, y));
    }
    return 0;
}

int cmd_simulate(const CommonOpts& o) {
    const auto loaded = load_spec_file(o.spec_path);
    const auto& spec = loaded.spec;
    const auto scale = build_scale(spec);
    ensure_out_dir(o.out_dir);

    Fn1 drift = spec.drift;
    Real x0 = std::isfinite(o.x0) ? o.x0 : spec.anchor;
    if (loaded.transform) {
        const auto ts = make_transformed(spec, scale, *loaded.transform,
                                         loaded.transform_y);
        drift = ts.drift;
    }

    StopRule stop;
    stop.horizon = o.horizon;
    RandomSource rng{o.seed};
    SimOptions opt;
    opt.record_path = false;

    std::vector<Real> terminal(o.n);
    std::vector<bool> killed(o.n);
    for (std::size_t i = 0; i < o.n; ++i) {
        const bool dump = i < o.dump_paths && !o.out_dir.empty();
        SimOptions oi = opt;
        oi.record_path = dump;
        const Path p = simulate(spec, drift, x0, stop, o.dt, rng, i, oi);
        terminal[i] = p.values.back();
        killed[i] = p.killed;
        if (dump) {
            char name[64];
            std::snprintf(name, sizeof(name), "path_%05zu.csv", i);
            write_path_csv(p, o.out_dir + "/" + name);
        }
    }
    const auto summary = summarize_terminals(terminal, killed, o.dt);
    const std::string js = batch_summary_json(summary);
    if (!o.out_dir.empty()) {
        std::ofstream f(o.out_dir + "/summary.json");
        f << js << "\n";
    }
    std::printf("%s\n", js.c_str());
    return 0;
}

int run_bridge_like(const CommonOpts& o, bool decompose) {
    const auto loaded = load_spec_file(o.spec_path);
    const auto& spec = loaded.spec;
    const auto scale = build_scale(spec);
    ensure_out_dir(o.out_dir);

    BridgeConfig bc;
    bc.y = o.y;
    bc.a = o.a;
    bc.dt = o.dt;
    bc.eps = o.eps;
    bc.horizon = o.horizon;
    bc.launcher = parse_launcher(o.launcher);
    bc.randomized = decompose || o.randomize;
    bc.require_switch = !decompose;
    BridgeSampler sampler(spec, scale, bc);

    RandomSource rng{o.seed};
    std::vector<BridgeOutcome> outs(o.n);
    parallel_paths(o.n, [&](std::size_t i) { outs[i] = sampler.sample(rng, i); });

    std::ofstream jsonl;
    if (!o.out_dir.empty())
        jsonl.open(o.out_dir + (decompose ? "/decompose.jsonl" : "/bridges.jsonl"));
    std::size_t n_theta = 0, n_switch = 0, n_incomplete = 0, n_killed = 0;
    Real lt_sum = 0.0;
    for (const auto& out : outs) {
        if (jsonl.is_open()) jsonl << bridge_outcome_jsonl(out) << "\n";
        n_theta += out.theta;
        n_switch += out.switched ? 1 : 0;
        n_incomplete += out.incomplete ? 1 : 0;
        n_killed += out.killed ? 1 : 0;
        lt_sum += out.lt_terminal;
    }
    std::printf("{\"n\":%zu,\"theta_one_fraction\":%.6g,\"switched_fraction\":%.6g,"
                "\"incomplete_fraction\":%.6g,\"killed_fraction\":%.6g,"
                "\"mean_lt_terminal\":%.6g}\n",
                o.n, static_cast<Real>(n_theta) / o.n, static_cast<Real>(n_switch) / o.n,
                static_cast<Real>(n_incomplete) / o.n,
                static_cast<Real>(n_killed) / o.n, lt_sum / o.n);
    return n_incomplete > 0 && !decompose ? 1 : 0;
}

int cmd_validate(const CommonOpts& o, const std::string& suite) {
    if (!suites::is_suite_name(suite)) {
        std::fprintf(stderr, "unknown suite: '%s' (expected one of", suite.c_str());
        for (const auto& s : suites::suite_names()) std::fprintf(stderr, " %s", s.c_str());
        std::fprintf(stderr, ")\n");
        return 2;
    }
    suites::SuiteConfig cfg;
    cfg.seed = o.seed;
    cfg.n = o.n;
    cfg.dt = o.dt;
    cfg.alpha = o.alpha;
    const TestReport rep = suites::run_suite(suite, cfg);
    std::printf("%s", rep.to_table().c_str());
    if (!o.out_dir.empty()) {
        ensure_out_dir(o.out_dir);
        std::ofstream f(o.out_dir + "/report.json");
        f << rep.to_json() << "\n";
    }
    return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-dimensional transient diffusions: local-time bridges, "
                 "path decompositions, and their statistical validation"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string suite = "all";

    auto add_common = [&](CLI::App* cmd, bool need_seed) {
        cmd->add_option("--spec", o.spec_path, "spec JSON file");
        cmd->add_option("--y", o.y, "level y");
        cmd->add_option("--a", o.a, "local-time target a");
        cmd->add_option("--n", o.n, "number of paths");
        cmd->add_option("--dt", o.dt, "time step");
        cmd->add_option("--eps", o.eps, "local-time bandwidth override");
        cmd->add_option("--horizon", o.horizon, "time horizon");
        auto* seed = cmd->add_option("--seed", o.seed, "master seed (required)");
        if (need_seed) seed->required();
        cmd->add_option("--out", o.out_dir, "output directory");
        cmd->add_option("--launcher", o.launcher, "entrance launcher: offset|exact");
        cmd->add_option("--alpha", o.alpha, "test level alpha");
        cmd->add_option("--x0", o.x0, "start state (default: anchor)");
        cmd->add_option("--dump-paths", o.dump_paths, "write CSVs for the first k paths");
        cmd->add_flag("--randomize", o.randomize, "randomize the bridge target");
    };

    auto* c_inspect = app.add_subcommand("inspect", "print the analytic layer");
    add_common(c_inspect, false);
    c_inspect->get_option("--spec")->required();

    auto* c_sim = app.add_subcommand("simulate", "batch simulation");
    add_common(c_sim, true);
    c_sim->get_option("--spec")->required();

    auto* c_bridge = app.add_subcommand("bridge", "fixed-a local-time bridges");
    add_common(c_bridge, true);
    c_bridge->get_option("--spec")->required();

    auto* c_dec = app.add_subcommand("decompose", "path-decomposition sampler");
    add_common(c_dec, true);
    c_dec->get_option("--spec")->required();

    auto* c_val = app.add_subcommand("validate", "run validation suites");
    add_common(c_val, true);
    c_val->add_option("--suite", suite, "core|bridge|decomposition|reversal|independence|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_inspect->parsed()) return cmd_inspect(o);
        if (c_sim->parsed()) return cmd_simulate(o);
        if (c_bridge->parsed()) return run_bridge_like(o, false);
        if (c_dec->parsed()) return run_bridge_like(o, true);
        if (c_val->parsed()) return cmd_validate(o, suite);
    } catch (const InvalidSpecError& e) {
        std::fprintf(stderr, "invalid spec: %s\n", e.what());
        return 2;
    } catch (const NotTransientError& e) {
        std::fprintf(stderr, "not transient: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
