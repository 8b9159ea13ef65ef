#include "ltsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "ltsim/local_time.hpp"

namespace ltsim {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Horizon: return "horizon";
        case StopReason::KilledLeft: return "killed_left";
        case StopReason::KilledRight: return "killed_right";
        case StopReason::HitLevel: return "hit_level";
        case StopReason::LocalTimeReached: return "local_time_reached";
        case StopReason::EscapeLow: return "escape_low";
        case StopReason::EscapeHigh: return "escape_high";
        case StopReason::Observer: return "observer";
        case StopReason::MaxSteps: return "max_steps";
    }
    return "?";
}

BoundaryPolicy boundary_policy(const DiffusionSpec& spec, const ScaleTable& scale) {
    BoundaryPolicy p;
    if (std::isfinite(spec.left)) {
        const BoundaryKind k = classify_boundary(spec, scale, Side::Left);
        if (k == BoundaryKind::Regular || k == BoundaryKind::Exit)
            p.kill_left = true;
        else
            p.reflect_left = true;
    }
    if (std::isfinite(spec.right)) {
        const BoundaryKind k = classify_boundary(spec, scale, Side::Right);
        if (k == BoundaryKind::Regular || k == BoundaryKind::Exit)
            p.kill_right = true;
        else
            p.reflect_right = true;
    }
    return p;
}

Path simulate(const DiffusionSpec& spec, const Fn1& drift_fn, Real x0,
              const StopRule& stop, Real dt, const RandomSource& rng,
              std::uint64_t stream_index, const SimOptions& opt) {
    if (!stop.any()) throw std::invalid_argument("simulate: empty stop rule");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");

    const ScaleTable scale = build_scale(spec);
    const BoundaryPolicy pol = boundary_policy(spec, scale);

    WalkConfig cfg;
    cfg.x0 = x0;
    cfg.dt = dt;
    cfg.left = spec.left;
    cfg.right = spec.right;
    cfg.kill_left = pol.kill_left && stop.boundary_exit;
    cfg.kill_right = pol.kill_right && stop.boundary_exit;
    cfg.reflect_left = pol.reflect_left;
    cfg.reflect_right = pol.reflect_right;
    cfg.drift_cap = opt.drift_cap;
    cfg.bb_correct_left = opt.bb_correction;
    cfg.bb_correct_right = opt.bb_correction;
    if (stop.horizon) cfg.horizon = *stop.horizon;
    if (stop.hit) cfg.hit = *stop.hit;

    NormalStream ns(rng.master_seed, stream_index);

    Path path;
    path.seed = rng.master_seed;
    path.stream_index = stream_index;
    path.times.push_back(0.0);
    path.values.push_back(x0);

    std::optional<LocalTimeAccum> lt;
    Real lt_target = kInf;
    if (stop.local_time) {
        Real eps = stop.local_time->bandwidth;
        if (eps <= 0.0) eps = default_bandwidth(spec.sigma(stop.local_time->level), dt);
        lt = LocalTimeAccum{stop.local_time->level, eps, 0.0};
        lt_target = stop.local_time->a;
    }

    bool lt_stop = false;
    auto obs = [&](Real t_new, Real x_prev, Real& x_new) {
        if (lt) lt->update(x_prev, spec.sigma(x_prev), dt);
        if (opt.record_path) {
            path.times.push_back(t_new);
            path.values.push_back(x_new);
        }
        if (lt && lt->value >= lt_target) {
            lt_stop = true;
            return false;
        }
        return true;
    };

    WalkResult res = walk(cfg, std::cref(drift_fn), std::cref(spec.sigma), ns, obs);
    if (!opt.record_path) {
        path.times.push_back(res.t_end);
        path.values.push_back(res.x_end);
    }
    path.killed = res.killed;
    path.lifetime = res.lifetime;
    (void)lt_stop;
    return path;
}

Real first_hitting_time(const Path& path, Real z, Real tol) {
    if (path.values.empty()) return kInf;
    if (std::fabs(path.values.front() - z) <= tol) return path.times.front();
    for (size_t i = 1; i < path.values.size(); ++i) {
        const Real g0 = path.values[i - 1] - z;
        const Real g1 = path.values[i] - z;
        if (std::fabs(g1) <= tol || g0 * g1 <= 0.0) return path.times[i];
    }
    return kInf;
}

LastPassage last_passage_time(const Path& path, Real z, Real tol) {
    LastPassage lp;
    if (std::fabs(path.values.front() - z) <= tol) lp.time = path.times.front();
    for (size_t i = 1; i < path.values.size(); ++i) {
        const Real g0 = path.values[i - 1] - z;
        const Real g1 = path.values[i] - z;
        if (std::fabs(g1) <= tol || g0 * g1 <= 0.0) lp.time = path.times[i];
    }
    // If the path ends near z it may still have been about to cross again.
    if (!path.killed && std::fabs(path.values.back() - z) <= 10.0 * std::max(tol, 1e-12))
        lp.warning = true;
    return lp;
}

void parallel_paths(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 2 * hw) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(hw, 16);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

BatchSummary summarize_terminals(const std::vector<Real>& terminal,
                                 const std::vector<bool>& killed, Real dt) {
    BatchSummary s;
    s.n_paths = terminal.size();
    s.dt = dt;
    if (terminal.empty()) return s;
    Real sum = 0.0, nkill = 0.0;
    s.terminal_min = terminal[0];
    s.terminal_max = terminal[0];
    for (size_t i = 0; i < terminal.size(); ++i) {
        sum += terminal[i];
        s.terminal_min = std::min(s.terminal_min, terminal[i]);
        s.terminal_max = std::max(s.terminal_max, terminal[i]);
        if (i < killed.size() && killed[i]) nkill += 1.0;
    }
    s.terminal_mean = sum / terminal.size();
    Real ss = 0.0;
    for (Real v : terminal) ss += (v - s.terminal_mean) * (v - s.terminal_mean);
    s.terminal_sd = terminal.size() > 1 ? std::sqrt(ss / (terminal.size() - 1)) : 0.0;
    s.killed_fraction = nkill / terminal.size();
    return s;
}

void write_path_csv(const Path& path, const std::string& filename) {
    std::FILE* f = std::fopen(filename.c_str(), "w");
    if (!f) throw std::runtime_error("write_path_csv: cannot open " + filename);
    std::fputs("t,x\n", f);
    for (size_t i = 0; i < path.times.size(); ++i)
        std::fprintf(f, "%.12g,%.12g\n", path.times[i], path.values[i]);
    std::fclose(f);
}

std::string batch_summary_json(const BatchSummary& s) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"n_paths\":%zu,\"dt\":%.12g,\"killed_fraction\":%.12g,"
                  "\"terminal_stats\":{\"mean\":%.12g,\"sd\":%.12g,\"min\":%.12g,"
                  "\"max\":%.12g}}",
                  s.n_paths, s.dt, s.killed_fraction, s.terminal_mean, s.terminal_sd,
                  s.terminal_min, s.terminal_max);
    return std::string(buf);
}

}  // namespace ltsim
