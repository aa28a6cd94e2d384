#ifndef HABIT_HJB_MONTECARLO_HPP
#define HABIT_HJB_MONTECARLO_HPP

// Euler-Maruyama paths of (wealth, habit) under a tabulated consumption
// policy, depletion-time statistics and the running martingale statistic
//
//   Y_t = e^{-rho t} S(t) V(t, w_t, cbar_t) + int_0^t e^{-rho s} S(s) u(c_s / cbar_s) ds.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hjb_pension.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "scheme.hpp"

namespace habit_hjb {

struct SimConfig {
    std::size_t n_paths = 10000;
    double dt_sim = 1.0 / 252.0;
    std::uint64_t seed = 20240601;
    double w0 = 10.0;
    double cbar0 = 10.0;
    double depletion_eps = -1.0; // < 0: 1e-3 * pi (1e-3 when pi = 0)
    double policy_scale = 1.0;   // multiplies the tabulated policy; 1 is optimal
    bool stop_at_depletion = true;
    std::size_t record_paths = 0; // trajectories kept for the first paths
    std::size_t record_every = 21;

    void validate() const
    {
        if (n_paths == 0) {
            throw std::invalid_argument("sim.n_paths: must be >= 1");
        }
        if (!(dt_sim > 0.0)) {
            throw std::invalid_argument("sim.dt_sim: must be > 0");
        }
        if (!(w0 >= 0.0)) {
            throw std::invalid_argument("sim.w0: must be >= 0");
        }
        if (!(cbar0 > 0.0)) {
            throw std::invalid_argument("sim.cbar0: must be > 0");
        }
        if (!(policy_scale >= 0.0)) {
            throw std::invalid_argument("sim.policy_scale: must be >= 0");
        }
        if (record_every == 0) {
            throw std::invalid_argument("sim.record_every: must be >= 1");
        }
    }

    double resolved_eps(const ModelParams& p) const
    {
        if (depletion_eps >= 0.0) {
            return depletion_eps;
        }
        return p.pi > 0.0 ? 1e-3 * p.pi : 1e-3;
    }
};

struct TrajectoryPoint {
    double t;
    double w;
    double c;
    double cbar;
};

struct SimPaths {
    SimConfig config;
    double horizon = 0.0;
    double dt = 0.0; // actual step, horizon / n_steps
    std::vector<double> tau; // first depletion time; NaN when never depleted
    std::vector<double> probe_times;
    std::vector<double> y; // path-major: y[path * n_probes + i]
    std::vector<std::vector<TrajectoryPoint>> trajectories;
    std::size_t clamp_events = 0; // steps where wealth would have gone negative
    ClampCounter lookup_clamps;   // policy or value queries outside the grid

    std::size_t n_probes() const { return probe_times.size(); }
};

/// splitmix64 finaliser, used to derive one independent stream per path.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t path_seed(std::uint64_t master, std::size_t path)
{
    return splitmix64(splitmix64(master) ^ splitmix64(0x5bd1e995ULL + static_cast<std::uint64_t>(path)));
}

namespace detail {

/// Time bracket of the retained slices for every simulation step.
inline std::vector<StepBracket> step_brackets(const ValuePolicySolution& sol, double dt, std::size_t n_steps)
{
    std::vector<StepBracket> out(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n) {
        out[n] = bracket_step(sol.steps, sol.step_of_time(static_cast<double>(n) * dt));
    }
    return out;
}

inline double blend(const std::vector<Field2D>& slices, const StepBracket& b, const Grid2D& g, double w, double c,
                    std::size_t& clamps)
{
    ClampCounter counter;
    const double lo = bilinear_interpolate(slices[b.lo], g.w, g.c, w, c, &counter);
    clamps += counter.clamped;
    if (b.weight_hi == 0.0) {
        return lo;
    }
    return lo + b.weight_hi * (bilinear_interpolate(slices[b.hi], g.w, g.c, w, c) - lo);
}

} // namespace detail

/// Simulates cfg.n_paths paths from (w0, cbar0) at t = 0. With probe times
/// given, the martingale statistic Y is recorded at the first step on or
/// after each probe; this forces stop_at_depletion off. Results depend only on
/// (solution, cfg, probes), not on the thread count.
inline SimPaths simulate_paths(const ValuePolicySolution& sol, const SimConfig& cfg,
                               const std::vector<double>& probe_times = {})
{
    cfg.validate();
    const ModelParams& p = sol.params;
    const Grid2D& g = sol.grid;
    const double horizon = g.horizon;
    const auto n_steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / cfg.dt_sim)));
    const double dt = horizon / static_cast<double>(n_steps);
    const double sqrt_dt = std::sqrt(dt);
    const double eps = cfg.resolved_eps(p);
    const double ret = p.portfolio_return();
    const double vol = p.theta * p.sigma;
    const bool stop = cfg.stop_at_depletion && probe_times.empty();

    std::vector<std::size_t> probe_steps;
    for (double t : probe_times) {
        if (!(t >= 0.0 && t <= horizon)) {
            throw std::invalid_argument("simulate_paths: probe time outside [0, horizon]");
        }
        probe_steps.push_back(static_cast<std::size_t>(std::ceil(t / dt - 1e-9)));
    }
    const std::size_t n_probes = probe_steps.size();

    const auto brackets = detail::step_brackets(sol, dt, n_steps);
    // e^{-rho t} S(t) on the simulation steps
    std::vector<double> weight(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        weight[n] = std::exp(-p.rho * t - cumulative_hazard(p, t));
    }

    SimPaths out;
    out.config = cfg;
    out.horizon = horizon;
    out.dt = dt;
    out.probe_times = probe_times;
    out.tau.assign(cfg.n_paths, std::numeric_limits<double>::quiet_NaN());
    out.y.assign(cfg.n_paths * n_probes, 0.0);
    out.trajectories.resize(std::min(cfg.record_paths, cfg.n_paths));

    std::size_t clamp_events = 0;
    std::size_t lookup_clamps = 0;
    const auto n_paths = static_cast<std::ptrdiff_t>(cfg.n_paths);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) num_threads(worker_count()) reduction(+ : clamp_events, lookup_clamps)
#endif
    for (std::ptrdiff_t ip = 0; ip < n_paths; ++ip) {
        const auto path = static_cast<std::size_t>(ip);
        std::mt19937_64 rng(path_seed(cfg.seed, path));
        std::normal_distribution<double> normal(0.0, 1.0);
        const bool record = path < out.trajectories.size();

        double w = cfg.w0;
        double cbar = cfg.cbar0;
        double running = 0.0;
        std::size_t next_probe = 0;
        if (w <= eps) {
            out.tau[path] = 0.0;
        }
        for (std::size_t n = 0; n <= n_steps; ++n) {
            const StepBracket& b = brackets[n];
            while (next_probe < n_probes && probe_steps[next_probe] == n) {
                const double v = detail::blend(sol.value, b, g, w, cbar, lookup_clamps);
                out.y[path * n_probes + next_probe] = weight[n] * v + running;
                ++next_probe;
            }
            if (n == n_steps || (stop && !std::isnan(out.tau[path]))) {
                break;
            }

            // The w = 0 node holds the constrained min(pi, cbar); strictly positive
            // wealth below the first interior node uses that node's policy.
            const double w_policy = std::max(w, g.w[1]);
            double c = cfg.policy_scale * detail::blend(sol.policy, b, g, w_policy, cbar, lookup_clamps);
            const double z = normal(rng);
            double w_next = w + (ret * w + p.pi - c) * dt + vol * w * sqrt_dt * z;
            if (w_next < 0.0) {
                // consumption limited to what keeps wealth at zero
                c = std::max(0.0, c + w_next / dt);
                w_next = 0.0;
                ++clamp_events;
            }
            if (record && n % cfg.record_every == 0) {
                out.trajectories[path].push_back({static_cast<double>(n) * dt, w, c, cbar});
            }
            if (n_probes > 0) {
                const double u = c > 0.0 ? crra_utility(c / cbar, p.gamma)
                                          : -std::numeric_limits<double>::infinity();
                running += weight[n] * u * dt;
            }
            cbar += p.eta * (c - cbar) * dt;
            w = w_next;
            if (w <= eps && std::isnan(out.tau[path])) {
                out.tau[path] = static_cast<double>(n + 1) * dt;
            }
        }
    }
    out.clamp_events = clamp_events;
    out.lookup_clamps.clamped = lookup_clamps;
    return out;
}

/// Overload that rejects a parameter set differing from the solution's.
inline SimPaths simulate_paths(const ValuePolicySolution& sol, const SimConfig& cfg, const ModelParams& p,
                               const std::vector<double>& probe_times = {})
{
    const ModelParams& q = sol.params;
    if (p.r != q.r || p.mu != q.mu || p.sigma != q.sigma || p.theta != q.theta || p.gamma != q.gamma ||
        p.rho != q.rho || p.eta != q.eta || p.pi != q.pi || p.retire_age != q.retire_age ||
        p.gompertz_m != q.gompertz_m || p.gompertz_b != q.gompertz_b || p.horizon != q.horizon) {
        throw std::invalid_argument("simulate_paths: parameters differ from those of the policy");
    }
    return simulate_paths(sol, cfg, probe_times);
}

struct DepletionStats {
    std::size_t n_paths = 0;
    double mean_age = 0.0;
    double std_age = 0.0;
    double depleted_fraction = 0.0;
    double censored_fraction = 0.0;
};

/// Mean and sample standard deviation of the depletion age; paths never
/// depleted count as depleted at the horizon.
inline DepletionStats depletion_stats(const SimPaths& paths, const ModelParams& p)
{
    const std::size_t n = paths.tau.size();
    if (n == 0) {
        throw std::invalid_argument("depletion_stats: no paths");
    }
    DepletionStats s;
    s.n_paths = n;
    double sum = 0.0;
    std::size_t censored = 0;
    for (double tau : paths.tau) {
        if (std::isnan(tau)) {
            ++censored;
            tau = paths.horizon;
        }
        sum += p.retire_age + tau;
    }
    s.mean_age = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double tau : paths.tau) {
        const double d = p.retire_age + (std::isnan(tau) ? paths.horizon : tau) - s.mean_age;
        ss += d * d;
    }
    s.std_age = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.censored_fraction = static_cast<double>(censored) / static_cast<double>(n);
    s.depleted_fraction = 1.0 - s.censored_fraction;
    return s;
}

struct MartingaleProbe {
    double t;
    double mean;
    double std_error;
};

struct MartingaleReport {
    double y0; // V(0, w0, cbar0)
    std::vector<MartingaleProbe> probes;
};

/// Sample mean and standard error of Y_t at each probe time.
inline MartingaleReport martingale_check(const ValuePolicySolution& sol, const SimConfig& cfg,
                                         const std::vector<double>& probe_times)
{
    const SimPaths paths = simulate_paths(sol, cfg, probe_times);
    MartingaleReport rep;
    rep.y0 = sol.value_at(0.0, cfg.w0, cfg.cbar0);
    const std::size_t np = paths.n_probes();
    const std::size_t n = cfg.n_paths;
    for (std::size_t i = 0; i < np; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            sum += paths.y[k * np + i];
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double d = paths.y[k * np + i] - mean;
            ss += d * d;
        }
        const double se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
        rep.probes.push_back({probe_times[i], mean, se});
    }
    return rep;
}

} // namespace habit_hjb

#endif // HABIT_HJB_MONTECARLO_HPP
