#ifndef HABIT_HJB_CLI_HPP
#define HABIT_HJB_CLI_HPP

// Command-line front end: habit_hjb <subcommand> [--config FILE] [overrides].
// Exit codes: 0 success, 1 invalid configuration or solver failure, 2 usage.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "annuity.hpp"
#include "config.hpp"
#include "convergence.hpp"
#include "csv.hpp"
#include "hjb_pension.hpp"
#include "hjb_scaled.hpp"
#include "montecarlo.hpp"
#include "sweep.hpp"
#include "wdt.hpp"

namespace habit_hjb {

struct CliOverrides {
    std::string config_path;
    std::optional<double> eta, theta, sigma, w0, cbar0;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

inline RunConfig resolve_config(const CliOverrides& o)
{
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (o.eta) {
        c.model.eta = *o.eta;
    }
    if (o.theta) {
        c.model.theta = *o.theta;
    }
    if (o.sigma) {
        c.model.sigma = *o.sigma;
    }
    if (o.w0) {
        c.sim.w0 = *o.w0;
    }
    if (o.cbar0) {
        c.sim.cbar0 = *o.cbar0;
    }
    if (o.seed) {
        c.sim.seed = *o.seed;
    }
    if (o.out) {
        c.out_dir = *o.out;
    }
    c.validate();
    return c;
}

namespace cmd {

inline std::filesystem::path out_file(const RunConfig& c, const std::string& name)
{
    return std::filesystem::path(c.out_dir) / name;
}

inline void report_diagnostics(const SchemeDiagnostics& d, std::ostream& out)
{
    out << "  max cfl " << d.max_cfl << ", cfl violations " << d.cfl_violations << ", floored marginals "
        << d.floor_hits << ", capped policies " << d.cap_hits << '\n';
}

inline ValuePolicySolution pension_solution(const RunConfig& c)
{
    return solve(c.model, c.grid.make(c.model));
}

inline int solve_surface(const RunConfig& c, std::ostream& out)
{
    const Grid2D g = c.grid.make(c.model);
    PensionSolverOptions opt;
    opt.store_every = g.n_time;
    const ValuePolicySolution sol = solve(c.model, g, opt);
    CsvWriter csv(out_file(c, "surface.csv"), c, "solve", {"t", "w", "cbar", "V", "c_star"});
    const Field2D& v = sol.initial_value();
    const Field2D& q = sol.initial_policy();
    for (std::size_t k = 0; k < g.c.size(); ++k) {
        for (std::size_t j = 0; j < g.w.size(); ++j) {
            csv.row({0.0, g.w[j], g.c[k], v(j, k), q(j, k)});
        }
    }
    out << "wrote " << csv.path().string() << '\n';
    report_diagnostics(sol.diagnostics, out);
    return 0;
}

inline int solve_scaled_cmd(const RunConfig& c, std::ostream& out)
{
    const ScaledGrid g = ScaledGrid::make(c.scaled.xs_min, c.scaled.xs_max, c.scaled.n, c.model.horizon,
                                          c.scaled.n_time);
    ScaledSolverOptions opt;
    opt.store_every = g.n_time;
    const ScaledSolution sol = solve_scaled(c.model, g, c.scaled.theta_mode, opt);
    CsvWriter csv(out_file(c, "scaled.csv"), c, "solve-scaled", {"t", "xs", "nu", "q_star", "theta_star"});
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double th = sol.theta_star.empty() ? c.model.theta : sol.theta_star.back()[i];
        csv.row({0.0, g.xs[i], sol.initial_nu()[i], sol.initial_q()[i], th});
    }
    out << "wrote " << csv.path().string() << '\n';
    report_diagnostics(sol.diagnostics, out);
    return 0;
}

inline int wdt_cmd(const RunConfig& c, std::ostream& out)
{
    const ValuePolicySolution sol = pension_solution(c);
    const WdtSolution td = solve_wdt(sol, "eta=" + detail::fmt(c.model.eta), sol.grid.n_time);
    const Grid2D& g = td.grid;
    CsvWriter surface(out_file(c, "wdt.csv"), c, "wdt", {"t", "w", "cbar", "Td"});
    for (std::size_t k = 0; k < g.c.size(); ++k) {
        for (std::size_t j = 0; j < g.w.size(); ++j) {
            surface.row({0.0, g.w[j], g.c[k], td.initial()(j, k)});
        }
    }
    CsvWriter ages(out_file(c, "depletion.csv"), c, "wdt", {"w0", "cbar0", "eta", "age"});
    for (double w0 : c.wdt.w0) {
        const double age = depletion_age(td, w0, c.sim.cbar0);
        ages.row({w0, c.sim.cbar0, c.model.eta, age});
        out << "  w0 " << w0 << ": depletion age " << age << '\n';
    }
    out << "wrote " << surface.path().string() << " and " << ages.path().string() << '\n';
    return 0;
}

inline int simulate_cmd(const RunConfig& c, std::ostream& out)
{
    const ValuePolicySolution sol = pension_solution(c);
    const SimPaths paths = simulate_paths(sol, c.sim);
    const DepletionStats st = depletion_stats(paths, c.model);
    CsvWriter csv(out_file(c, "sim_stats.csv"), c, "simulate",
                  {"w0", "cbar0", "eta", "mean_age", "std_age", "censored_frac"});
    csv.row({c.sim.w0, c.sim.cbar0, c.model.eta, st.mean_age, st.std_age, st.censored_fraction});
    out << "  depletion age " << st.mean_age << " +- " << st.std_age << " (" << st.n_paths << " paths, "
        << st.censored_fraction * 100.0 << "% never depleted)\n";

    const MartingaleReport mg = martingale_check(sol, c.sim, {5.0, 15.0, 30.0});
    CsvWriter m(out_file(c, "martingale.csv"), c, "simulate", {"t", "y0", "mean", "std_error", "z"});
    for (const auto& p : mg.probes) {
        const double z = p.std_error > 0.0 ? (p.mean - mg.y0) / p.std_error : 0.0;
        m.row({p.t, mg.y0, p.mean, p.std_error, z});
    }
    out << "wrote " << csv.path().string() << " and " << m.path().string() << '\n';
    return 0;
}

inline int annuitize_cmd(const RunConfig& c, std::ostream& out)
{
    const auto& a = c.annuity;
    const Grid2D g = c.grid.make(c.model);
    const double a_x = annuity_factor(c.model);
    const double dw_max = a.rule.rule == DeltaWRule::fixed ? a.rule.amount : a.rule.at(a.w_max);
    const double span = std::max(dw_max, a.aew_w) / a_x;
    const std::size_t levels = a.rule.rule == DeltaWRule::fixed && a.aew_w <= a.rule.amount ? 2 : a.pension_levels;
    PensionFamily family(c.model, g, c.model.pi, c.model.pi + span, levels);
    const AnnuityAnalysis an(c.model, a.rule, std::move(family));

    std::vector<double> probes;
    for (std::size_t i = 1; i <= a.n_probes; ++i) {
        probes.push_back(a.w_max * static_cast<double>(i) / static_cast<double>(a.n_probes));
    }
    const AnnuitizeResult r = an.curve(a.cbar, probes);
    CsvWriter csv(out_file(c, "deltaV.csv"), c, "annuitize", {"w", "deltaV", "delta_w", "log_w_over_cbar"});
    for (const auto& p : r.curve) {
        csv.row({p.w, p.delta_v, p.delta_w, std::log(p.w / r.cbar)});
    }
    out << "  rule " << a.rule.label() << ", a_x " << r.annuity_factor << ", cbar node " << r.cbar << '\n';
    if (r.crossing) {
        out << "  crossing at w = " << *r.crossing << (r.multiple_crossings ? " (more than one sign change)" : "")
            << '\n';
    } else {
        out << "  no crossing: dV " << (r.curve.empty() || r.curve.front().delta_v < 0.0 ? "< 0" : ">= 0")
            << " over the probes\n";
    }
    const AewResult e = aew(an.family(), a_x, c.model.pi, r.cbar, a.aew_w);
    if (e.w_hat) {
        out << "  AEW of w = " << a.aew_w << ": " << *e.w_hat << '\n';
    } else {
        out << "  AEW of w = " << a.aew_w << ": none (" << e.note << ")\n";
    }
    out << "wrote " << csv.path().string() << '\n';
    return 0;
}

inline int converge_cmd(const RunConfig& c, std::ostream& out)
{
    const auto& cv = c.converge;
    std::function<std::size_t(std::size_t)> n_time_for;
    if (!cv.n_time.empty()) {
        n_time_for = [&cv](std::size_t nodes) {
            for (std::size_t i = 0; i < cv.nodes.size(); ++i) {
                if (cv.nodes[i] == nodes) {
                    return cv.n_time[i];
                }
            }
            return std::size_t{0};
        };
    }
    const ConvergenceReport rep = run_convergence(c.model, c.grid, cv.axis, cv.nodes, cv.t0, n_time_for,
                                                  [&out](std::size_t n) { out << "  solved " << n << " nodes\n"; });
    CsvWriter csv(out_file(c, "convergence.csv"), c, "converge", {"nodes_coarse", "nodes_fine", "L2", "ER", "rss"});
    for (const auto& row : rep.rows) {
        csv.row({static_cast<double>(row.nodes_coarse), static_cast<double>(row.nodes_fine), row.l2,
                 row.er ? *row.er : std::nan(""), row.rss});
        out << "  " << row.nodes_coarse << " -> " << row.nodes_fine << ": L2 " << row.l2;
        if (row.er) {
            out << ", ER " << *row.er;
        } else if (row.l2 == 0.0) {
            out << " (degenerate)";
        }
        out << '\n';
    }
    out << "wrote " << csv.path().string() << '\n';
    return 0;
}

inline int sweep_cmd(const RunConfig& c, std::ostream& out)
{
    const SweepOutcome r = run_sweep(c, out);
    out << "  " << r.combinations << " combinations, " << r.failures << " failed, " << r.files.size()
        << " files\n";
    return r.failures == 0 ? 0 : 1;
}

} // namespace cmd

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Retirement consumption under habit formation: HJB solvers, depletion times, simulation"};
    app.name("habit_hjb");
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    CliOverrides o;
    app.add_option("--config", o.config_path, "config file (key = value lines, or a CSV written by this tool)");
    app.add_option("--eta", o.eta, "habit smoothing rate");
    app.add_option("--theta", o.theta, "risky asset fraction");
    app.add_option("--sigma", o.sigma, "volatility");
    app.add_option("--w0", o.w0, "initial wealth for wdt and simulate");
    app.add_option("--cbar0", o.cbar0, "initial habit for wdt and simulate");
    app.add_option("--seed", o.seed, "simulation seed");
    app.add_option("--out", o.out, "output directory");

    using Runner = int (*)(const RunConfig&, std::ostream&);
    const std::vector<std::tuple<const char*, const char*, Runner>> commands = {
        {"solve", "solve the pension HJB and write the t = 0 surface", cmd::solve_surface},
        {"solve-scaled", "solve the scaled one-dimensional problem", cmd::solve_scaled_cmd},
        {"wdt", "expected wealth depletion time", cmd::wdt_cmd},
        {"simulate", "Monte Carlo depletion ages and martingale check", cmd::simulate_cmd},
        {"annuitize", "dV curve, crossing wealth and AEW", cmd::annuitize_cmd},
        {"converge", "grid refinement study", cmd::converge_cmd},
        {"sweep", "consumption curves over eta, theta, sigma", cmd::sweep_cmd},
    };
    for (const auto& [name, help, run] : commands) {
        app.add_subcommand(name, help)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const RunConfig cfg = resolve_config(o);
        for (const auto& [name, help, run] : commands) {
            if (app.got_subcommand(name)) {
                const auto t0 = std::chrono::steady_clock::now();
                const int rc = run(cfg, out);
                out << name << " finished in " << std::setprecision(3)
                    << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
                return rc;
            }
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace habit_hjb

#endif // HABIT_HJB_CLI_HPP
