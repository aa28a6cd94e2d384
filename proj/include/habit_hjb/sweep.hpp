#ifndef HABIT_HJB_SWEEP_HPP
#define HABIT_HJB_SWEEP_HPP

// Parameter sweeps over (eta, theta, sigma): consumption against wealth at
// fixed habits, against habit at fixed wealth, and the scaled solution.

#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "hjb_pension.hpp"
#include "hjb_scaled.hpp"

namespace habit_hjb {

struct SweepOutcome {
    std::vector<std::filesystem::path> files;
    std::size_t combinations = 0;
    std::size_t failures = 0;
};

inline std::string sweep_tag(double eta, double theta, double sigma)
{
    std::ostringstream os;
    os << "eta" << eta << "_theta" << theta << "_sigma" << sigma;
    return os.str();
}

/// Runs every combination; a failing combination is logged and skipped.
inline SweepOutcome run_sweep(const RunConfig& cfg, std::ostream& log)
{
    SweepOutcome res;
    const auto& s = cfg.sweep;
    if (s.eta.empty() || s.theta.empty() || s.sigma.empty()) {
        return res;
    }
    const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / "sweep";
    for (double eta : s.eta) {
        for (double theta : s.theta) {
            for (double sigma : s.sigma) {
                ++res.combinations;
                RunConfig c = cfg;
                c.model.eta = eta;
                c.model.theta = theta;
                c.model.sigma = sigma;
                const std::string tag = sweep_tag(eta, theta, sigma);
                try {
                    c.validate();
                    const Grid2D g = c.grid.make(c.model);
                    PensionSolverOptions opt;
                    opt.store_every = g.n_time;
                    const ValuePolicySolution sol = solve(c.model, g, opt);

                    CsvWriter by_w(dir / ("cstar_vs_w_" + tag + ".csv"), c, "sweep", {"cbar", "w", "c_star"});
                    for (double cb : s.cbar) {
                        for (std::size_t j = 0; j < g.w.size(); ++j) {
                            by_w.row({cb, g.w[j], sol.policy_at(0.0, g.w[j], cb)});
                        }
                    }
                    res.files.push_back(by_w.path());

                    CsvWriter by_c(dir / ("cstar_vs_cbar_" + tag + ".csv"), c, "sweep", {"w", "cbar", "c_star"});
                    for (double w : s.w) {
                        for (std::size_t k = 0; k < g.c.size(); ++k) {
                            by_c.row({w, g.c[k], sol.policy_at(0.0, w, g.c[k])});
                        }
                    }
                    res.files.push_back(by_c.path());

                    if (c.model.gamma > 1.0) {
                        const ScaledGrid sg = ScaledGrid::make(c.scaled.xs_min, c.scaled.xs_max, c.scaled.n,
                                                               c.model.horizon, c.scaled.n_time);
                        ScaledSolverOptions sopt;
                        sopt.store_every = sg.n_time;
                        const ScaledSolution ss = solve_scaled(c.model, sg, c.scaled.theta_mode, sopt);
                        CsvWriter sc(dir / ("scaled_" + tag + ".csv"), c, "sweep",
                                     {"t", "xs", "nu", "q_star", "theta_star"});
                        for (std::size_t i = 0; i < sg.size(); ++i) {
                            const double th = ss.theta_star.empty() ? theta : ss.theta_star.back()[i];
                            sc.row({0.0, sg.xs[i], ss.initial_nu()[i], ss.initial_q()[i], th});
                        }
                        res.files.push_back(sc.path());
                    }
                    log << "sweep " << tag << ": ok\n";
                } catch (const std::exception& e) {
                    ++res.failures;
                    log << "sweep " << tag << ": failed: " << e.what() << '\n';
                }
            }
        }
    }
    return res;
}

} // namespace habit_hjb

#endif // HABIT_HJB_SWEEP_HPP
