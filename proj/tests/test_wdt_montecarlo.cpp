#include <cmath>
#include <cstdlib>
#include <limits>

#include <gtest/gtest.h>

#include <habit_hjb/montecarlo.hpp>
#include <habit_hjb/wdt.hpp>

using namespace habit_hjb;

namespace {

// No risky asset and a constant consumption rate: wealth follows
// w' = r w + pi - c and runs out at t = ln(k / (k - w0)) / r, k = (c - pi)/r.
struct Deterministic {
    ModelParams p;
    double c = 2.0;
    ValuePolicySolution sol;

    Deterministic()
    {
        p.theta = 0.0;
        p.eta = 0.1;
        const Grid2D g = Grid2D::make(60.0, 601, 1.0, 10.0, 10, p.horizon, 5500);
        sol.grid = g;
        sol.params = p;
        sol.steps = {0, g.n_time};
        sol.value = {Field2D(601, 10, 0.0), Field2D(601, 10, 0.0)};
        sol.policy = {Field2D(601, 10, c), Field2D(601, 10, c)};
    }

    double depletion_time(double w0) const
    {
        const double k = (c - p.pi) / p.r;
        return std::log(k / (k - w0)) / p.r;
    }
};

} // namespace

TEST(Wdt, ConstantPolicyMatchesClosedForm)
{
    const Deterministic d;
    const WdtSolution td = solve_wdt(d.sol, "constant");
    for (double w0 : {2.0, 10.0, 30.0}) {
        EXPECT_NEAR(td.td_at(0.0, w0, 5.0), d.depletion_time(w0), 0.2) << "w0 " << w0;
    }
    EXPECT_NEAR(depletion_age(td, 10.0, 5.0), d.p.retire_age + d.depletion_time(10.0), 0.2);
    // zero wealth is already depleted, and nothing is left at the horizon
    EXPECT_DOUBLE_EQ(td.td_at(0.0, 0.0, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(td.td_at(d.p.horizon, 10.0, 5.0), 0.0);
}

TEST(Wdt, PolicyMustCoverHorizon)
{
    Deterministic d;
    d.sol.steps = {0, 10};
    EXPECT_THROW(solve_wdt(d.sol), std::invalid_argument);
}

TEST(MonteCarlo, ConstantPolicyMatchesClosedForm)
{
    const Deterministic d;
    SimConfig cfg;
    cfg.n_paths = 8;
    cfg.w0 = 10.0;
    cfg.cbar0 = 5.0;
    const SimPaths paths = simulate_paths(d.sol, cfg);
    for (double tau : paths.tau) {
        EXPECT_NEAR(tau, d.depletion_time(10.0), 2.0 * paths.dt);
    }
    const DepletionStats st = depletion_stats(paths, d.p);
    EXPECT_NEAR(st.mean_age, d.p.retire_age + d.depletion_time(10.0), 2.0 * paths.dt);
    EXPECT_NEAR(st.std_age, 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(st.censored_fraction, 0.0);
}

TEST(MonteCarlo, HabitFollowsConsumption)
{
    const Deterministic d;
    SimConfig cfg;
    cfg.n_paths = 1;
    cfg.w0 = 40.0;
    cfg.cbar0 = 1.0;
    cfg.record_paths = 1;
    cfg.record_every = 1;
    const SimPaths paths = simulate_paths(d.sol, cfg);
    ASSERT_FALSE(paths.trajectories[0].empty());
    // cbar' = eta (c - cbar) with c = 2: cbar(t) = 2 - e^{-eta t}
    for (const auto& pt : paths.trajectories[0]) {
        if (pt.t > 0.0 && pt.t < 10.0) {
            EXPECT_NEAR(pt.cbar, d.c - std::exp(-d.p.eta * pt.t), 1e-3);
        }
    }
}

TEST(MonteCarlo, SameSeedSameResultsAcrossThreadCounts)
{
    ModelParams p;
    const Grid2D g = Grid2D::make(60.0, 61, 0.5, 20.0, 14, p.horizon, 200);
    const ValuePolicySolution sol = solve(p, g);
    SimConfig cfg;
    cfg.n_paths = 300;
    cfg.w0 = 10.0;
    cfg.cbar0 = 5.0;
    cfg.seed = 42;
    setenv("HABIT_HJB_THREADS", "1", 1);
    const SimPaths a = simulate_paths(sol, cfg, std::vector<double>{5.0});
    unsetenv("HABIT_HJB_THREADS");
    const SimPaths b = simulate_paths(sol, cfg, std::vector<double>{5.0});
    ASSERT_EQ(a.tau.size(), b.tau.size());
    for (std::size_t i = 0; i < a.tau.size(); ++i) {
        if (std::isnan(a.tau[i])) {
            EXPECT_TRUE(std::isnan(b.tau[i]));
        } else {
            EXPECT_EQ(a.tau[i], b.tau[i]);
        }
    }
    EXPECT_EQ(a.y, b.y);

    cfg.seed = 43;
    const SimPaths c = simulate_paths(sol, cfg, std::vector<double>{5.0});
    EXPECT_NE(a.y, c.y);
}

TEST(MonteCarlo, PathSeedsDiffer)
{
    EXPECT_NE(path_seed(1, 0), path_seed(1, 1));
    EXPECT_NE(path_seed(1, 0), path_seed(2, 0));
    EXPECT_EQ(path_seed(7, 3), path_seed(7, 3));
}

TEST(MonteCarlo, StatsOfHandMadePaths)
{
    ModelParams p;
    SimPaths paths;
    paths.horizon = 10.0;
    paths.tau = {1.0, 2.0, std::numeric_limits<double>::quiet_NaN()};
    const DepletionStats st = depletion_stats(paths, p);
    // ages 66, 67, 75
    EXPECT_NEAR(st.mean_age, 208.0 / 3.0, 1e-12);
    const double m = 208.0 / 3.0;
    const double var = ((66 - m) * (66 - m) + (67 - m) * (67 - m) + (75 - m) * (75 - m)) / 2.0;
    EXPECT_NEAR(st.std_age, std::sqrt(var), 1e-12);
    EXPECT_NEAR(st.censored_fraction, 1.0 / 3.0, 1e-15);
}

TEST(MonteCarlo, InvalidConfigRejected)
{
    SimConfig cfg;
    cfg.n_paths = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.n_paths = 1;
    cfg.cbar0 = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
