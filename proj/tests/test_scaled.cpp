#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include <habit_hjb/hjb_scaled.hpp>

using namespace habit_hjb;

namespace {

// Classical RK4 for y' = f(t, y) from t0 to t1 (either direction).
double rk4(const std::function<double(double, double)>& f, double t0, double y0, double t1, int steps)
{
    const double h = (t1 - t0) / steps;
    double t = t0;
    double y = y0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(t, y);
        const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
    }
    return y;
}

ModelParams merton_params()
{
    ModelParams p;
    p.eta = 0.0;
    p.pi = 0.0;
    return p;
}

} // namespace

TEST(Merton, ClosedFormSatisfiesOde)
{
    const ModelParams p = merton_params();
    const double f1 = merton_f1(p);
    const double h = 1e-4;
    for (double t : {1.0, 10.0, 25.0, 40.0, 54.0}) {
        const double dh = (merton_h(p, t + h) - merton_h(p, t - h)) / (2 * h);
        const double v = merton_h(p, t);
        const double residual = dh + (f1 - hazard_after(p, t)) * v + p.gamma * std::pow(v, (p.gamma - 1) / p.gamma);
        EXPECT_NEAR(residual, 0.0, 1e-6 * std::max(1.0, v)) << "t = " << t;
    }
    EXPECT_NEAR(merton_h(p, p.horizon), 1.0, 1e-14);
}

TEST(Merton, ClosedFormMatchesRungeKutta)
{
    const ModelParams p = merton_params();
    const double f1 = merton_f1(p);
    auto rhs = [&](double t, double v) {
        return -(f1 - hazard_after(p, t)) * v - p.gamma * std::pow(v, (p.gamma - 1) / p.gamma);
    };
    for (double t : {0.0, 10.0, 30.0, 50.0}) {
        const double ref = rk4(rhs, p.horizon, 1.0, t, 20000);
        EXPECT_NEAR(merton_h(p, t), ref, 1e-8 * ref) << "t = " << t;
    }
}

TEST(Merton, TimeOutsideHorizonRejected)
{
    const ModelParams p = merton_params();
    EXPECT_THROW(merton_h(p, -1.0), std::invalid_argument);
    EXPECT_THROW(merton_h(p, p.horizon + 1.0), std::invalid_argument);
}

TEST(PowerLawAmplitude, MatchesRungeKutta)
{
    // g' + ((f1 - lambda)/gamma) g + 1 = 0, g(T) = 0, A = g^gamma
    ModelParams p;
    p.pi = 0.0;
    p.eta = 0.1;
    const double f1 = power_law_f1(p, p.theta);
    const std::size_t n = 55000;
    const double dt = p.horizon / static_cast<double>(n);
    PowerLawAmplitude amp(f1, p.gamma);
    for (std::size_t i = 1; i <= n; ++i) {
        const double t = p.horizon - static_cast<double>(i) * dt;
        amp.step(dt, hazard_after(p, t));
    }
    auto rhs = [&](double t, double g) { return -((f1 - hazard_after(p, t)) / p.gamma) * g - 1.0; };
    const double g0 = rk4(rhs, p.horizon, 0.0, 0.0, 20000);
    EXPECT_NEAR(amp.amplitude(), std::pow(g0, p.gamma), 1e-3 * std::pow(g0, p.gamma));
}

TEST(PowerLawAmplitude, ReducesToMertonWithoutHabit)
{
    // eta = 0: f1 of the amplitude equals the Merton f1, and A(t) solves the
    // same ODE as h but with A(T) = 0 instead of 1
    ModelParams p = merton_params();
    EXPECT_NEAR(power_law_f1(p, p.theta), merton_f1(p), 1e-15);
}

TEST(Allocation, InteriorOptimumAndClamps)
{
    ModelParams p;
    std::size_t clamps = 0;
    // nu = u(xs): xs nu' = xs^(1-g), xs^2 nu'' = -g xs^(1-g)
    const double xs = 2.0;
    const double d1 = std::pow(xs, 1.0 - p.gamma);
    const double theta = detail::optimal_allocation(p, d1, -p.gamma * d1, 0.5, clamps);
    EXPECT_NEAR(theta, (p.mu - p.r) / (p.gamma * p.sigma * p.sigma), 1e-14);
    EXPECT_EQ(clamps, 0u);
    EXPECT_DOUBLE_EQ(detail::optimal_allocation(p, d1, -0.1 * d1, 0.5, clamps), 1.0);
    EXPECT_DOUBLE_EQ(detail::optimal_allocation(p, d1, 1.0, 0.5, clamps), 1.0);
    EXPECT_DOUBLE_EQ(detail::optimal_allocation(p, -d1, 1e-6, 0.5, clamps), 0.0);
    EXPECT_EQ(clamps, 3u);
}

TEST(ScaledSolver, CoarseGridTracksMerton)
{
    ModelParams p = merton_params();
    const ScaledGrid g = ScaledGrid::make(0.01, 400.0, 256, p.horizon, 4000);
    const ScaledSolution sol = solve_scaled(p, g, ThetaMode::fixed);
    for (double xs : {0.5, 1.0, 5.0, 20.0, 80.0}) {
        for (double t : {0.0, 20.0}) {
            const double ref = merton_h(p, t) * crra_utility(xs, p.gamma);
            EXPECT_NEAR(sol.nu_at(t, xs), ref, 0.01 * std::abs(ref)) << "xs " << xs << " t " << t;
        }
    }
}

TEST(ScaledSolver, ControlledAllocationDominatesFixed)
{
    ModelParams p;
    p.pi = 0.0;
    p.eta = 0.1;
    const ScaledGrid g = ScaledGrid::make(0.01, 400.0, 128, p.horizon, 2000);
    const ScaledSolution fixed = solve_scaled(p, g, ThetaMode::fixed);
    const ScaledSolution control = solve_scaled(p, g, ThetaMode::control);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_GE(control.initial_nu()[i], fixed.initial_nu()[i] - 1e-9 * std::abs(fixed.initial_nu()[i]));
        const double th = control.theta_star.back()[i];
        EXPECT_GE(th, 0.0);
        EXPECT_LE(th, 1.0);
    }
}

TEST(ScaledSolver, RequiresGammaAboveOne)
{
    ModelParams p;
    p.gamma = 0.5;
    const ScaledGrid g = ScaledGrid::make(0.01, 400.0, 16, p.horizon, 10);
    EXPECT_THROW(solve_scaled(p, g, ThetaMode::fixed), std::invalid_argument);
}
