#ifndef HABIT_HJB_WDT_HPP
#define HABIT_HJB_WDT_HPP

// Expected wealth-depletion time under a frozen consumption policy:
//
//   T_t + ((theta (mu - r) + r) w + pi - c*) T_w + eta (c* - cbar) T_cbar
//       + theta^2 sigma^2 w^2 T_ww / 2 + 1 = 0,
//
// T = 0 at w = 0, T_w = 0 at w_max, T(horizon) = 0.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjb_pension.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "scheme.hpp"

namespace habit_hjb {

struct WdtSolution {
    Grid2D grid;
    ModelParams params;
    std::string policy_ref;
    std::vector<std::size_t> steps;
    std::vector<Field2D> td;
    SchemeDiagnostics diagnostics;

    const Field2D& initial() const { return td.back(); }

    /// Expected years until depletion from (t, w, cbar).
    double td_at(double t, double w, double c, ClampCounter* counter = nullptr) const
    {
        const auto b = bracket_step(steps, (grid.horizon - t) / grid.dt());
        const double lo = bilinear_interpolate(td[b.lo], grid.w, grid.c, w, c, counter);
        if (b.weight_hi == 0.0) {
            return lo;
        }
        return lo + b.weight_hi * (bilinear_interpolate(td[b.hi], grid.w, grid.c, w, c) - lo);
    }
};

/// Backward march of the depletion-time PDE with the policy of `policy`
/// (blended linearly in time between its retained slices).
inline WdtSolution solve_wdt(const ValuePolicySolution& policy, std::string policy_ref = {},
                             std::size_t store_every = 0)
{
    const Grid2D& g = policy.grid;
    const ModelParams& p = policy.params;
    if (policy.policy.empty() || policy.steps.back() != g.n_time) {
        throw std::invalid_argument("solve_wdt: policy does not cover the whole horizon");
    }
    if (policy.policy.front().n_w() != g.w.size() || policy.policy.front().n_c() != g.c.size()) {
        throw std::invalid_argument("solve_wdt: policy slices do not match the grid");
    }

    WdtSolution sol;
    sol.grid = g;
    sol.params = p;
    sol.policy_ref = std::move(policy_ref);
    sol.steps = stored_steps(g.n_time, store_every, slice_budget(g.w.size() * g.c.size()));

    const std::vector<double> zero_edge(g.c.size(), 0.0);
    const double ret = p.portfolio_return();
    Field2D td(g.w.size(), g.c.size(), 0.0);
    Field2D next(g.w.size(), g.c.size());
    Field2D c_star;
    std::size_t keep = 0;
    for (std::size_t n = 0;; ++n) {
        if (keep < sol.steps.size() && sol.steps[keep] == n) {
            sol.td.push_back(td);
            ++keep;
        }
        if (n == g.n_time) {
            break;
        }
        policy.policy_field_at_step(n, c_star);
        upwind_step_2d(td, next, g, 0.0, p.half_variance(), ZeroWealthEdge::dirichlet, zero_edge,
                       [&](std::size_t j, std::size_t k) {
                           const double c = c_star(j, k);
                           return NodeTerms{-(ret * g.w[j] + p.pi - c), -p.eta * (c - g.c[k]), 1.0};
                       },
                       sol.diagnostics);
        std::swap(td, next);
    }
    return sol;
}

/// Retirement age plus the expected depletion time from (w0, cbar0) at t = 0.
inline double depletion_age(const WdtSolution& sol, double w0, double cbar0, ClampCounter* counter = nullptr)
{
    return sol.params.retire_age + sol.td_at(0.0, w0, cbar0, counter);
}

} // namespace habit_hjb

#endif // HABIT_HJB_WDT_HPP
