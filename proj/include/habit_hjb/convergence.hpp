#ifndef HABIT_HJB_CONVERGENCE_HPP
#define HABIT_HJB_CONVERGENCE_HPP

// Grid-refinement study: L2 norm of the policy difference between
// consecutive halvings of one axis, and the ratio of consecutive norms.
// The norm is the discrete L2 norm of a grid function, weighted by the
// coarse cell area, so a first-order error gives ratios near 2.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjb_pension.hpp"
#include "model.hpp"
#include "numerics.hpp"

namespace habit_hjb {

enum class RefineAxis { wealth, habit };

inline const char* axis_name(RefineAxis a) { return a == RefineAxis::wealth ? "w" : "cbar"; }

/// Default step count: the habit direction is explicit, so fast habits need
/// short steps. 1e3 for eta <= 0.01, 4e4 above.
inline std::size_t auto_time_steps(double eta) { return eta <= 0.01 ? 1000 : 40000; }

struct GridSpec {
    double w_max = 150.0;
    std::size_t n_w = 257;
    double c_min = 0.1;
    double c_max = 30.0;
    std::size_t n_c = 80;
    std::size_t n_time = 0; // 0: auto_time_steps(eta)

    std::size_t time_steps(double eta) const { return n_time > 0 ? n_time : auto_time_steps(eta); }
    Grid2D make(const ModelParams& p) const
    {
        return Grid2D::make(w_max, n_w, c_min, c_max, n_c, p.horizon, time_steps(p.eta));
    }
};

struct ConvergenceRow {
    std::size_t nodes_coarse;
    std::size_t nodes_fine;
    double l2;  // grid norm sqrt(dw dc sum e^2) on the coarse nodes
    double rss; // plain root-sum-square, sum e^2 without the cell weight
    std::optional<double> er; // l2 of the previous row over this one
};

struct ConvergenceReport {
    RefineAxis axis = RefineAxis::wealth;
    double t0 = 0.0;
    std::vector<std::size_t> nodes;
    std::vector<ConvergenceRow> rows;

    std::vector<double> error_ratios() const
    {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (r.er) {
                out.push_back(*r.er);
            }
        }
        return out;
    }
};

/// Root-sum-square of fine - coarse over the coarse nodes. The fine axis must
/// contain every coarse node, which holds when (n_fine - 1) is a multiple of
/// (n_coarse - 1) on the same interval.
inline double nested_rss(const Field2D& coarse, const Field2D& fine, RefineAxis axis)
{
    const std::size_t nc = axis == RefineAxis::wealth ? coarse.n_w() : coarse.n_c();
    const std::size_t nf = axis == RefineAxis::wealth ? fine.n_w() : fine.n_c();
    const std::size_t other_c = axis == RefineAxis::wealth ? coarse.n_c() : coarse.n_w();
    const std::size_t other_f = axis == RefineAxis::wealth ? fine.n_c() : fine.n_w();
    if (other_c != other_f || nc < 2 || (nf - 1) % (nc - 1) != 0) {
        throw std::invalid_argument("nested_l2: grids are not nested along the refined axis");
    }
    const std::size_t stride = (nf - 1) / (nc - 1);
    double ss = 0.0;
    for (std::size_t a = 0; a < nc; ++a) {
        for (std::size_t b = 0; b < other_c; ++b) {
            const double c = axis == RefineAxis::wealth ? coarse(a, b) : coarse(b, a);
            const double f = axis == RefineAxis::wealth ? fine(a * stride, b) : fine(b, a * stride);
            ss += (f - c) * (f - c);
        }
    }
    return std::sqrt(ss);
}

/// Policy slice at time t0 from a full solve.
inline Field2D policy_slice(const ValuePolicySolution& sol, double t0)
{
    const double n = sol.step_of_time(t0);
    const auto rounded = static_cast<std::size_t>(std::llround(n));
    if (std::abs(n - static_cast<double>(rounded)) > 1e-9) {
        throw std::invalid_argument("policy_slice: t0 is not on the time grid");
    }
    return sol.policy_field_at_step(rounded);
}

/// Solves at every resolution in `nodes` along `axis` (other axes from
/// `base`) and reports L2 and error ratios. `n_time_for` may override the time
/// step count per resolution. `progress` is called after each solve.
inline ConvergenceReport run_convergence(const ModelParams& p, const GridSpec& base, RefineAxis axis,
                                         const std::vector<std::size_t>& nodes, double t0 = 0.0,
                                         const std::function<std::size_t(std::size_t)>& n_time_for = {},
                                         const std::function<void(std::size_t)>& progress = {})
{
    if (nodes.size() < 3) {
        throw std::invalid_argument("run_convergence: need at least 3 resolutions");
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (nodes[i - 1] < 2 || (nodes[i] - 1) % (nodes[i - 1] - 1) != 0 || nodes[i] <= nodes[i - 1]) {
            throw std::invalid_argument("run_convergence: resolutions " + std::to_string(nodes[i - 1]) + " and " +
                                        std::to_string(nodes[i]) + " are not nested");
        }
    }
    ConvergenceReport rep;
    rep.axis = axis;
    rep.t0 = t0;
    rep.nodes = nodes;

    Field2D previous;
    Grid2D previous_grid;
    std::optional<double> previous_l2;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        GridSpec spec = base;
        (axis == RefineAxis::wealth ? spec.n_w : spec.n_c) = nodes[i];
        if (n_time_for) {
            spec.n_time = n_time_for(nodes[i]);
        }
        const Grid2D g = spec.make(p);
        // a stride of n0 retains step n0 (time t0) exactly
        const auto n0 = static_cast<std::size_t>(std::llround((g.horizon - t0) / g.dt()));
        PensionSolverOptions opt;
        opt.store_every = n0 == 0 ? g.n_time : n0;
        ValuePolicySolution sol = solve(p, g, opt);
        Field2D current = policy_slice(sol, t0);
        if (progress) {
            progress(nodes[i]);
        }
        if (i > 0) {
            const double rss = nested_rss(previous, current, axis);
            const double cell = previous_grid.w.step() * previous_grid.c.step();
            ConvergenceRow row{nodes[i - 1], nodes[i], std::sqrt(cell) * rss, rss, std::nullopt};
            if (previous_l2 && row.l2 > 0.0) {
                row.er = *previous_l2 / row.l2;
            }
            previous_l2 = row.l2;
            rep.rows.push_back(row);
        }
        previous = std::move(current);
        previous_grid = g;
    }
    return rep;
}

} // namespace habit_hjb

#endif // HABIT_HJB_CONVERGENCE_HPP
