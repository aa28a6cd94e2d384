#ifndef HABIT_HJB_HJB_PENSION_HPP
#define HABIT_HJB_HJB_PENSION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "numerics.hpp"
#include "scheme.hpp"

namespace habit_hjb {

struct PensionSolverOptions {
    double marginal_floor = 1e-10;
    double consumption_cap = 0.0; // <= 0: pi + r*w_max + c_max
    std::size_t store_every = 0;  // 0: automatic stride
    bool check_invariants = false;
};

inline double resolved_consumption_cap(const ModelParams& p, const Grid2D& g, const PensionSolverOptions& o)
{
    if (o.consumption_cap > 0.0) {
        return o.consumption_cap;
    }
    return p.pi + std::max(p.r, 0.0) * g.w.back() + g.c.back();
}

/// Policy at the zero-wealth edge.
inline double zero_wealth_consumption(const ModelParams& p, double habit) { return std::min(p.pi, habit); }

/// Growth constant of the small-wealth power-law asymptote for allocation `theta`.
inline double power_law_f1(const ModelParams& p, double theta)
{
    return -p.rho + (1.0 - p.gamma) * (theta * (p.mu - p.r) + p.r + p.eta -
                                       0.5 * p.gamma * theta * theta * p.sigma * p.sigma);
}

/// The zero-wealth edge is singular when the edge consumption is zero and
/// utility is unbounded below there.
inline bool singular_zero_edge(const ModelParams& p) { return p.pi <= 0.0 && p.gamma > 1.0; }

namespace detail {

/// Policy and running utility from one value slice. Unclamped nodes use
/// u(c/cbar) = c * marginal / (1 - gamma), which avoids a second power.
inline void consumption_and_utility(const Field2D& v, const Grid2D& g, const ModelParams& p, double floor,
                                    double cap, Field2D& policy, Field2D* utility, SchemeDiagnostics& diag)
{
    const std::size_t m = g.w.size();
    const std::size_t kc = g.c.size();
    const double inv_dw = 1.0 / g.w.step();
    const double inv_dc = 1.0 / g.c.step();
    const double gamma = p.gamma;
    const double exponent = -1.0 / gamma;
    const double habit_power = (gamma - 1.0) / gamma;
    const bool singular = singular_zero_edge(p);
    std::size_t floors = 0;
    std::size_t caps = 0;

    for (std::size_t k = 0; k < kc; ++k) {
        const double cbar = g.c[k];
        const double scale = std::pow(cbar, habit_power);
        const std::size_t kf = (k + 1 < kc) ? k + 1 : k;
        const std::size_t kb = (k + 1 < kc) ? k : k - 1;

        const double capped_utility = std::pow(cap / cbar, 1.0 - gamma) / (1.0 - gamma);
        const double edge = zero_wealth_consumption(p, cbar);
        policy(0, k) = edge;
        if (utility != nullptr) {
            (*utility)(0, k) = singular ? 0.0 : (edge > 0.0 ? crra_utility(edge / cbar, gamma) : 0.0);
        }

        for (std::size_t j = 1; j < m; ++j) {
            double marginal = (v(j, k) - v(j - 1, k)) * inv_dw - p.eta * (v(j, kf) - v(j, kb)) * inv_dc;
            if (!(marginal > floor)) {
                marginal = floor;
                ++floors;
            }
            double c = scale * std::pow(marginal, exponent);
            double u = c * marginal / (1.0 - gamma);
            if (c > cap) {
                c = cap;
                u = capped_utility;
                ++caps;
            }
            policy(j, k) = c;
            if (utility != nullptr) {
                (*utility)(j, k) = u;
            }
        }
    }
    diag.floor_hits += floors;
    diag.cap_hits += caps;
}

} // namespace detail

/// Optimal consumption c*(w, cbar) implied by a value slice: backward
/// difference in wealth, forward difference in habit (backward on the top
/// habit row), min(pi, cbar) on the zero-wealth edge.
inline Field2D optimal_consumption_field(const Field2D& v, const Grid2D& g, const ModelParams& p,
                                         const PensionSolverOptions& opt = {},
                                         SchemeDiagnostics* diag = nullptr)
{
    Field2D policy(g.w.size(), g.c.size());
    SchemeDiagnostics local;
    detail::consumption_and_utility(v, g, p, opt.marginal_floor, resolved_consumption_cap(p, g, opt), policy,
                                    nullptr, local);
    if (diag != nullptr) {
        diag->merge(local);
    }
    return policy;
}

/// Advances the value function one step back in time. `n` is the index of
/// `v` (so the result sits at step n + 1). The policy is taken from `v`.
class PensionStepper {
public:
    PensionStepper(const ModelParams& p, const Grid2D& g, const PensionSolverOptions& opt = {})
        : p_(p), g_(g), opt_(opt), cap_(resolved_consumption_cap(p, g, opt)),
          policy_(g.w.size(), g.c.size()), utility_(g.w.size(), g.c.size()), edge_values_(g.c.size(), 0.0),
          amplitude_(power_law_f1(p, p.theta), p.gamma)
    {
    }

    /// Computes the policy of `v` (readable afterwards via policy()) and
    /// writes the next slice into `out`.
    void step(const Field2D& v, std::size_t n, Field2D& out)
    {
        detail::consumption_and_utility(v, g_, p_, opt_.marginal_floor, cap_, policy_, &utility_, diag_);
        step_with_policy(v, n, out);
    }

    /// Same as step() but reusing the policy from the last refresh_policy().
    void step_with_policy(const Field2D& v, std::size_t n, Field2D& out)
    {
        const double discount = p_.rho + hazard_after(p_, g_.time_at(n + 1));
        const double ret = p_.portfolio_return();
        const double pi = p_.pi;
        const double eta = p_.eta;
        auto edge = ZeroWealthEdge::first_order_pde;
        if (singular_zero_edge(p_)) {
            edge = ZeroWealthEdge::singular;
            amplitude_.step(g_.dt(), hazard_after(p_, g_.time_at(n + 1)));
            const double a = amplitude_.amplitude();
            for (std::size_t k = 0; k < g_.c.size(); ++k) {
                edge_values_[k] = a * crra_utility(g_.w[1] / g_.c[k], p_.gamma);
            }
        }
        upwind_step_2d(v, out, g_, discount, p_.half_variance(), edge, edge_values_,
                       [&](std::size_t j, std::size_t k) {
                           const double c = policy_(j, k);
                           return NodeTerms{-(ret * g_.w[j] + pi - c), -eta * (c - g_.c[k]), utility_(j, k)};
                       },
                       diag_);
    }

    void refresh_policy(const Field2D& v)
    {
        detail::consumption_and_utility(v, g_, p_, opt_.marginal_floor, cap_, policy_, &utility_, diag_);
    }

    const Field2D& policy() const { return policy_; }
    const Field2D& utility() const { return utility_; }
    const SchemeDiagnostics& diagnostics() const { return diag_; }
    double consumption_cap() const { return cap_; }

private:
    ModelParams p_;
    Grid2D g_;
    PensionSolverOptions opt_;
    double cap_;
    Field2D policy_;
    Field2D utility_;
    std::vector<double> edge_values_;
    PowerLawAmplitude amplitude_;
    SchemeDiagnostics diag_;
};

/// Single backward step V^n -> V^{n+1}.
inline Field2D step_backward(const Field2D& v, std::size_t n, const Grid2D& g, const ModelParams& p,
                             const PensionSolverOptions& opt = {}, SchemeDiagnostics* diag = nullptr)
{
    PensionStepper stepper(p, g, opt);
    Field2D out(g.w.size(), g.c.size());
    stepper.step(v, n, out);
    if (diag != nullptr) {
        diag->merge(stepper.diagnostics());
    }
    return out;
}

class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Value surface and consumption policy on a subset of the time steps.
///
/// `steps` holds the retained step indices in increasing order (decreasing
/// time); value[i] and policy[i] belong to steps[i]. Queries between retained
/// steps are linear in time.
struct ValuePolicySolution {
    Grid2D grid;
    ModelParams params;
    PensionSolverOptions options;
    std::vector<std::size_t> steps;
    std::vector<Field2D> value;
    std::vector<Field2D> policy;
    SchemeDiagnostics diagnostics;

    double step_of_time(double t) const { return (grid.horizon - t) / grid.dt(); }

    /// Slices at t = 0 (age at retirement).
    const Field2D& initial_value() const { return value.back(); }
    const Field2D& initial_policy() const { return policy.back(); }

    double value_at(double t, double w, double c, ClampCounter* counter = nullptr) const
    {
        return interpolate(value, t, w, c, counter);
    }

    double policy_at(double t, double w, double c, ClampCounter* counter = nullptr) const
    {
        return interpolate(policy, t, w, c, counter);
    }

    /// Policy field at an arbitrary step index, blended from retained slices.
    Field2D policy_field_at_step(std::size_t n) const
    {
        Field2D out;
        policy_field_at_step(n, out);
        return out;
    }

    /// Same, writing into `out` (resized as needed).
    void policy_field_at_step(std::size_t n, Field2D& out) const
    {
        const auto b = bracket_step(steps, static_cast<double>(n));
        const Field2D& lo = policy[b.lo];
        if (out.n_w() != lo.n_w() || out.n_c() != lo.n_c()) {
            out = Field2D(lo.n_w(), lo.n_c());
        }
        auto dst = out.data();
        const auto a = lo.data();
        const auto h = policy[b.hi].data();
        const double wt = b.weight_hi;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = a[i] + wt * (h[i] - a[i]);
        }
    }

private:
    double interpolate(const std::vector<Field2D>& slices, double t, double w, double c,
                       ClampCounter* counter) const
    {
        const auto b = bracket_step(steps, step_of_time(t));
        const double lo = bilinear_interpolate(slices[b.lo], grid.w, grid.c, w, c, counter);
        if (b.weight_hi == 0.0) {
            return lo;
        }
        const double hi = bilinear_interpolate(slices[b.hi], grid.w, grid.c, w, c);
        return lo + b.weight_hi * (hi - lo);
    }
};

/// Checks the sign and monotonicity invariants of a value slice and the
/// zero-wealth policy. Throws InvariantViolation.
inline void check_slice_invariants(const Field2D& v, const Field2D& policy, const Grid2D& g, const ModelParams& p)
{
    const double tol = 1e-8 * std::max(v.max_abs(), 1.0);
    for (std::size_t k = 0; k < g.c.size(); ++k) {
        for (std::size_t j = 0; j < g.w.size(); ++j) {
            if (p.gamma > 1.0 && v(j, k) > tol) {
                throw InvariantViolation("value function positive for gamma > 1");
            }
            if (!(policy(j, k) >= 0.0)) {
                throw InvariantViolation("negative consumption");
            }
            if (j > 0 && v(j, k) - v(j - 1, k) < -tol) {
                throw InvariantViolation("value function decreasing in wealth");
            }
        }
        if (policy(0, k) != zero_wealth_consumption(p, g.c[k])) {
            throw InvariantViolation("zero-wealth policy differs from min(pi, cbar)");
        }
    }
}

/// Backward march from V(T) = 0 to t = 0.
inline ValuePolicySolution solve(const ModelParams& p, const Grid2D& g, const PensionSolverOptions& opt = {})
{
    p.validate();
    if (std::abs(g.horizon - p.horizon) > 1e-12 * p.horizon) {
        throw std::invalid_argument("solve: grid horizon differs from model horizon");
    }
    ValuePolicySolution sol;
    sol.grid = g;
    sol.params = p;
    sol.options = opt;
    sol.steps = stored_steps(g.n_time, opt.store_every, slice_budget(g.w.size() * g.c.size()));

    PensionStepper stepper(p, g, opt);
    Field2D v(g.w.size(), g.c.size(), 0.0);
    Field2D next(g.w.size(), g.c.size());
    std::size_t keep = 0;
    for (std::size_t n = 0;; ++n) {
        stepper.refresh_policy(v);
        if (keep < sol.steps.size() && sol.steps[keep] == n) {
            if (opt.check_invariants) {
                check_slice_invariants(v, stepper.policy(), g, p);
            }
            sol.value.push_back(v);
            sol.policy.push_back(stepper.policy());
            ++keep;
        }
        if (n == g.n_time) {
            break;
        }
        stepper.step_with_policy(v, n, next);
        std::swap(v, next);
    }
    sol.diagnostics = stepper.diagnostics();
    return sol;
}

} // namespace habit_hjb

#endif // HABIT_HJB_HJB_PENSION_HPP
