#ifndef HABIT_HJB_HJB_SCALED_HPP
#define HABIT_HJB_HJB_SCALED_HPP

// No-pension problem in the scaled variables xs = w / cbar, q = c / cbar,
// where V(t, w, cbar) = nu(t, w / cbar). The value solves
//
//   nu_t - (rho + lambda) nu + a nu_x + D nu_xx + u(q*) = 0,
//   a = (theta (mu - r) + r + eta) xs - (eta xs + 1) q*,   D = theta^2 sigma^2 xs^2 / 2,
//   q* = [(eta xs + 1) nu_x]^(-1/gamma).
//
// nu behaves like A(t) xs^(1-gamma) near zero wealth, so the solver works on a
// grid uniform in z = log xs over [xs_min, xs_max]:
//
//   nu_t - (rho + lambda) nu + (a/xs - D') nu_z + D' nu_zz + u(q*) = 0,  D' = theta^2 sigma^2 / 2,
//
// with the small-wealth asymptote imposed at xs_min and nu_x = 0 at xs_max.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hjb_pension.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "scheme.hpp"

namespace habit_hjb {

enum class ThetaMode { fixed, control };

/// Scaled-wealth nodes, uniform in log xs, plus the time axis.
struct ScaledGrid {
    Grid1D z;               // log xs
    std::vector<double> xs; // exp(z)
    std::size_t n_time = 0;
    double horizon = 0.0;

    double dt() const { return horizon / static_cast<double>(n_time); }
    double time_at(std::size_t n) const { return horizon - static_cast<double>(n) * dt(); }
    std::size_t size() const { return xs.size(); }

    static ScaledGrid make(double xs_min, double xs_max, std::size_t n_nodes, double horizon, std::size_t n_time)
    {
        if (!(xs_min > 0.0) || !(xs_max > xs_min)) {
            throw std::invalid_argument("ScaledGrid: need 0 < xs_min < xs_max");
        }
        if (n_time == 0 || !(horizon > 0.0)) {
            throw std::invalid_argument("ScaledGrid: need n_time >= 1 and horizon > 0");
        }
        ScaledGrid g;
        g.z = Grid1D::uniform(std::log(xs_min), std::log(xs_max), n_nodes);
        g.xs.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            g.xs[i] = std::exp(g.z[i]);
        }
        g.xs.front() = xs_min;
        g.xs.back() = xs_max;
        g.n_time = n_time;
        g.horizon = horizon;
        return g;
    }
};

struct ScaledSolverOptions {
    double marginal_floor = 1e-10;
    double ratio_cap = 0.0; // <= 0: 1 + xs_max, whole scaled wealth plus habit per year
    std::size_t store_every = 0;
};

struct ScaledSolution {
    ScaledGrid grid;
    ModelParams params;
    ThetaMode mode = ThetaMode::fixed;
    std::vector<std::size_t> steps;
    std::vector<std::vector<double>> nu;
    std::vector<std::vector<double>> q_star;
    std::vector<std::vector<double>> theta_star; // empty in fixed mode
    SchemeDiagnostics diagnostics;

    const std::vector<double>& initial_nu() const { return nu.back(); }
    const std::vector<double>& initial_q() const { return q_star.back(); }

    double nu_at(double t, double xs, ClampCounter* counter = nullptr) const
    {
        return interpolate(nu, t, xs, counter);
    }
    double q_at(double t, double xs, ClampCounter* counter = nullptr) const
    {
        return interpolate(q_star, t, xs, counter);
    }

private:
    double interpolate(const std::vector<std::vector<double>>& s, double t, double xs, ClampCounter* counter) const
    {
        // xs <= 0 lies below the grid and is clamped like any other outside point
        const double z = xs > 0.0 ? std::log(xs) : grid.z.front() - 1.0;
        const auto b = bracket_step(steps, (grid.horizon - t) / grid.dt());
        const double lo = linear_interpolate(s[b.lo], grid.z, z, counter);
        if (b.weight_hi == 0.0) {
            return lo;
        }
        return lo + b.weight_hi * (linear_interpolate(s[b.hi], grid.z, z) - lo);
    }
};

namespace detail {

/// Allocation maximising theta (mu - r) xs nu' + theta^2 sigma^2 xs^2 nu'' / 2
/// over [0, 1], from xs nu' and xs^2 nu''. Returns the unconstrained optimum
/// when it is interior.
inline double optimal_allocation(const ModelParams& p, double x_d1, double x2_d2, double fallback,
                                 std::size_t& clamps)
{
    const double excess = p.mu - p.r;
    if (x2_d2 < 0.0) {
        // -(kappa/sigma) nu' / (nu'' xs), kappa = (mu - r)/sigma
        const double theta = -(excess / (p.sigma * p.sigma)) * x_d1 / x2_d2;
        if (theta >= 0.0 && theta <= 1.0) {
            return theta;
        }
        ++clamps;
        return std::clamp(theta, 0.0, 1.0);
    }
    ++clamps;
    const double gain_at_one = excess * x_d1 + 0.5 * p.sigma * p.sigma * x2_d2;
    if (gain_at_one > 0.0) {
        return 1.0;
    }
    if (gain_at_one < 0.0) {
        return 0.0;
    }
    return fallback;
}

} // namespace detail

/// Backward march of the scaled HJB from nu(T) = 0. Only gamma > 1 is
/// supported: the zero-wealth asymptote used at xs_min needs unbounded utility.
inline ScaledSolution solve_scaled(const ModelParams& p, const ScaledGrid& g, ThetaMode mode,
                                   const ScaledSolverOptions& opt = {})
{
    p.validate();
    if (!(p.gamma > 1.0)) {
        throw std::invalid_argument("solve_scaled: needs gamma > 1");
    }
    const std::size_t m = g.size();
    const double dz = g.z.step();
    const double dt = g.dt();
    const double gamma = p.gamma;
    const double exponent = -1.0 / gamma;
    const double cap = opt.ratio_cap > 0.0 ? opt.ratio_cap : 1.0 + g.xs.back();
    const double capped_utility = std::pow(cap, 1.0 - gamma) / (1.0 - gamma);
    const double half_sigma2 = 0.5 * p.sigma * p.sigma;
    // in control mode the asymptote uses the unconstrained Merton allocation
    const double edge_theta =
        mode == ThetaMode::control ? std::clamp((p.mu - p.r) / (p.sigma * p.sigma * gamma), 0.0, 1.0) : p.theta;
    PowerLawAmplitude amplitude(power_law_f1(p, edge_theta), gamma);
    const double edge_utility = crra_utility(g.xs.front(), gamma);

    ScaledSolution sol;
    sol.grid = g;
    sol.params = p;
    sol.mode = mode;
    sol.steps = stored_steps(g.n_time, opt.store_every);

    std::vector<double> nu(m, 0.0), q(m, 0.0), theta(m, p.theta), src(m, 0.0);
    ColumnWorkspace ws(m);
    SchemeDiagnostics& diag = sol.diagnostics;

    auto refresh = [&]() {
        for (std::size_t i = 0; i < m; ++i) {
            const double xs = g.xs[i];
            // central in the interior, one-sided at the two edges; the
            // policy is lagged so this does not touch the upwind matrix
            double dnu;
            if (i == 0) {
                dnu = (nu[1] - nu[0]) / dz;
            } else if (i + 1 == m) {
                dnu = (nu[i] - nu[i - 1]) / dz;
            } else {
                dnu = (nu[i + 1] - nu[i - 1]) / (2.0 * dz);
            }
            double marginal = (p.eta * xs + 1.0) * dnu / xs;
            if (!(marginal > opt.marginal_floor)) {
                marginal = opt.marginal_floor;
                ++diag.floor_hits;
            }
            double qi = std::pow(marginal, exponent);
            double ui = qi * marginal / (1.0 - gamma);
            if (qi > cap) {
                qi = cap;
                ui = capped_utility;
                ++diag.cap_hits;
            }
            q[i] = qi;
            src[i] = ui;
        }
        if (mode == ThetaMode::control) {
            for (std::size_t i = 1; i + 1 < m; ++i) {
                // xs nu' = nu_z, xs^2 nu'' = nu_zz - nu_z
                const double d1 = (nu[i + 1] - nu[i - 1]) / (2.0 * dz);
                const double d2 = (nu[i + 1] - 2.0 * nu[i] + nu[i - 1]) / (dz * dz);
                theta[i] = detail::optimal_allocation(p, d1, d2 - d1, p.theta, diag.control_clamps);
            }
            theta[0] = edge_theta;
            theta[m - 1] = theta[m - 2];
        }
    };

    std::size_t keep = 0;
    for (std::size_t n = 0;; ++n) {
        refresh();
        if (keep < sol.steps.size() && sol.steps[keep] == n) {
            sol.nu.push_back(nu);
            sol.q_star.push_back(q);
            if (mode == ThetaMode::control) {
                sol.theta_star.push_back(theta);
            }
            ++keep;
        }
        if (n == g.n_time) {
            break;
        }

        const double hazard = hazard_after(p, g.time_at(n + 1));
        const double discount = p.rho + hazard;
        amplitude.step(dt, hazard);
        ws.lower[0] = 0.0;
        ws.diag[0] = 1.0;
        ws.upper[0] = 0.0;
        ws.rhs[0] = amplitude.amplitude() * edge_utility;
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double xs = g.xs[i];
            const double th = theta[i];
            const double diffusion = half_sigma2 * th * th;
            const double drift =
                th * (p.mu - p.r) + p.r + p.eta - (p.eta * xs + 1.0) * q[i] / xs - diffusion;
            const RowCoefficients row = hybrid_row(-drift, diffusion, dz, dt, discount);
            ws.lower[i] = row.lower;
            ws.diag[i] = row.diag;
            ws.upper[i] = row.upper;
            ws.rhs[i] = nu[i] / dt + src[i];
        }
        ws.lower[m - 1] = -1.0;
        ws.diag[m - 1] = 1.0;
        ws.upper[m - 1] = 0.0;
        ws.rhs[m - 1] = 0.0;
        solve_tridiagonal(ws.lower, ws.diag, ws.upper, ws.rhs, nu, ws.scratch);
    }
    return sol;
}

/// Merton (eta = 0) time factor h(t) with nu(t, xs) = h(t) u(xs):
///
///   h(t) = ( e^{E(t)/gamma} (1 + int_t^T e^{-E(s)/gamma} ds) )^gamma,
///   E(t) = f1 (T - t) - f2 + e^{(x - m + t)/b},
///   f1 = -rho + (1 - gamma)(theta (mu - r) + r - gamma theta^2 sigma^2 / 2),  f2 = e^{(x - m + T)/b}.
///
/// This satisfies h' + (f1 - lambda_{x+t}) h + gamma h^{(gamma-1)/gamma} = 0, h(T) = 1.
inline double merton_f1(const ModelParams& p)
{
    return -p.rho + (1.0 - p.gamma) * (p.portfolio_return() - 0.5 * p.gamma * p.theta * p.theta * p.sigma * p.sigma);
}

inline double merton_h(const ModelParams& p, double t)
{
    const double T = p.horizon;
    if (!(t >= 0.0 && t <= T)) {
        throw std::invalid_argument("merton_h: t outside [0, T]");
    }
    const double f1 = merton_f1(p);
    const double shift = (p.retire_age - p.gompertz_m) / p.gompertz_b;
    const double f2 = std::exp(shift + T / p.gompertz_b);
    auto exponent = [&](double s) { return f1 * (T - s) - f2 + std::exp(shift + s / p.gompertz_b); };

    // e^{E(t)/g} * e^{-E(s)/g} combined to keep the integrand bounded
    const double et = exponent(t) / p.gamma;
    auto integrand = [&](double s) { return std::exp(et - exponent(s) / p.gamma); };
    double error = 0.0;
    double integral = 0.0;
    if (t < T) {
        integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, t, T, 20, 1e-13,
                                                                                 &error);
        if (!std::isfinite(integral) || error > 1e-9 * std::abs(integral) + 1e-300) {
            throw std::runtime_error("merton_h: quadrature failed to converge");
        }
    }
    return std::pow(std::exp(et) + integral, p.gamma);
}

} // namespace habit_hjb

#endif // HABIT_HJB_HJB_SCALED_HPP
