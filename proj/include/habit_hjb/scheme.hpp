#ifndef HABIT_HJB_SCHEME_HPP
#define HABIT_HJB_SCHEME_HPP

// Implicit-in-wealth, explicit-in-habit upwind time step shared by the value
// function and depletion-time solvers.
//
// Every solver here marches backward from the horizon and discretises
//
//   (U^{n+1} - U^n)/dt + k U^{n+1}
//     + a+ (U_j - U_{j-1})/dw + a- (U_{j+1} - U_j)/dw           (level n+1)
//     + b+ (U_k - U_{k-1})/dc + b- (U_{k+1} - U_k)/dc           (level n)
//     - D (U_{j+1} - 2U_j + U_{j-1})/dw^2                        (level n+1)
//     - s = 0
//
// where a = -(wealth drift), b = -(habit drift) and (a+, a-) is the upwind
// split. For each habit node this is one tridiagonal system in wealth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "numerics.hpp"

namespace habit_hjb {

/// Counters accumulated while marching. None of them abort a solve.
struct SchemeDiagnostics {
    std::size_t floor_hits = 0;      // marginal value floored before the negative power
    std::size_t cap_hits = 0;        // policy clamped at the consumption cap
    std::size_t dropped_flux = 0;    // habit-edge upwind terms pointing out of the grid
    std::size_t cfl_violations = 0;  // steps with dt*max|b|/dc > 1
    std::size_t control_clamps = 0;  // allocation control clamped into [0, 1]
    double max_cfl = 0.0;

    void merge(const SchemeDiagnostics& o)
    {
        floor_hits += o.floor_hits;
        cap_hits += o.cap_hits;
        dropped_flux += o.dropped_flux;
        cfl_violations += o.cfl_violations;
        control_clamps += o.control_clamps;
        max_cfl = std::max(max_cfl, o.max_cfl);
    }
};

/// Treatment of the w = 0 edge.
enum class ZeroWealthEdge {
    first_order_pde, // same upwind row with no diffusion; link to w < 0 dropped
    dirichlet,       // fixed value at j = 0
    singular,        // unbounded utility at j = 0: fixed value at j = 1, j = 0 extrapolated
};

/// Amplitude A(t) of the small-wealth asymptote nu ~ A(t) u(xs) of the
/// no-pension problem, carried as g = A^(1/gamma), which obeys the linear ODE
/// g' + ((f1 - lambda)/gamma) g + 1 = 0, g(T) = 0, with
/// f1 = -rho + (1 - gamma)(theta (mu - r) + r + eta - gamma theta^2 sigma^2 / 2).
/// Each backward step is integrated exactly with lambda frozen at the new level.
class PowerLawAmplitude {
public:
    PowerLawAmplitude(double f1, double gamma) : f1_(f1), gamma_(gamma) {}

    void step(double dt, double hazard)
    {
        const double c = (f1_ - hazard) / gamma_;
        const double growth = std::exp(c * dt);
        const double forcing = (std::abs(c * dt) < 1e-12) ? dt : std::expm1(c * dt) / c;
        g_ = g_ * growth + forcing;
    }

    double amplitude() const { return std::pow(g_, gamma_); }

private:
    double f1_;
    double gamma_;
    double g_ = 0.0;
};

/// Worker count: HABIT_HJB_THREADS if set, else the OpenMP default.
inline int worker_count()
{
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("HABIT_HJB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) {
            n = std::min(n, cap);
        }
    }
    return std::max(n, 1);
}

struct RowCoefficients {
    double lower;
    double diag;
    double upper;
};

/// Implicit wealth-direction row for one interior node.
inline RowCoefficients upwind_row(double alpha, double diffusion, double dw, double dt, double discount)
{
    const auto [ap, am] = upwind_split(alpha);
    const double inv_dw = 1.0 / dw;
    const double d2 = diffusion * inv_dw * inv_dw;
    return {-ap * inv_dw - d2, 1.0 / dt + discount + (ap - am) * inv_dw + 2.0 * d2, am * inv_dw - d2};
}

/// Central advection where the cell Peclet number allows it (off-diagonals
/// stay non-positive), upwind elsewhere.
inline RowCoefficients hybrid_row(double alpha, double diffusion, double dw, double dt, double discount)
{
    if (std::abs(alpha) * dw > 2.0 * diffusion) {
        return upwind_row(alpha, diffusion, dw, dt, discount);
    }
    const double half = 0.5 * alpha / dw;
    const double d2 = diffusion / (dw * dw);
    return {-half - d2, 1.0 / dt + discount + 2.0 * d2, half - d2};
}

struct NodeTerms {
    double alpha;  // -(wealth drift)
    double beta;   // -(habit drift)
    double source; // running reward
};

/// Per-thread scratch for one tridiagonal solve.
struct ColumnWorkspace {
    std::vector<double> lower, diag, upper, rhs, scratch;
    explicit ColumnWorkspace(std::size_t m = 0) : lower(m), diag(m), upper(m), rhs(m), scratch(m) {}
};

/// One backward step prev -> next on a 2-D grid.
///
/// `terms(j, k)` supplies the node coefficients of every row solved as a PDE
/// row. `half_var` multiplies w^2 in the diffusion. `edge_values[k]` is the
/// fixed edge value for the dirichlet and singular edges.
template <class Terms>
void upwind_step_2d(const Field2D& prev, Field2D& next, const Grid2D& grid, double discount,
                    double half_var, ZeroWealthEdge edge, std::span<const double> edge_values, Terms&& terms,
                    SchemeDiagnostics& diag)
{
    const std::size_t m = grid.w.size();
    const std::size_t kc = grid.c.size();
    const double dt = grid.dt();
    const double dw = grid.w.step();
    const double dc = grid.c.step();
    const double inv_dt = 1.0 / dt;
    const double inv_dc = 1.0 / dc;

    std::size_t dropped = 0;
    double max_cfl = 0.0;

#ifdef _OPENMP
#pragma omp parallel num_threads(worker_count()) reduction(+ : dropped) reduction(max : max_cfl)
#endif
    {
        ColumnWorkspace ws(m);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (std::size_t k = 0; k < kc; ++k) {
            const auto col = prev.column(k);
            for (std::size_t j = 0; j < m; ++j) {
                if (j == m - 1) {
                    // zero wealth-derivative far field
                    ws.lower[j] = -1.0;
                    ws.diag[j] = 1.0;
                    ws.upper[j] = 0.0;
                    ws.rhs[j] = 0.0;
                    continue;
                }
                if ((j == 0 && edge != ZeroWealthEdge::first_order_pde) ||
                    (j == 1 && edge == ZeroWealthEdge::singular)) {
                    ws.lower[j] = 0.0;
                    ws.diag[j] = 1.0;
                    ws.upper[j] = 0.0;
                    ws.rhs[j] = (j == 0 && edge == ZeroWealthEdge::singular) ? 0.0 : edge_values[k];
                    continue;
                }
                const NodeTerms t = terms(j, k);
                const double w = grid.w[j];
                RowCoefficients row = upwind_row(t.alpha, half_var * w * w, dw, dt, discount);
                if (j == 0) {
                    // zero flux through the lower face
                    row.diag += row.lower;
                    row.lower = 0.0;
                }

                const auto [bp, bm] = upwind_split(t.beta);
                double habit = 0.0;
                if (bp > 0.0) {
                    if (k > 0) {
                        habit += bp * (col[j] - prev(j, k - 1)) * inv_dc;
                    } else {
                        ++dropped;
                    }
                }
                if (bm < 0.0) {
                    if (k + 1 < kc) {
                        habit += bm * (prev(j, k + 1) - col[j]) * inv_dc;
                    } else {
                        ++dropped;
                    }
                }
                max_cfl = std::max(max_cfl, dt * std::abs(t.beta) * inv_dc);

                ws.lower[j] = row.lower;
                ws.diag[j] = row.diag;
                ws.upper[j] = row.upper;
                ws.rhs[j] = col[j] * inv_dt - habit + t.source;
            }
            auto out = next.column(k);
            solve_tridiagonal(ws.lower, ws.diag, ws.upper, ws.rhs, out, ws.scratch);
            if (edge == ZeroWealthEdge::singular) {
                out[0] = 2.0 * out[1] - out[2];
            }
        }
    }

    diag.dropped_flux += dropped;
    diag.max_cfl = std::max(diag.max_cfl, max_cfl);
    if (max_cfl > 1.0) {
        ++diag.cfl_violations;
    }
}

/// Retained-slice count for a field of `nodes` values per slice: at most 440,
/// at least 16, and about 4e7 stored values in between.
inline std::size_t slice_budget(std::size_t nodes)
{
    constexpr double budget = 4e7;
    const double n = budget / static_cast<double>(std::max<std::size_t>(nodes, 1));
    return static_cast<std::size_t>(std::clamp(n, 16.0, 440.0));
}

/// Evenly spaced subset of steps 0..n_time (both ends included) kept by a
/// solver. `every == 0` picks a stride that keeps at most `max_slices` + 1.
inline std::vector<std::size_t> stored_steps(std::size_t n_time, std::size_t every, std::size_t max_slices = 440)
{
    if (every == 0) {
        every = std::max<std::size_t>(1, (n_time + max_slices - 1) / max_slices);
    }
    std::vector<std::size_t> steps;
    for (std::size_t n = 0; n < n_time; n += every) {
        steps.push_back(n);
    }
    steps.push_back(n_time);
    return steps;
}

/// Bracketing pair of stored steps for a fractional step index, and the weight
/// of the later one.
struct StepBracket {
    std::size_t lo;
    std::size_t hi;
    double weight_hi;
};

inline StepBracket bracket_step(const std::vector<std::size_t>& steps, double n_real)
{
    n_real = std::clamp(n_real, 0.0, static_cast<double>(steps.back()));
    auto it = std::upper_bound(steps.begin(), steps.end(), n_real,
                               [](double v, std::size_t s) { return v < static_cast<double>(s); });
    std::size_t hi = static_cast<std::size_t>(it - steps.begin());
    if (hi == 0) {
        hi = 1;
    }
    if (hi >= steps.size()) {
        return {steps.size() - 1, steps.size() - 1, 0.0};
    }
    const std::size_t lo = hi - 1;
    const double span = static_cast<double>(steps[hi] - steps[lo]);
    return {lo, hi, (n_real - static_cast<double>(steps[lo])) / span};
}

} // namespace habit_hjb

#endif // HABIT_HJB_SCHEME_HPP
