#ifndef HABIT_HJB_ANNUITY_HPP
#define HABIT_HJB_ANNUITY_HPP

// Annuitization at retirement. Converting dw of wealth into lifetime income
// raises the pension by dw / a_x, where a_x is the annuity factor. With
//
//   dV(w) = V(0, w, cbar, pi) - V(0, w - dw, cbar, pi + dw / a_x),
//
// dV < 0 means annuitizing dw is preferred. The annuity-equivalent wealth
// w_hat of w solves V(0, w_hat, cbar, pi) = V(0, 0, cbar, pi + w / a_x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hjb_pension.hpp"
#include "model.hpp"
#include "numerics.hpp"

namespace habit_hjb {

enum class DeltaWRule { proportional, full, fixed };

inline const char* rule_name(DeltaWRule r)
{
    switch (r) {
    case DeltaWRule::proportional:
        return "proportional";
    case DeltaWRule::full:
        return "full";
    case DeltaWRule::fixed:
        return "fixed";
    }
    return "?";
}

struct DeltaWSpec {
    DeltaWRule rule = DeltaWRule::proportional;
    double fraction = 0.1; // proportional: dw = fraction * w
    double amount = 1.0;   // fixed: dw = amount

    double at(double w) const
    {
        switch (rule) {
        case DeltaWRule::proportional:
            return fraction * w;
        case DeltaWRule::full:
            return w;
        case DeltaWRule::fixed:
            return amount;
        }
        return 0.0;
    }

    std::string label() const
    {
        switch (rule) {
        case DeltaWRule::proportional:
            return "dw = " + std::to_string(fraction) + " * w";
        case DeltaWRule::full:
            return "dw = w";
        case DeltaWRule::fixed:
            return "dw = " + std::to_string(amount);
        }
        return {};
    }
};

/// Time-zero value surfaces for pension levels pi_0 < ... < pi_L (uniform),
/// with cubic Lagrange interpolation in the pension.
class PensionFamily {
public:
    PensionFamily(const ModelParams& p, const Grid2D& g, double pi_lo, double pi_hi, std::size_t levels,
                  const PensionSolverOptions& opt = {})
        : grid_(g)
    {
        if (levels < 1 || !(pi_hi >= pi_lo) || !(pi_lo >= 0.0)) {
            throw std::invalid_argument("PensionFamily: need levels >= 1 and 0 <= pi_lo <= pi_hi");
        }
        if (pi_hi == pi_lo) {
            levels = 1;
        }
        PensionSolverOptions o = opt;
        o.store_every = g.n_time; // only the t = 0 slice is used
        for (std::size_t l = 0; l < levels; ++l) {
            ModelParams q = p;
            q.pi = levels == 1 ? pi_lo : pi_lo + (pi_hi - pi_lo) * static_cast<double>(l) /
                                                     static_cast<double>(levels - 1);
            ValuePolicySolution sol = solve(q, g, o);
            pensions_.push_back(q.pi);
            values_.push_back(sol.initial_value());
            diagnostics_.merge(sol.diagnostics);
        }
    }

    const Grid2D& grid() const { return grid_; }
    const std::vector<double>& pensions() const { return pensions_; }
    const Field2D& value_slice(std::size_t level) const { return values_.at(level); }
    const SchemeDiagnostics& diagnostics() const { return diagnostics_; }

    /// V(0, w, cbar) at pension `pi`, which must lie in [pi_0, pi_L].
    double value(double w, double cbar, double pi, ClampCounter* counter = nullptr) const
    {
        const std::size_t n = pensions_.size();
        if (n == 1) {
            if (std::abs(pi - pensions_[0]) > 1e-12 * std::max(1.0, pi)) {
                throw std::invalid_argument("PensionFamily: single level family queried at another pension");
            }
            return bilinear_interpolate(values_[0], grid_.w, grid_.c, w, cbar, counter);
        }
        const double lo = pensions_.front();
        const double hi = pensions_.back();
        const double tol = 1e-12 * std::max(1.0, hi);
        if (pi < lo - tol || pi > hi + tol) {
            throw std::out_of_range("PensionFamily: pension " + std::to_string(pi) + " outside the solved range");
        }
        const double h = (hi - lo) / static_cast<double>(n - 1);
        const double s = std::clamp((pi - lo) / h, 0.0, static_cast<double>(n - 1));
        // four-point stencil (fewer when the family is small)
        const std::size_t width = std::min<std::size_t>(4, n);
        auto first = static_cast<std::ptrdiff_t>(std::floor(s)) - static_cast<std::ptrdiff_t>(width / 2 - 1);
        first = std::clamp<std::ptrdiff_t>(first, 0, static_cast<std::ptrdiff_t>(n - width));
        double out = 0.0;
        for (std::size_t a = 0; a < width; ++a) {
            const std::size_t ia = static_cast<std::size_t>(first) + a;
            double basis = 1.0;
            for (std::size_t b = 0; b < width; ++b) {
                const std::size_t ib = static_cast<std::size_t>(first) + b;
                if (ib != ia) {
                    basis *= (s - static_cast<double>(ib)) / (static_cast<double>(ia) - static_cast<double>(ib));
                }
            }
            out += basis * bilinear_interpolate(values_[ia], grid_.w, grid_.c, w, cbar, counter);
        }
        return out;
    }

private:
    Grid2D grid_;
    std::vector<double> pensions_;
    std::vector<Field2D> values_;
    SchemeDiagnostics diagnostics_;
};

struct DeltaVPoint {
    double w;
    double delta_w;
    double delta_v;
};

struct AnnuitizeResult {
    ModelParams params;
    DeltaWSpec rule;
    double annuity_factor = 0.0;
    double cbar_requested = 0.0;
    double cbar = 0.0; // grid node actually used
    std::vector<DeltaVPoint> curve;
    std::optional<double> crossing; // refined wealth where dV first changes sign
    bool multiple_crossings = false;
    std::size_t skipped = 0; // probes with dw > w
};

/// Solves the pension family needed for the curve over `probes` and
/// evaluates dV at each probe.
class AnnuityAnalysis {
public:
    AnnuityAnalysis(const ModelParams& p, const Grid2D& g, DeltaWSpec rule, double max_wealth,
                    std::size_t pension_levels = 6, const PensionSolverOptions& opt = {})
        : params_(p), rule_(rule), a_x_(annuity_factor(p)),
          family_(p, g, p.pi, p.pi + max_delta_w(rule, max_wealth) / a_x_,
                  rule.rule == DeltaWRule::fixed ? 2 : pension_levels, opt)
    {
    }

    /// Uses an already solved family; it must start at p.pi and cover every
    /// pension queried.
    AnnuityAnalysis(const ModelParams& p, DeltaWSpec rule, PensionFamily family)
        : params_(p), rule_(rule), a_x_(annuity_factor(p)), family_(std::move(family))
    {
        if (std::abs(family_.pensions().front() - p.pi) > 1e-12 * std::max(1.0, p.pi)) {
            throw std::invalid_argument("AnnuityAnalysis: family must start at the base pension");
        }
    }

    double annuity_factor_used() const { return a_x_; }
    const PensionFamily& family() const { return family_; }

    double delta_v(double w, double cbar) const
    {
        const double dw = rule_.at(w);
        if (dw > w) {
            throw std::invalid_argument("delta_v: annuitized amount exceeds wealth");
        }
        return family_.value(w, cbar, params_.pi) - family_.value(w - dw, cbar, params_.pi + dw / a_x_);
    }

    /// Nearest habit node to `cbar`.
    double snap_habit(double cbar) const
    {
        const Grid1D& c = family_.grid().c;
        const double q = std::clamp(cbar, c.front(), c.back());
        const auto [k, s] = c.locate(q);
        return s < 0.5 ? c[k] : c[k + 1];
    }

    AnnuitizeResult curve(double cbar, const std::vector<double>& probes) const
    {
        AnnuitizeResult r;
        r.params = params_;
        r.rule = rule_;
        r.annuity_factor = a_x_;
        r.cbar_requested = cbar;
        r.cbar = snap_habit(cbar);
        for (double w : probes) {
            const double dw = rule_.at(w);
            if (dw > w) {
                ++r.skipped;
                continue;
            }
            r.curve.push_back({w, dw, delta_v(w, r.cbar)});
        }
        // first sign change scanning up in wealth
        std::size_t changes = 0;
        for (std::size_t i = 1; i < r.curve.size(); ++i) {
            const double a = r.curve[i - 1].delta_v;
            const double b = r.curve[i].delta_v;
            if ((a < 0.0) != (b < 0.0)) {
                ++changes;
                if (!r.crossing) {
                    r.crossing = refine_crossing(r.curve[i - 1].w, r.curve[i].w, r.cbar);
                }
            }
        }
        r.multiple_crossings = changes > 1;
        return r;
    }

    /// Bisection of dV between two bracketing wealth levels.
    double refine_crossing(double lo, double hi, double cbar) const
    {
        double f_lo = delta_v(lo, cbar);
        const double scale = std::abs(family_.value(hi, cbar, params_.pi));
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = delta_v(mid, cbar);
            if (std::abs(f) <= 1e-6 * scale || hi - lo < 1e-12 * std::max(1.0, hi)) {
                return mid;
            }
            if ((f < 0.0) == (f_lo < 0.0)) {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

private:
    static double max_delta_w(const DeltaWSpec& rule, double max_wealth)
    {
        if (!(max_wealth > 0.0)) {
            throw std::invalid_argument("AnnuityAnalysis: max_wealth must be > 0");
        }
        return rule.rule == DeltaWRule::fixed ? rule.amount : rule.at(max_wealth);
    }

    ModelParams params_;
    DeltaWSpec rule_;
    double a_x_;
    PensionFamily family_;
};

struct AewResult {
    std::optional<double> w_hat;
    double target = 0.0;   // V(0, 0, cbar, pi + w / a_x)
    double mismatch = 0.0; // V(0, w_hat, cbar, pi) - target
    std::string note;
};

/// Annuity-equivalent wealth of `w`; the family must cover pi + w / a_x.
inline AewResult aew(const PensionFamily& family, double a_x, double pi, double cbar, double w)
{
    AewResult r;
    r.target = family.value(0.0, cbar, pi + w / a_x);
    const Grid1D& axis = family.grid().w;
    auto base = [&](double x) { return family.value(x, cbar, pi); };
    // monotone slice check on the nodes
    double prev = base(axis[0]);
    for (std::size_t j = 1; j < axis.size(); ++j) {
        const double v = base(axis[j]);
        if (v < prev - 1e-10 * std::abs(prev)) {
            r.note = "value slice not increasing in wealth";
            return r;
        }
        prev = v;
    }
    double lo = axis.front();
    double hi = axis.back();
    if (r.target < base(lo) || r.target > base(hi)) {
        r.note = "target value outside the wealth range of the grid";
        return r;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (base(mid) < r.target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r.w_hat = 0.5 * (lo + hi);
    r.mismatch = base(*r.w_hat) - r.target;
    return r;
}

} // namespace habit_hjb

#endif // HABIT_HJB_ANNUITY_HPP
