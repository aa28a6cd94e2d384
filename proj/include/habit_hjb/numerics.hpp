#ifndef HABIT_HJB_NUMERICS_HPP
#define HABIT_HJB_NUMERICS_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace habit_hjb {

/// Uniform, strictly increasing set of nodes.
class Grid1D {
public:
    Grid1D() = default;

    static Grid1D uniform(double lo, double hi, std::size_t n_nodes)
    {
        if (n_nodes < 3) {
            throw std::invalid_argument("Grid1D: need at least 3 nodes");
        }
        if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw std::invalid_argument("Grid1D: need finite lo < hi");
        }
        Grid1D g;
        g.step_ = (hi - lo) / static_cast<double>(n_nodes - 1);
        g.nodes_.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            g.nodes_[i] = lo + g.step_ * static_cast<double>(i);
        }
        g.nodes_.back() = hi;
        return g;
    }

    std::size_t size() const { return nodes_.size(); }
    double step() const { return step_; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    std::span<const double> nodes() const { return nodes_; }

    /// Cell index i with nodes[i] <= x <= nodes[i+1] and the local weight of
    /// nodes[i+1]. `x` must already be clamped into [front, back].
    std::pair<std::size_t, double> locate(double x) const
    {
        double s = (x - nodes_.front()) / step_;
        auto i = static_cast<std::size_t>(std::floor(s));
        if (i >= nodes_.size() - 1) {
            i = nodes_.size() - 2;
        }
        return {i, s - static_cast<double>(i)};
    }

    bool contains(double x) const { return x >= nodes_.front() && x <= nodes_.back(); }

private:
    std::vector<double> nodes_;
    double step_ = 0.0;
};

/// Space-time grid of the pension problem. Time runs backward from the
/// horizon: step n sits at t_n = horizon - n*dt, n = 0..n_time.
struct Grid2D {
    Grid1D w;
    Grid1D c;
    std::size_t n_time = 0;
    double horizon = 0.0;

    double dt() const { return horizon / static_cast<double>(n_time); }
    double time_at(std::size_t n) const { return horizon - static_cast<double>(n) * dt(); }

    static Grid2D make(double w_max, std::size_t n_w, double c_min, double c_max, std::size_t n_c,
                       double horizon, std::size_t n_time)
    {
        if (!(c_min > 0.0)) {
            throw std::invalid_argument("Grid2D: habit axis must start above 0");
        }
        if (n_time == 0 || !(horizon > 0.0)) {
            throw std::invalid_argument("Grid2D: need n_time >= 1 and horizon > 0");
        }
        return Grid2D{Grid1D::uniform(0.0, w_max, n_w), Grid1D::uniform(c_min, c_max, n_c), n_time,
                      horizon};
    }

    bool same_space(const Grid2D& o) const
    {
        return w.size() == o.w.size() && c.size() == o.c.size() && w.back() == o.w.back() &&
               c.front() == o.c.front() && c.back() == o.c.back();
    }
};

/// Dense (w, c) array. Storage is habit-major so each wealth column of fixed
/// habit is contiguous: index (j, k) -> k*M + j.
class Field2D {
public:
    Field2D() = default;
    Field2D(std::size_t n_w, std::size_t n_c, double fill = 0.0)
        : n_w_(n_w), n_c_(n_c), data_(n_w * n_c, fill)
    {
    }

    double& operator()(std::size_t j, std::size_t k) { return data_[k * n_w_ + j]; }
    double operator()(std::size_t j, std::size_t k) const { return data_[k * n_w_ + j]; }

    std::span<double> column(std::size_t k) { return {data_.data() + k * n_w_, n_w_}; }
    std::span<const double> column(std::size_t k) const { return {data_.data() + k * n_w_, n_w_}; }

    std::size_t n_w() const { return n_w_; }
    std::size_t n_c() const { return n_c_; }
    bool empty() const { return data_.empty(); }
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : data_) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }

private:
    std::size_t n_w_ = 0;
    std::size_t n_c_ = 0;
    std::vector<double> data_;
};

struct UpwindSplit {
    double plus;  // >= 0
    double minus; // <= 0
};

/// (a + |a|)/2 and (a - |a|)/2.
inline UpwindSplit upwind_split(double a)
{
    const double abs_a = std::abs(a);
    return {0.5 * (a + abs_a), 0.5 * (a - abs_a)};
}

struct TridiagonalSystem {
    std::vector<double> lower; // lower[0] unused
    std::vector<double> diag;
    std::vector<double> upper; // upper[M-1] unused
    std::vector<double> rhs;

    explicit TridiagonalSystem(std::size_t m = 0) : lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0) {}
    std::size_t size() const { return diag.size(); }
};

class SingularSystemError : public std::runtime_error {
public:
    explicit SingularSystemError(std::size_t row)
        : std::runtime_error("tridiagonal solve: zero pivot at row " + std::to_string(row)), row_(row)
    {
    }
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Thomas algorithm. `x` receives the solution and may alias `rhs`; `scratch`
/// needs the system size.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x, std::span<double> scratch)
{
    const std::size_t m = diag.size();
    assert(lower.size() == m && upper.size() == m && rhs.size() == m && x.size() == m);
    assert(scratch.size() >= m);
    if (m == 0) {
        return;
    }
    double pivot = diag[0];
    if (pivot == 0.0) {
        throw SingularSystemError(0);
    }
    scratch[0] = upper[0] / pivot;
    x[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < m; ++i) {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot)) {
            throw SingularSystemError(i);
        }
        const double inv = 1.0 / pivot;
        scratch[i] = upper[i] * inv;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) * inv;
    }
    for (std::size_t i = m - 1; i-- > 0;) {
        x[i] -= scratch[i] * x[i + 1];
    }
}

inline std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys)
{
    const std::size_t m = sys.size();
    if (sys.lower.size() != m || sys.upper.size() != m || sys.rhs.size() != m) {
        throw std::invalid_argument("tridiagonal solve: coefficient vectors differ in length");
    }
    std::vector<double> x(m), scratch(m);
    solve_tridiagonal(sys.lower, sys.diag, sys.upper, sys.rhs, x, scratch);
    return x;
}

/// Counts interpolation queries that fell outside the grid rectangle.
struct ClampCounter {
    std::size_t clamped = 0;
};

/// Bilinear interpolation of a (w, c) field. Points outside the rectangle are
/// clamped onto its boundary.
inline double bilinear_interpolate(const Field2D& f, const Grid1D& w_axis, const Grid1D& c_axis, double w,
                                   double c, ClampCounter* counter = nullptr)
{
    if (f.empty()) {
        throw std::invalid_argument("bilinear_interpolate: empty surface");
    }
    assert(f.n_w() == w_axis.size() && f.n_c() == c_axis.size());
    const double wq = std::clamp(w, w_axis.front(), w_axis.back());
    const double cq = std::clamp(c, c_axis.front(), c_axis.back());
    if (counter != nullptr && (wq != w || cq != c)) {
        ++counter->clamped;
    }
    const auto [j, sw] = w_axis.locate(wq);
    const auto [k, sc] = c_axis.locate(cq);
    const double v00 = f(j, k);
    const double v10 = f(j + 1, k);
    const double v01 = f(j, k + 1);
    const double v11 = f(j + 1, k + 1);
    return (1.0 - sw) * ((1.0 - sc) * v00 + sc * v01) + sw * ((1.0 - sc) * v10 + sc * v11);
}

/// Linear interpolation on a 1-D grid with clamping.
inline double linear_interpolate(std::span<const double> values, const Grid1D& axis, double x,
                                 ClampCounter* counter = nullptr)
{
    assert(values.size() == axis.size());
    const double xq = std::clamp(x, axis.front(), axis.back());
    if (counter != nullptr && xq != x) {
        ++counter->clamped;
    }
    const auto [i, s] = axis.locate(xq);
    return (1.0 - s) * values[i] + s * values[i + 1];
}

} // namespace habit_hjb

#endif // HABIT_HJB_NUMERICS_HPP
