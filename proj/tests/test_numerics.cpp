#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <habit_hjb/numerics.hpp>

using namespace habit_hjb;

namespace {

// Gaussian elimination with partial pivoting on the dense matrix.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) {
                piv = r;
            }
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    return x;
}

std::vector<std::vector<double>> dense_of(const TridiagonalSystem& s)
{
    const std::size_t n = s.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        a[i][i] = s.diag[i];
        if (i > 0) {
            a[i][i - 1] = s.lower[i];
        }
        if (i + 1 < n) {
            a[i][i + 1] = s.upper[i];
        }
    }
    return a;
}

TridiagonalSystem random_dominant(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TridiagonalSystem s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.lower[i] = i > 0 ? u(rng) : 0.0;
        s.upper[i] = i + 1 < n ? u(rng) : 0.0;
        s.diag[i] = std::abs(s.lower[i]) + std::abs(s.upper[i]) + 0.1 + std::abs(u(rng));
        s.rhs[i] = 10.0 * u(rng);
    }
    return s;
}

} // namespace

TEST(Tridiagonal, ThreeByThreeByHand)
{
    TridiagonalSystem s(3);
    s.diag = {4, 4, 4};
    s.lower = {0, 1, 1};
    s.upper = {1, 1, 0};
    s.rhs = {5, 6, 5};
    const auto x = solve_tridiagonal(s);
    for (double v : x) {
        EXPECT_NEAR(v, 1.0, 1e-14);
    }
}

TEST(Tridiagonal, MatchesDenseElimination)
{
    std::mt19937_64 rng(7);
    for (std::size_t n : {3u, 8u}) {
        const auto s = random_dominant(n, rng);
        const auto x = solve_tridiagonal(s);
        const auto ref = dense_solve(dense_of(s), s.rhs);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(x[i], ref[i], 1e-12 * std::max(1.0, std::abs(ref[i])));
        }
    }
}

TEST(Tridiagonal, ResidualOnRandomSystems)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_dominant(50, rng);
        const auto x = solve_tridiagonal(s);
        double worst = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            double ax = s.diag[i] * x[i];
            if (i > 0) {
                ax += s.lower[i] * x[i - 1];
            }
            if (i + 1 < 50) {
                ax += s.upper[i] * x[i + 1];
            }
            worst = std::max(worst, std::abs(ax - s.rhs[i]));
        }
        EXPECT_LE(worst, 1e-10);
    }
}

TEST(Tridiagonal, ZeroPivotIsReported)
{
    TridiagonalSystem s(3);
    s.diag = {1, 1, 1};
    s.lower = {0, 1, 0};
    s.upper = {1, 0, 0};
    try {
        solve_tridiagonal(s);
        FAIL() << "expected SingularSystemError";
    } catch (const SingularSystemError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(Tridiagonal, LengthMismatchRejected)
{
    TridiagonalSystem s(3);
    s.rhs.resize(2);
    EXPECT_THROW(solve_tridiagonal(s), std::invalid_argument);
}

TEST(Upwind, SplitAlgebra)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000000; ++i) {
        const double a = i == 0 ? 0.0 : u(rng);
        const auto [p, m] = upwind_split(a);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(m, 0.0);
        ASSERT_EQ(p + m, a);
        ASSERT_EQ(p * m, 0.0);
        ASSERT_EQ(p - m, std::abs(a));
    }
}

TEST(Grid, UniformAndLocate)
{
    const Grid1D g = Grid1D::uniform(0.0, 10.0, 11);
    EXPECT_EQ(g.size(), 11u);
    EXPECT_DOUBLE_EQ(g.step(), 1.0);
    EXPECT_DOUBLE_EQ(g.back(), 10.0);
    auto [i, s] = g.locate(3.25);
    EXPECT_EQ(i, 3u);
    EXPECT_NEAR(s, 0.25, 1e-14);
    std::tie(i, s) = g.locate(10.0);
    EXPECT_EQ(i, 9u);
    EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(Interpolation, BilinearIsExactOnBilinearFunctions)
{
    const Grid1D w = Grid1D::uniform(0.0, 4.0, 9);
    const Grid1D c = Grid1D::uniform(1.0, 3.0, 5);
    auto f = [](double x, double y) { return 2.0 + 0.5 * x - 1.5 * y + 0.25 * x * y; };
    Field2D field(w.size(), c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            field(j, k) = f(w[j], c[k]);
        }
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.0, 4.0), uy(1.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        EXPECT_NEAR(bilinear_interpolate(field, w, c, x, y), f(x, y), 1e-12);
    }
}

TEST(Interpolation, ClampingIsCounted)
{
    const Grid1D w = Grid1D::uniform(0.0, 1.0, 3);
    const Grid1D c = Grid1D::uniform(1.0, 2.0, 3);
    Field2D field(3, 3, 7.0);
    ClampCounter counter;
    EXPECT_DOUBLE_EQ(bilinear_interpolate(field, w, c, 5.0, 1.5, &counter), 7.0);
    EXPECT_DOUBLE_EQ(bilinear_interpolate(field, w, c, 0.5, 1.5, &counter), 7.0);
    EXPECT_EQ(counter.clamped, 1u);

    const std::vector<double> v = {0.0, 1.0, 4.0};
    EXPECT_DOUBLE_EQ(linear_interpolate(v, w, 0.75), 2.5);
    EXPECT_DOUBLE_EQ(linear_interpolate(v, w, -1.0, &counter), 0.0);
    EXPECT_EQ(counter.clamped, 2u);
}

TEST(Field, HabitMajorLayout)
{
    Field2D f(4, 3);
    f(2, 1) = 5.0;
    EXPECT_DOUBLE_EQ(f.data()[1 * 4 + 2], 5.0);
    EXPECT_DOUBLE_EQ(f.column(1)[2], 5.0);
    EXPECT_DOUBLE_EQ(f.max_abs(), 5.0);
}
