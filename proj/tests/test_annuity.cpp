#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <habit_hjb/annuity.hpp>

using namespace habit_hjb;

namespace {

Grid2D small_grid(const ModelParams& p) { return Grid2D::make(60.0, 61, 0.5, 20.0, 14, p.horizon, 200); }

const PensionFamily& shared_family()
{
    static const PensionFamily family = [] {
        ModelParams p;
        return PensionFamily(p, small_grid(p), 1.0, 2.0, 4);
    }();
    return family;
}

} // namespace

TEST(Annuity, ZeroAmountGivesZeroDifference)
{
    ModelParams p;
    DeltaWSpec rule;
    rule.rule = DeltaWRule::fixed;
    rule.amount = 0.0;
    const AnnuityAnalysis an(p, small_grid(p), rule, 50.0);
    EXPECT_EQ(an.family().pensions().size(), 1u);
    for (double w : {1.0, 10.0, 40.0}) {
        EXPECT_EQ(an.delta_v(w, 5.0), 0.0);
    }
}

TEST(Annuity, MorePensionNeverHurts)
{
    const PensionFamily& f = shared_family();
    for (double w : {0.0, 1.0, 10.0, 50.0}) {
        for (double c : {1.0, 5.0, 15.0}) {
            double prev = f.value(w, c, 1.0);
            for (double pi = 1.1; pi <= 2.0 + 1e-12; pi += 0.1) {
                const double v = f.value(w, c, std::min(pi, 2.0));
                EXPECT_GE(v, prev - 1e-9 * std::abs(prev)) << "w " << w << " c " << c << " pi " << pi;
                prev = v;
            }
        }
    }
}

TEST(Annuity, FamilyReproducesSolvedLevels)
{
    const PensionFamily& f = shared_family();
    const Grid2D& g = f.grid();
    for (std::size_t l = 0; l < f.pensions().size(); ++l) {
        for (double w : {3.3, 27.0}) {
            EXPECT_NEAR(f.value(w, 4.2, f.pensions()[l]), bilinear_interpolate(f.value_slice(l), g.w, g.c, w, 4.2),
                        1e-12 * std::abs(f.value(w, 4.2, f.pensions()[l])));
        }
    }
    EXPECT_THROW(f.value(10.0, 5.0, 2.5), std::out_of_range);
}

TEST(Annuity, AewOfZeroIsZeroAndIncreasing)
{
    const PensionFamily& f = shared_family();
    const double a_x = annuity_factor(ModelParams{});
    const AewResult zero = aew(f, a_x, 1.0, 10.0, 0.0);
    ASSERT_TRUE(zero.w_hat.has_value());
    EXPECT_NEAR(*zero.w_hat, 0.0, 1e-9);

    double prev = 0.0;
    for (double w : {2.0, 5.0, 10.0, 16.0}) {
        const AewResult r = aew(f, a_x, 1.0, 10.0, w);
        ASSERT_TRUE(r.w_hat.has_value()) << r.note;
        EXPECT_GT(*r.w_hat, prev);
        EXPECT_LE(std::abs(r.mismatch), 1e-6 * std::abs(r.target));
        prev = *r.w_hat;
    }
}

TEST(Annuity, CrossingIsRefinedBetweenProbes)
{
    ModelParams p;
    const AnnuityAnalysis an(p, small_grid(p), DeltaWSpec{}, 50.0, 4);
    std::vector<double> probes;
    for (int i = 1; i <= 50; ++i) {
        probes.push_back(i);
    }
    const AnnuitizeResult r = an.curve(10.0, probes);
    EXPECT_EQ(r.curve.size(), 50u);
    EXPECT_EQ(r.skipped, 0u);
    EXPECT_NEAR(r.annuity_factor, annuity_factor(p), 1e-12);
    EXPECT_EQ(r.cbar, an.snap_habit(10.0));
    if (r.crossing) {
        const double scale = std::abs(an.family().value(*r.crossing, r.cbar, p.pi));
        EXPECT_LE(std::abs(an.delta_v(*r.crossing, r.cbar)), 1e-6 * scale + 1e-12);
        // the probes on either side disagree in sign
        const auto lo = static_cast<std::size_t>(std::floor(*r.crossing)) - 1;
        EXPECT_NE(r.curve[lo].delta_v < 0.0, r.curve[lo + 1].delta_v < 0.0);
    }
}

TEST(Annuity, FixedAmountSkipsSmallWealth)
{
    ModelParams p;
    DeltaWSpec rule;
    rule.rule = DeltaWRule::fixed;
    rule.amount = 5.0;
    const AnnuityAnalysis an(p, small_grid(p), rule, 50.0);
    EXPECT_EQ(an.family().pensions().size(), 2u);
    const AnnuitizeResult r = an.curve(5.0, {1.0, 3.0, 5.0, 20.0});
    EXPECT_EQ(r.skipped, 2u);
    EXPECT_EQ(r.curve.size(), 2u);
    EXPECT_THROW(an.delta_v(2.0, 5.0), std::invalid_argument);
}

TEST(Annuity, RuleAmounts)
{
    DeltaWSpec r;
    EXPECT_DOUBLE_EQ(r.at(30.0), 3.0);
    r.rule = DeltaWRule::full;
    EXPECT_DOUBLE_EQ(r.at(30.0), 30.0);
    r.rule = DeltaWRule::fixed;
    r.amount = 2.0;
    EXPECT_DOUBLE_EQ(r.at(30.0), 2.0);
    EXPECT_STREQ(rule_name(DeltaWRule::proportional), "proportional");
}
