#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <habit_hjb/model.hpp>

using namespace habit_hjb;

namespace {

// Upper incomplete gamma for a negative non-integer shape, lifted to a
// positive shape through Gamma(s, z) = (Gamma(s + 1, z) - z^s e^-z) / s.
double upper_gamma(double s, double z)
{
    if (s > 0.0) {
        return boost::math::tgamma(s, z);
    }
    return (upper_gamma(s + 1.0, z) - std::pow(z, s) * std::exp(-z)) / s;
}

// Gompertz annuity factor in closed form:
// b e^{x0} x0^{r b} Gamma(-r b, x0) with x0 = exp((x - m)/b).
double annuity_closed_form(const ModelParams& p)
{
    const double b = p.gompertz_b;
    const double x0 = std::exp((p.retire_age - p.gompertz_m) / b);
    return b * std::exp(x0) * std::pow(x0, p.r * b) * upper_gamma(-p.r * b, x0);
}

} // namespace

TEST(Model, DefaultsValidate)
{
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    p.theta = 1.5;
    try {
        p.validate();
        FAIL() << "expected a throw";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("theta"), std::string::npos);
    }
}

TEST(Model, HazardIsDerivativeOfCumulativeHazard)
{
    const ModelParams p;
    const double h = 1e-5;
    for (double s : {0.0 + h, 1.0, 10.0, 25.0, 40.0, 54.0}) {
        const double fd = (cumulative_hazard(p, s + h) - cumulative_hazard(p, s - h)) / (2 * h);
        EXPECT_NEAR(fd, hazard_after(p, s), 1e-6 * std::max(1.0, hazard_after(p, s))) << "s = " << s;
    }
}

TEST(Model, SurvivalSatisfiesItsOde)
{
    // d/ds S = -lambda S
    const ModelParams p;
    const double h = 1e-5;
    for (double s : {0.5, 5.0, 20.0, 35.0, 50.0}) {
        const double fd = (survival_prob(p, s + h) - survival_prob(p, s - h)) / (2 * h);
        EXPECT_NEAR(fd, -hazard_after(p, s) * survival_prob(p, s), 1e-6) << "s = " << s;
    }
    EXPECT_DOUBLE_EQ(survival_prob(p, 0.0), 1.0);
    EXPECT_THROW(survival_prob(p, -1.0), std::invalid_argument);
}

TEST(Model, GompertzModalAgeHasHazardOneOverB)
{
    const ModelParams p;
    EXPECT_NEAR(hazard_rate(p, p.gompertz_m), 1.0 / p.gompertz_b, 1e-15);
}

TEST(Model, UtilityMarginalIsDerivative)
{
    const double h = 1e-6;
    for (double gamma : {0.5, 2.0, 3.0, 5.0}) {
        for (double q : {0.3, 1.0, 2.5}) {
            const double fd = (crra_utility(q + h, gamma) - crra_utility(q - h, gamma)) / (2 * h);
            EXPECT_NEAR(fd, crra_marginal(q, gamma), 1e-6 * crra_marginal(q, gamma)) << gamma << " " << q;
        }
    }
    EXPECT_THROW(crra_utility(0.0, 3.0), std::invalid_argument);
    EXPECT_THROW(crra_marginal(-1.0, 3.0), std::invalid_argument);
}

TEST(Model, AnnuityFactorMatchesIncompleteGammaForm)
{
    ModelParams p;
    for (double r : {0.0001, 0.02, 0.05}) {
        for (double age : {55.0, 65.0, 75.0}) {
            p.r = r;
            p.retire_age = age;
            const double a = annuity_factor(p);
            const double ref = annuity_closed_form(p);
            EXPECT_NEAR(a, ref, 1e-6 * ref) << "r " << r << " age " << age;
        }
    }
}

TEST(Model, AnnuityFactorAtZeroRateIsLifeExpectancy)
{
    // with r = 0 the price is the expected remaining lifetime; compare with a
    // trapezoid sum of the survival curve
    ModelParams p;
    p.r = 0.0;
    double sum = 0.0;
    const double h = 1e-3;
    for (double s = 0.0; s < 80.0; s += h) {
        sum += 0.5 * h * (survival_prob(p, s) + survival_prob(p, s + h));
    }
    EXPECT_NEAR(annuity_factor(p), sum, 1e-6 * sum);
}
