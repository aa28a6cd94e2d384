#ifndef HABIT_HJB_MODEL_HPP
#define HABIT_HJB_MODEL_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace habit_hjb {

/// Market, preference, mortality and pension constants of the retirement model.
///
/// Rates are per year, ages and horizon in years, pension in wealth units per
/// year. `retire_age` is the age x at which the planning problem starts; the
/// horizon covers ages [x, x + horizon].
struct ModelParams {
    double r = 0.02;
    double mu = 0.08;
    double sigma = 0.16;
    double theta = 0.6;
    double gamma = 3.0;
    double rho = 0.02;
    double eta = 0.1;
    double pi = 1.0;
    double retire_age = 65.0;
    double gompertz_m = 89.335;
    double gompertz_b = 9.5;
    double horizon = 55.0;

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const
    {
        auto require = [](bool ok, const char* field, const char* what) {
            if (!ok) {
                throw std::invalid_argument(std::string("model.") + field + ": " + what);
            }
        };
        require(std::isfinite(r), "r", "must be finite");
        require(std::isfinite(mu), "mu", "must be finite");
        require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be > 0");
        require(theta >= 0.0 && theta <= 1.0, "theta", "must lie in [0, 1]");
        require(std::isfinite(gamma) && gamma > 0.0, "gamma", "must be > 0");
        require(gamma != 1.0, "gamma", "must differ from 1");
        require(std::isfinite(rho), "rho", "must be finite");
        require(std::isfinite(eta) && eta >= 0.0, "eta", "must be >= 0");
        require(std::isfinite(pi) && pi >= 0.0, "pi", "must be >= 0");
        require(std::isfinite(retire_age), "retire_age", "must be finite");
        require(std::isfinite(gompertz_m), "gompertz_m", "must be finite");
        require(std::isfinite(gompertz_b) && gompertz_b > 0.0, "gompertz_b", "must be > 0");
        require(std::isfinite(horizon) && horizon > 0.0, "horizon", "must be > 0");
    }

    /// Drift rate of wealth from investment, theta*(mu - r) + r.
    double portfolio_return() const { return theta * (mu - r) + r; }

    /// Half the instantaneous variance coefficient, 0.5*theta^2*sigma^2.
    double half_variance() const { return 0.5 * theta * theta * sigma * sigma; }
};

/// Gompertz force of mortality at `age`: (1/b) exp((age - m)/b).
inline double hazard_rate(const ModelParams& p, double age)
{
    return std::exp((age - p.gompertz_m) / p.gompertz_b) / p.gompertz_b;
}

/// Hazard at `s` years after retirement.
inline double hazard_after(const ModelParams& p, double s)
{
    return hazard_rate(p, p.retire_age + s);
}

/// Closed antiderivative of the hazard: int_0^s lambda_{x+q} dq.
inline double cumulative_hazard(const ModelParams& p, double s)
{
    const double b = p.gompertz_b;
    return std::exp((p.retire_age - p.gompertz_m) / b) * std::expm1(s / b);
}

/// Probability of surviving `s` years past retirement, s >= 0.
inline double survival_prob(const ModelParams& p, double s)
{
    if (!(s >= 0.0)) {
        throw std::invalid_argument("survival_prob: time since retirement must be >= 0");
    }
    return std::exp(-cumulative_hazard(p, s));
}

/// CRRA utility of the consumption-to-habit ratio q: q^(1-gamma)/(1-gamma).
inline double crra_utility(double q, double gamma)
{
    if (!(q > 0.0)) {
        throw std::invalid_argument("crra_utility: consumption ratio must be > 0");
    }
    return std::pow(q, 1.0 - gamma) / (1.0 - gamma);
}

/// u'(q) = q^(-gamma).
inline double crra_marginal(double q, double gamma)
{
    if (!(q > 0.0)) {
        throw std::invalid_argument("crra_marginal: consumption ratio must be > 0");
    }
    return std::pow(q, -gamma);
}

/// Price of one unit of continuous lifetime income bought at retirement age.
///
/// Integrates exp(-r t) * survival(t) over [0, inf) by adaptive Gauss-Kronrod.
/// The Gompertz tail decays double-exponentially so the integral always
/// converges; a large error estimate is reported as std::runtime_error.
inline double annuity_factor(const ModelParams& p)
{
    const double x0 = std::exp((p.retire_age - p.gompertz_m) / p.gompertz_b);
    auto integrand = [&](double t) {
        return std::exp(-p.r * t - x0 * std::expm1(t / p.gompertz_b));
    };
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &error);
    if (!std::isfinite(value) || error > 1e-9 * std::abs(value)) {
        throw std::runtime_error("annuity_factor: quadrature failed to converge");
    }
    return value;
}

} // namespace habit_hjb

#endif // HABIT_HJB_MODEL_HPP
