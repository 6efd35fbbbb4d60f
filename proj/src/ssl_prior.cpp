#include <bham/ssl_prior.hpp>
#include <bham/errors.hpp>

#include <algorithm>
#include <cmath>

namespace bham {

namespace {

constexpr double theta_floor = 1e-6;

void check_theta(double theta)
{
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0, 1)");
}

// log(exp(a) + exp(b))
double log_add(double a, double b)
{
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// 1 / (1 + exp(-x)) without overflow.
double logistic(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

void SSLConfig::validate_allow_equal_scales() const
{
    if (!(s0 > 0.0) || !(s1 > 0.0) || s0 > s1) {
        throw DomainError("spike/slab scales must satisfy 0 < s0 <= s1");
    }
    if (!(a >= 1.0) || !(b >= 1.0)) throw DomainError("Beta hyperparameters must be >= 1");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (max_em_iter < 1) throw DomainError("max_em_iter must be at least 1");
}

void SSLConfig::validate() const
{
    validate_allow_equal_scales();
    if (!(s0 < s1)) throw DomainError("spike scale s0 must be smaller than slab scale s1");
}

double de_density(double beta, double s)
{
    if (!(s > 0.0)) throw DomainError("double-exponential scale must be positive");
    return std::exp(-std::abs(beta) / s) / (2.0 * s);
}

double log_de_density(double beta, double s)
{
    if (!(s > 0.0)) throw DomainError("double-exponential scale must be positive");
    return -std::abs(beta) / s - std::log(2.0 * s);
}

double e_step_linear(double beta, double theta, const SSLConfig& cfg)
{
    check_theta(theta);
    const double l1 = std::log(theta) + log_de_density(beta, cfg.s1);
    const double l0 = std::log1p(-theta) + log_de_density(beta, cfg.s0);
    return logistic(l1 - l0);
}

double nonlinear_inclusion(double p_lin, std::span<const double> betas, double theta,
                           const SSLConfig& cfg)
{
    check_theta(theta);
    if (betas.empty()) throw DomainError("nonlinear group must have at least one coefficient");
    if (p_lin <= 0.0) return 0.0;
    double lm1 = 0.0, lm0 = 0.0;
    for (double b : betas) {
        lm1 += log_de_density(b, cfg.s1);
        lm0 += log_de_density(b, cfg.s0);
    }
    const double cond = logistic((std::log(theta) + lm1) - (std::log1p(-theta) + lm0));
    return std::min(p_lin, p_lin * cond);
}

GroupInclusion e_step_group(double beta_lin, std::span<const double> betas, double theta,
                            const SSLConfig& cfg)
{
    check_theta(theta);
    if (betas.empty()) throw DomainError("nonlinear group must have at least one coefficient");
    double lm1 = 0.0, lm0 = 0.0;
    for (double b : betas) {
        lm1 += log_de_density(b, cfg.s1);
        lm0 += log_de_density(b, cfg.s0);
    }
    const double log_marginal_on = log_add(std::log(theta) + lm1, std::log1p(-theta) + lm0);
    const double on = std::log(theta) + log_de_density(beta_lin, cfg.s1) + log_marginal_on;
    const double off = std::log1p(-theta) + log_de_density(beta_lin, cfg.s0) + lm0;
    const double p_lin = logistic(on - off);
    return {p_lin, nonlinear_inclusion(p_lin, betas, theta, cfg)};
}

double update_theta(double p_lin, double p_non, const SSLConfig& cfg)
{
    const double theta = (cfg.a - 1.0 + p_lin + p_non) / (cfg.a + cfg.b - 2.0 + 1.0 + p_lin);
    return std::clamp(theta, theta_floor, 1.0 - theta_floor);
}

double update_theta_linear(double p_lin, const SSLConfig& cfg)
{
    const double theta = (cfg.a - 1.0 + p_lin) / (cfg.a + cfg.b - 2.0 + 1.0);
    return std::clamp(theta, theta_floor, 1.0 - theta_floor);
}

double penalty_scale(double p, const SSLConfig& cfg)
{
    return p / cfg.s1 + (1.0 - p) / cfg.s0;
}

} // namespace bham
