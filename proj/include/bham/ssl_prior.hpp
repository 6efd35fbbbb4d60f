#pragma once
#include <span>

namespace bham {

/// Spike-and-slab LASSO hyperparameters and EM controls.
struct SSLConfig
{
    double s0 = 0.04;   // spike scale
    double s1 = 0.5;    // slab scale
    double a = 1.0;     // Beta(a, b) prior on theta
    double b = 1.0;
    int max_em_iter = 100;
    double tol = 1e-4;

    /// Throws DomainError unless 0 < s0 < s1, a >= 1, b >= 1, tol > 0, max_em_iter >= 1.
    void validate() const;
    /// Like validate() but allows s0 == s1 (the plain LASSO limit).
    void validate_allow_equal_scales() const;
};

/// Posterior expectations of one variable's indicators and its mixing
/// probability.
struct InclusionState
{
    double p_lin = 0.5;
    double p_non = 0.5;
    double theta = 0.5;
};

/// Laplace density exp(-|beta|/s) / (2s).
double de_density(double beta, double s);
double log_de_density(double beta, double s);

/// P(linear indicator = 1 | beta) for a coefficient with no companion
/// nonlinear group.
double e_step_linear(double beta, double theta, const SSLConfig& cfg);

/// P(nonlinear indicator = 1 | nonlinear coefficients) given that the
/// linear indicator is on with probability p_lin:
///   p_lin * theta m1 / (theta m1 + (1 - theta) m0),
/// with m1, m0 the slab/spike products taken in log space.
double nonlinear_inclusion(double p_lin, std::span<const double> betas, double theta,
                           const SSLConfig& cfg);

struct GroupInclusion
{
    double p_lin;
    double p_non;
};

/// Joint E-step for one smooth: the linear coefficient and the K_j
/// nonlinear coefficients together. Under the hierarchy the nonlinear
/// indicator is forced off when the linear one is, so
///   p_lin = theta f1(b) M / (theta f1(b) M + (1 - theta) f0(b) m0),
///   M     = theta m1 + (1 - theta) m0,
///   p_non = nonlinear_inclusion(p_lin, betas, theta).
/// p_non <= p_lin holds by construction.
GroupInclusion e_step_group(double beta_lin, std::span<const double> betas, double theta,
                            const SSLConfig& cfg);

/// Closed-form maximizer of the expected complete-data log posterior in
/// theta, clamped to [1e-6, 1 - 1e-6]. With a nonlinear part the
/// expected counts are (p_lin + p_non) successes out of (1 + p_lin)
/// trials, since the nonlinear indicator is only drawn when the linear
/// one is on.
double update_theta(double p_lin, double p_non, const SSLConfig& cfg);

/// Variant for variables without a nonlinear part (one Bernoulli draw).
double update_theta_linear(double p_lin, const SSLConfig& cfg);

/// Expected inverse scale p/s1 + (1-p)/s0: the adaptive L1 weight.
double penalty_scale(double p, const SSLConfig& cfg);

} // namespace bham
