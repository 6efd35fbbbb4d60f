#pragma once
#include <Eigen/Dense>

#include <span>
#include <string>

namespace bham {

/// Outcome model. The GLM kinds carry a fixed canonical link
/// (identity, logit, log); cox is the proportional hazards model.
enum class Family { gaussian, binomial, poisson, cox };

const char* to_string(Family f) noexcept;
Family family_from_string(const std::string& s);

inline bool is_glm(Family f) noexcept { return f != Family::cox; }

/// Throws SchemaError for non-finite values, non-binary binomial
/// responses or negative/non-integer Poisson counts.
void validate_response(Family f, std::span<const double> y);

double inverse_link(Family f, double eta);
double link(Family f, double mu);

/// Mean-domain clipping bound used for binomial logs.
inline constexpr double binomial_mu_clip = 1e-10;
/// Linear predictors are clipped to |eta| <= this before the inverse
/// link in IRLS (binomial and Poisson).
inline constexpr double eta_clip = 30.0;
inline constexpr double irls_weight_floor = 1e-6;

/// Saturated-model deviance; Gaussian gives the residual sum of squares.
double deviance(Family f, std::span<const double> y, std::span<const double> mu);

/// Log-likelihood up to terms that do not depend on eta. The Gaussian
/// version includes the dispersion normalizer.
double log_likelihood(Family f, std::span<const double> y, std::span<const double> eta,
                      double dispersion = 1.0);

/// IRLS quantities at eta: weights w and weighted working residuals
/// w (z - eta). For canonical links w (z - eta) = (y - mu) / dispersion,
/// which is the gradient of log_likelihood with respect to eta.
struct WorkingQuantities
{
    Eigen::VectorXd w;
    Eigen::VectorXd wr;
};

WorkingQuantities working_quantities(Family f, std::span<const double> y,
                                     const Eigen::VectorXd& eta, double dispersion = 1.0);

/// Gradient of log_likelihood with respect to (intercept, beta) at
/// eta = intercept + X beta, assembled from the IRLS working residuals.
Eigen::VectorXd loglik_gradient(Family f, const Eigen::MatrixXd& x, std::span<const double> y,
                                double intercept, const Eigen::VectorXd& beta,
                                double dispersion = 1.0);

} // namespace bham
