#pragma once
#include <bham/model.hpp>

#include <span>
#include <vector>

namespace bham {

struct SurvivalResponse
{
    std::vector<double> time;
    std::vector<double> status;   // 1 = event, 0 = censored

    /// Lengths equal, times positive and finite, status in {0,1}, at least one event.
    void validate() const;
    std::size_t size() const noexcept { return time.size(); }
};

/// Breslow log partial likelihood at linear predictor eta.
double cox_log_partial_likelihood(const SurvivalResponse& resp, const Eigen::VectorXd& eta);

/// -2 * log partial likelihood.
double cox_deviance(const SurvivalResponse& resp, const Eigen::VectorXd& eta);

/// Gradient of the log partial likelihood with respect to beta at eta = X beta.
Eigen::VectorXd cox_gradient(const Eigen::MatrixXd& x, const SurvivalResponse& resp,
                             const Eigen::VectorXd& beta);

/// Additive Cox model under the same prior and EM scheme as fit(); the
/// M-step runs coordinate descent on a diagonal quadratic approximation
/// of the partial likelihood in eta, with step-halving.
FittedModel fit_cox(const Eigen::MatrixXd& design, const SurvivalResponse& resp,
                    const GroupStructure& groups, const SSLConfig& cfg,
                    const FitOptions& opts = {});

/// Harrell's concordance: over pairs whose earlier time is an event, the
/// share where the earlier subject has the larger risk score (ties 0.5).
double c_index(std::span<const double> eta, const SurvivalResponse& resp);

} // namespace bham
