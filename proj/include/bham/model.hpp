#pragma once
#include <bham/design.hpp>
#include <bham/family.hpp>
#include <bham/ssl_prior.hpp>

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace bham {

struct EmIterationInfo
{
    int iteration;                                  // 0 = initial state
    const std::vector<InclusionState>& inclusion;   // groups first, then parametric columns
    const Eigen::VectorXd& coefficients;
};

struct FitOptions
{
    double inner_tol = 1e-7;
    int max_irls_iter = 100;
    bool active_set = true;
    double offset = 0.0;
    /// Hold every inclusion probability at this value (no E-step): a plain
    /// L1 fit with lambda = penalty_scale(p).
    std::optional<double> fixed_inclusion;
    /// Gaussian only: use this dispersion instead of re-estimating RSS/n.
    std::optional<double> fixed_dispersion;
    /// Called after every E-step (and once for the initial state).
    std::function<void(const EmIterationInfo&)> on_iteration;
    /// Called with the penalized objective after every accepted M-step IRLS step.
    std::function<void(double)> on_m_step_objective;
};

struct FittedModel
{
    Family family = Family::gaussian;
    SSLConfig config;
    GroupStructure groups;
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd penalties;                 // lambda used in the final M-step
    std::vector<InclusionState> inclusion;     // groups first, then parametric columns
    int n_iter = 0;
    bool converged = false;
    double final_deviance = 0.0;
    double objective = 0.0;                    // negative expected log joint posterior
    double dispersion = 1.0;                   // Gaussian only
    double offset = 0.0;
};

enum class PredictType { link, response };

/// link: offset + intercept + newx * coefficients; response: inverse link
/// (exp of the link for Cox, i.e. the relative risk).
Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& newx,
                        PredictType type = PredictType::link, double offset = 0.0);

} // namespace bham
