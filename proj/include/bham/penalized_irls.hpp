#pragma once
#include <Eigen/Dense>

#include <functional>

namespace bham {

inline double soft_threshold(double z, double lambda)
{
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

/// Likelihood side of a penalized fit, seen through its local quadratic
/// approximation in the linear predictor.
class WorkingModel
{
public:
    virtual ~WorkingModel() = default;

    virtual double neg_log_likelihood(const Eigen::VectorXd& eta) const = 0;

    /// Weights w and weighted working residuals w (z - eta) at eta.
    virtual void working(const Eigen::VectorXd& eta, Eigen::VectorXd& w,
                         Eigen::VectorXd& wr) const = 0;

    virtual bool has_intercept() const = 0;
};

struct PenalizedSolveOptions
{
    double inner_tol = 1e-7;     // max absolute coefficient change
    int max_irls_iter = 100;
    int max_sweeps = 100000;
    bool active_set = true;
    /// Called with the penalized objective after every accepted IRLS step.
    std::function<void(double)> on_objective;
};

struct PenalizedSolveResult
{
    double objective = 0.0;      // neg log-likelihood + sum lambda_i |beta_i|
    int irls_iter = 0;
    int sweeps = 0;
    bool converged = false;
};

/// Minimizes neg_log_likelihood(offset + intercept + X beta) + sum_i lambda_i |beta_i|
/// by IRLS with soft-thresholding coordinate descent on each quadratic
/// approximation. The intercept is unpenalized (and held at zero when the
/// model has none). A step that would raise the objective is halved until
/// it does not. `intercept` and `beta` are warm starts and hold the
/// solution on return.
PenalizedSolveResult solve_penalized(const WorkingModel& model, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& lambda, double offset,
                                     double& intercept, Eigen::VectorXd& beta,
                                     const PenalizedSolveOptions& opts = {});

} // namespace bham
