#pragma once
#include <bham/model.hpp>
#include <bham/penalized_irls.hpp>

namespace bham::detail {

/// Working model plus the extra hooks the EM loop needs.
class EmModel : public WorkingModel
{
public:
    virtual double deviance(const Eigen::VectorXd& eta) const = 0;
    /// Re-estimates any nuisance scale from the current fit (Gaussian dispersion).
    virtual void update_dispersion(const Eigen::VectorXd&) {}
    virtual double dispersion() const { return 1.0; }
};

FittedModel run_em(EmModel& model, const Eigen::MatrixXd& x, Family family,
                   const GroupStructure& groups, const SSLConfig& cfg, const FitOptions& opts,
                   double initial_intercept);

} // namespace bham::detail
