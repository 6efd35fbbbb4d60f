#pragma once
#include <bham/model.hpp>

#include <span>

namespace bham {

/// EM-coordinate descent fit of a generalized additive model under the
/// two-part spike-and-slab LASSO prior.
///
/// Starts from zero coefficients, the null-model intercept and
/// theta = p = 0.5. Each EM iteration updates the inclusion
/// probabilities and theta from the current coefficients, turns them into
/// per-coefficient L1 weights, and solves the weighted L1 problem by
/// penalized IRLS. Stops when the relative change of the negative
/// expected log joint posterior falls below cfg.tol.
FittedModel fit(const Eigen::MatrixXd& design, std::span<const double> y, Family family,
                const GroupStructure& groups, const SSLConfig& cfg,
                const FitOptions& opts = {});

inline FittedModel fit(const AdditiveDesign& design, std::span<const double> y, Family family,
                       const GroupStructure& groups, const SSLConfig& cfg,
                       const FitOptions& opts = {})
{
    return fit(design.matrix, y, family, groups, cfg, opts);
}

} // namespace bham
