#pragma once
#include <bham/data_frame.hpp>
#include <bham/family.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace bham {

/// Additive test design: x_ij ~ N(0, 1) independently and
///   eta = 5 sin(2 pi x1) - 4 cos(2 pi x2 - 0.5) + 6 (x3 - 0.5) - 5 (x4^2 - 0.3);
/// predictors x5..xp carry no signal.
struct SimOutput
{
    Eigen::MatrixXd x;          // n x p
    std::vector<double> y;
    std::vector<double> eta;
    Family family = Family::binomial;

    /// Columns x1..xp then y.
    DataFrame data() const;
};

/// Contribution of signal predictor j (1..4) at value v; 0 for j > 4.
double sim_bai_component(int j, double v);

/// Gaussian: y = eta + N(0,1). Binomial: y ~ Bernoulli(expit(eta)).
/// Poisson: y ~ Poisson(exp(clip(eta, -30, 30))). Deterministic in seed.
SimOutput sim_bai(int n, int p, Family family, std::uint64_t seed);

} // namespace bham
