#include <bham/simulation.hpp>
#include <bham/errors.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace bham {

double sim_bai_component(int j, double v)
{
    constexpr double two_pi = 2.0 * M_PI;
    switch (j) {
        case 1: return 5.0 * std::sin(two_pi * v);
        case 2: return -4.0 * std::cos(two_pi * v - 0.5);
        case 3: return 6.0 * (v - 0.5);
        case 4: return -5.0 * (v * v - 0.3);
        default: return 0.0;
    }
}

SimOutput sim_bai(int n, int p, Family family, std::uint64_t seed)
{
    if (p < 4) throw DomainError("sim_bai needs p >= 4 predictors");
    if (n < 1) throw DomainError("sim_bai needs n >= 1");
    if (!is_glm(family)) throw DomainError("sim_bai simulates GLM outcomes only");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SimOutput out;
    out.family = family;
    out.x.resize(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) out.x(i, j) = normal(rng);
    }
    out.eta.resize(n);
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        double eta = 0.0;
        for (int j = 1; j <= 4; ++j) eta += sim_bai_component(j, out.x(i, j - 1));
        out.eta[i] = eta;
    }
    for (int i = 0; i < n; ++i) {
        const double eta = out.eta[i];
        switch (family) {
            case Family::gaussian: out.y[i] = eta + normal(rng); break;
            case Family::binomial: {
                std::bernoulli_distribution coin(inverse_link(Family::binomial, eta));
                out.y[i] = coin(rng) ? 1.0 : 0.0;
                break;
            }
            case Family::poisson: {
                std::poisson_distribution<long long> pois(std::exp(std::clamp(eta, -30.0, 30.0)));
                out.y[i] = static_cast<double>(pois(rng));
                break;
            }
            case Family::cox: break;
        }
    }
    return out;
}

DataFrame SimOutput::data() const
{
    DataFrame df;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> col(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, j);
        df.add_column("x" + std::to_string(j + 1), std::move(col));
    }
    df.add_column("y", y);
    return df;
}

} // namespace bham
