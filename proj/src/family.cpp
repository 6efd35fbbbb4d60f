#include <bham/family.hpp>
#include <bham/errors.hpp>

#include <algorithm>
#include <cmath>

namespace bham {

namespace {

double softplus(double x)
{
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double expit(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

const char* to_string(Family f) noexcept
{
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::binomial: return "binomial";
        case Family::poisson: return "poisson";
        case Family::cox: return "cox";
    }
    return "?";
}

Family family_from_string(const std::string& s)
{
    if (s == "gaussian") return Family::gaussian;
    if (s == "binomial") return Family::binomial;
    if (s == "poisson") return Family::poisson;
    if (s == "cox") return Family::cox;
    throw ParseError("unknown family '" + s + "' (expected gaussian, binomial, poisson or cox)");
}

void validate_response(Family f, std::span<const double> y)
{
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double v = y[i];
        if (!std::isfinite(v)) {
            throw SchemaError("non-finite response at row " + std::to_string(i + 1));
        }
        if (f == Family::binomial && v != 0.0 && v != 1.0) {
            throw SchemaError("binomial response must be 0 or 1 (row " + std::to_string(i + 1)
                              + ")");
        }
        if (f == Family::poisson && (v < 0.0 || v != std::floor(v))) {
            throw SchemaError("Poisson response must be a non-negative integer (row "
                              + std::to_string(i + 1) + ")");
        }
    }
}

double inverse_link(Family f, double eta)
{
    switch (f) {
        case Family::gaussian: return eta;
        case Family::binomial: return expit(eta);
        case Family::poisson: return std::exp(std::clamp(eta, -eta_clip, eta_clip));
        case Family::cox: return std::exp(eta);
    }
    return eta;
}

double link(Family f, double mu)
{
    switch (f) {
        case Family::gaussian: return mu;
        case Family::binomial: {
            const double m = std::clamp(mu, binomial_mu_clip, 1.0 - binomial_mu_clip);
            return std::log(m / (1.0 - m));
        }
        case Family::poisson:
        case Family::cox: return std::log(mu);
    }
    return mu;
}

double deviance(Family f, std::span<const double> y, std::span<const double> mu)
{
    if (y.size() != mu.size()) throw DomainError("deviance: length mismatch");
    double dev = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        switch (f) {
            case Family::gaussian: dev += (y[i] - mu[i]) * (y[i] - mu[i]); break;
            case Family::binomial: {
                const double m = std::clamp(mu[i], binomial_mu_clip, 1.0 - binomial_mu_clip);
                dev += -2.0 * (y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m));
                break;
            }
            case Family::poisson: {
                const double m = std::max(mu[i], 1e-300);
                const double t = y[i] > 0 ? y[i] * std::log(y[i] / m) : 0.0;
                dev += 2.0 * (t - (y[i] - m));
                break;
            }
            case Family::cox:
                throw DomainError("deviance(): use cox_deviance for survival outcomes");
        }
    }
    return dev;
}

double log_likelihood(Family f, std::span<const double> y, std::span<const double> eta,
                      double dispersion)
{
    double ll = 0.0;
    const auto n = static_cast<double>(y.size());
    switch (f) {
        case Family::gaussian: {
            double rss = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) rss += (y[i] - eta[i]) * (y[i] - eta[i]);
            ll = -rss / (2.0 * dispersion) - 0.5 * n * std::log(2.0 * M_PI * dispersion);
            break;
        }
        case Family::binomial:
            for (std::size_t i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
            break;
        case Family::poisson:
            for (std::size_t i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - std::exp(eta[i]);
            break;
        case Family::cox:
            throw DomainError("log_likelihood(): use cox_log_partial_likelihood");
    }
    return ll;
}

WorkingQuantities working_quantities(Family f, std::span<const double> y,
                                     const Eigen::VectorXd& eta, double dispersion)
{
    const auto n = eta.size();
    WorkingQuantities q{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (f) {
            case Family::gaussian:
                q.w[i] = 1.0 / dispersion;
                q.wr[i] = (y[i] - eta[i]) / dispersion;
                break;
            case Family::binomial: {
                const double mu = expit(std::clamp(eta[i], -eta_clip, eta_clip));
                q.w[i] = std::max(mu * (1.0 - mu), irls_weight_floor);
                q.wr[i] = y[i] - mu;
                break;
            }
            case Family::poisson: {
                const double mu = std::exp(std::clamp(eta[i], -eta_clip, eta_clip));
                q.w[i] = std::max(mu, irls_weight_floor);
                q.wr[i] = y[i] - mu;
                break;
            }
            case Family::cox:
                throw DomainError("working_quantities(): cox uses its own working model");
        }
    }
    return q;
}

Eigen::VectorXd loglik_gradient(Family f, const Eigen::MatrixXd& x, std::span<const double> y,
                                double intercept, const Eigen::VectorXd& beta, double dispersion)
{
    Eigen::VectorXd eta = (x * beta).array() + intercept;
    const auto q = working_quantities(f, y, eta, dispersion);
    Eigen::VectorXd g(beta.size() + 1);
    g[0] = q.wr.sum();
    g.tail(beta.size()) = x.transpose() * q.wr;
    return g;
}

} // namespace bham
