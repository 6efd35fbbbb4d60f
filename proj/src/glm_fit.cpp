#include <bham/glm_fit.hpp>
#include <bham/errors.hpp>

#include "em_driver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bham {

namespace {

class GlmWorkingModel final : public detail::EmModel
{
public:
    GlmWorkingModel(Family family, std::span<const double> y, std::optional<double> dispersion)
        : family_(family), y_(y), fixed_(dispersion.has_value())
    {
        if (family_ == Family::gaussian) {
            if (fixed_) {
                phi_ = *dispersion;
            } else {
                const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
                double ss = 0.0;
                for (double v : y) ss += (v - mean) * (v - mean);
                phi_ = std::max(ss / y.size(), min_dispersion);
            }
        }
    }

    double neg_log_likelihood(const Eigen::VectorXd& eta) const override
    {
        return -log_likelihood(family_, y_, std::span<const double>(eta.data(), eta.size()), phi_);
    }

    void working(const Eigen::VectorXd& eta, Eigen::VectorXd& w, Eigen::VectorXd& wr) const override
    {
        auto q = working_quantities(family_, y_, eta, phi_);
        w = std::move(q.w);
        wr = std::move(q.wr);
    }

    bool has_intercept() const override { return true; }

    double deviance(const Eigen::VectorXd& eta) const override
    {
        std::vector<double> mu(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = inverse_link(family_, eta[i]);
        return bham::deviance(family_, y_, mu);
    }

    void update_dispersion(const Eigen::VectorXd& eta) override
    {
        if (family_ != Family::gaussian || fixed_) return;
        double rss = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) rss += (y_[i] - eta[i]) * (y_[i] - eta[i]);
        phi_ = std::max(rss / static_cast<double>(eta.size()), min_dispersion);
    }

    double dispersion() const override { return phi_; }

private:
    static constexpr double min_dispersion = 1e-10;
    Family family_;
    std::span<const double> y_;
    bool fixed_;
    double phi_ = 1.0;
};

double null_intercept(Family family, std::span<const double> y, double offset)
{
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    switch (family) {
        case Family::gaussian: return mean - offset;
        case Family::binomial: return link(family, mean) - offset;
        case Family::poisson: return std::log(std::max(mean, 1e-10)) - offset;
        case Family::cox: break;
    }
    return 0.0;
}

} // namespace

FittedModel fit(const Eigen::MatrixXd& design, std::span<const double> y, Family family,
                const GroupStructure& groups, const SSLConfig& cfg, const FitOptions& opts)
{
    if (!is_glm(family)) throw DomainError("fit(): use fit_cox for survival outcomes");
    if (static_cast<Eigen::Index>(y.size()) != design.rows()) {
        throw DomainError("design has " + std::to_string(design.rows()) + " rows but y has "
                          + std::to_string(y.size()));
    }
    if (y.empty()) throw DomainError("fit(): no observations");
    if (!design.allFinite()) throw SchemaError("design matrix contains non-finite values");
    validate_response(family, y);
    if (opts.fixed_dispersion && !(*opts.fixed_dispersion > 0.0)) {
        throw DomainError("fixed dispersion must be positive");
    }

    GlmWorkingModel model(family, y, opts.fixed_dispersion);
    return detail::run_em(model, design, family, groups, cfg, opts,
                          null_intercept(family, y, opts.offset));
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& newx, PredictType type,
                        double offset)
{
    if (newx.cols() != model.coefficients.size()) {
        throw SchemaError("new design has " + std::to_string(newx.cols())
                          + " columns; the model expects "
                          + std::to_string(model.coefficients.size()));
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(newx.rows(), offset + model.intercept);
    for (Eigen::Index j = 0; j < newx.cols(); ++j) {
        const double b = model.coefficients[j];
        if (b != 0.0) eta.noalias() += b * newx.col(j);
    }
    if (type == PredictType::link) return eta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = inverse_link(model.family, eta[i]);
    return eta;
}

} // namespace bham
