#include <bham/cox.hpp>
#include <bham/errors.hpp>

#include "em_driver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bham {

namespace {

// Risk-set bookkeeping from a single stable sort of the times.
class RiskSets
{
public:
    explicit RiskSets(const SurvivalResponse& resp) : status_(resp.status)
    {
        const auto n = resp.size();
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return resp.time[a] < resp.time[b];
        });
        for (std::size_t pos = 0; pos < n; ++pos) {
            if (pos == 0 || resp.time[order_[pos]] != resp.time[order_[pos - 1]]) {
                starts_.push_back(pos);
                events_.push_back(0.0);
            }
            events_.back() += resp.status[order_[pos]];
        }
        starts_.push_back(n);
    }

    std::size_t n_groups() const { return events_.size(); }

    /// Risk-set sums S_g of exp(eta - max eta) for each tie group.
    std::vector<double> risk_sums(const Eigen::VectorXd& eta, double shift) const
    {
        std::vector<double> s(n_groups());
        double acc = 0.0;
        for (std::size_t g = n_groups(); g-- > 0;) {
            for (std::size_t pos = starts_[g]; pos < starts_[g + 1]; ++pos) {
                acc += std::exp(eta[order_[pos]] - shift);
            }
            s[g] = acc;
        }
        return s;
    }

    double log_partial_likelihood(const Eigen::VectorXd& eta) const
    {
        const double shift = eta.size() ? eta.maxCoeff() : 0.0;
        const auto s = risk_sums(eta, shift);
        double ll = 0.0;
        for (std::size_t i = 0; i < status_.size(); ++i) {
            if (status_[i] != 0.0) ll += eta[i];
        }
        for (std::size_t g = 0; g < n_groups(); ++g) {
            if (events_[g] > 0) ll -= events_[g] * (std::log(s[g]) + shift);
        }
        return ll;
    }

    /// Gradient of the log partial likelihood in eta and the diagonal of
    /// its negative Hessian.
    void gradient_and_weights(const Eigen::VectorXd& eta, Eigen::VectorXd& grad,
                              Eigen::VectorXd& w) const
    {
        const auto n = eta.size();
        const double shift = n ? eta.maxCoeff() : 0.0;
        const auto s = risk_sums(eta, shift);
        grad.resize(n);
        w.resize(n);
        double a = 0.0, b = 0.0;
        for (std::size_t g = 0; g < n_groups(); ++g) {
            if (events_[g] > 0) {
                a += events_[g] / s[g];
                b += events_[g] / (s[g] * s[g]);
            }
            for (std::size_t pos = starts_[g]; pos < starts_[g + 1]; ++pos) {
                const auto i = order_[pos];
                const double r = std::exp(eta[i] - shift);
                grad[i] = status_[i] - r * a;
                w[i] = std::max(r * a - r * r * b, 0.0);
            }
        }
    }

private:
    std::vector<double> status_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> starts_;
    std::vector<double> events_;
};

class CoxWorkingModel final : public detail::EmModel
{
public:
    explicit CoxWorkingModel(const SurvivalResponse& resp) : risk_(resp) {}

    double neg_log_likelihood(const Eigen::VectorXd& eta) const override
    {
        return -risk_.log_partial_likelihood(eta);
    }

    void working(const Eigen::VectorXd& eta, Eigen::VectorXd& w, Eigen::VectorXd& wr) const override
    {
        risk_.gradient_and_weights(eta, wr, w);
    }

    bool has_intercept() const override { return false; }

    double deviance(const Eigen::VectorXd& eta) const override
    {
        return -2.0 * risk_.log_partial_likelihood(eta);
    }

private:
    RiskSets risk_;
};

} // namespace

void SurvivalResponse::validate() const
{
    if (time.size() != status.size()) throw SchemaError("time and status lengths differ");
    bool any_event = false;
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (!std::isfinite(time[i]) || !(time[i] > 0)) {
            throw SchemaError("survival times must be positive and finite (row "
                              + std::to_string(i + 1) + ")");
        }
        if (status[i] != 0.0 && status[i] != 1.0) {
            throw SchemaError("status must be 0 or 1 (row " + std::to_string(i + 1) + ")");
        }
        any_event = any_event || status[i] == 1.0;
    }
    if (!any_event) throw SchemaError("survival response has no events");
}

double cox_log_partial_likelihood(const SurvivalResponse& resp, const Eigen::VectorXd& eta)
{
    if (static_cast<Eigen::Index>(resp.size()) != eta.size()) {
        throw DomainError("cox: eta length does not match the response");
    }
    return RiskSets(resp).log_partial_likelihood(eta);
}

double cox_deviance(const SurvivalResponse& resp, const Eigen::VectorXd& eta)
{
    return -2.0 * cox_log_partial_likelihood(resp, eta);
}

Eigen::VectorXd cox_gradient(const Eigen::MatrixXd& x, const SurvivalResponse& resp,
                             const Eigen::VectorXd& beta)
{
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd g, w;
    RiskSets(resp).gradient_and_weights(eta, g, w);
    return x.transpose() * g;
}

FittedModel fit_cox(const Eigen::MatrixXd& design, const SurvivalResponse& resp,
                    const GroupStructure& groups, const SSLConfig& cfg, const FitOptions& opts)
{
    resp.validate();
    if (static_cast<Eigen::Index>(resp.size()) != design.rows()) {
        throw DomainError("design has " + std::to_string(design.rows())
                          + " rows but the survival response has " + std::to_string(resp.size()));
    }
    if (!design.allFinite()) throw SchemaError("design matrix contains non-finite values");
    CoxWorkingModel model(resp);
    FitOptions o = opts;
    o.offset = 0.0;
    o.fixed_dispersion.reset();
    return detail::run_em(model, design, Family::cox, groups, cfg, o, 0.0);
}

double c_index(std::span<const double> eta, const SurvivalResponse& resp)
{
    if (eta.size() != resp.size()) throw DomainError("c_index: length mismatch");
    double concordant = 0.0;
    double usable = 0.0;
    const auto n = resp.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (resp.status[i] != 1.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(resp.time[i] < resp.time[j])) continue;
            usable += 1.0;
            if (eta[i] > eta[j]) concordant += 1.0;
            else if (eta[i] == eta[j]) concordant += 0.5;
        }
    }
    if (usable == 0.0) throw DomainError("concordance undefined: no usable pairs");
    return concordant / usable;
}

} // namespace bham
