#include <bham/penalized_irls.hpp>
#include <bham/errors.hpp>

#include <cmath>
#include <vector>

namespace bham {

namespace {

double penalty_value(const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta)
{
    double p = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) p += lambda[j] * std::abs(beta[j]);
    return p;
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                 double offset, double intercept)
{
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(x.rows(), offset + intercept);
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) eta.noalias() += beta[j] * x.col(j);
    }
    return eta;
}

// Coordinate descent on 0.5 sum w (z - eta)^2 + sum lambda |beta|, with wr
// holding w (z - eta) at the current iterate.
class QuadraticCd
{
public:
    QuadraticCd(const Eigen::MatrixXd& x, const Eigen::VectorXd& lambda,
                const Eigen::VectorXd& w, Eigen::VectorXd& wr, bool intercept)
        : x_(x), lambda_(lambda), w_(w), wr_(wr), intercept_(intercept),
          xwx_(x.cols()), wsum_(w.sum())
    {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            xwx_[j] = x.col(j).cwiseAbs2().dot(w);
        }
    }

    double sweep_intercept(double& a)
    {
        if (!intercept_ || !(wsum_ > 0)) return 0.0;
        const double d = wr_.sum() / wsum_;
        if (d != 0.0) {
            a += d;
            wr_.noalias() -= d * w_;
        }
        return std::abs(d);
    }

    double update(Eigen::Index j, Eigen::VectorXd& beta)
    {
        if (!(xwx_[j] > 0)) {
            beta[j] = 0.0;
            return 0.0;
        }
        const double g = x_.col(j).dot(wr_) + xwx_[j] * beta[j];
        const double b = soft_threshold(g, lambda_[j]) / xwx_[j];
        const double d = b - beta[j];
        if (d != 0.0) {
            wr_.noalias() -= d * x_.col(j).cwiseProduct(w_);
            beta[j] = b;
        }
        return std::abs(d);
    }

    double full_sweep(double& a, Eigen::VectorXd& beta)
    {
        double change = sweep_intercept(a);
        for (Eigen::Index j = 0; j < beta.size(); ++j) change = std::max(change, update(j, beta));
        return change;
    }

    double active_sweep(double& a, Eigen::VectorXd& beta, const std::vector<Eigen::Index>& active)
    {
        double change = sweep_intercept(a);
        for (auto j : active) change = std::max(change, update(j, beta));
        return change;
    }

private:
    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& lambda_;
    const Eigen::VectorXd& w_;
    Eigen::VectorXd& wr_;
    bool intercept_;
    Eigen::VectorXd xwx_;
    double wsum_;
};

} // namespace

PenalizedSolveResult solve_penalized(const WorkingModel& model, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& lambda, double offset,
                                     double& intercept, Eigen::VectorXd& beta,
                                     const PenalizedSolveOptions& opts)
{
    if (lambda.size() != x.cols() || beta.size() != x.cols()) {
        throw DomainError("solve_penalized: dimension mismatch");
    }
    if (!model.has_intercept()) intercept = 0.0;

    PenalizedSolveResult res;
    Eigen::VectorXd eta = linear_predictor(x, beta, offset, intercept);
    double obj = model.neg_log_likelihood(eta) + penalty_value(lambda, beta);
    if (!std::isfinite(obj)) throw NumericError("non-finite objective at the starting point");

    Eigen::VectorXd w, wr;
    for (int it = 0; it < opts.max_irls_iter; ++it) {
        model.working(eta, w, wr);
        double a = intercept;
        Eigen::VectorXd b = beta;
        QuadraticCd cd(x, lambda, w, wr, model.has_intercept());

        for (;;) {
            double change = cd.full_sweep(a, b);
            ++res.sweeps;
            if (change < opts.inner_tol || res.sweeps >= opts.max_sweeps) break;
            if (!opts.active_set) continue;
            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < b.size(); ++j) {
                if (b[j] != 0.0) active.push_back(j);
            }
            do {
                change = cd.active_sweep(a, b, active);
                ++res.sweeps;
            } while (change >= opts.inner_tol && res.sweeps < opts.max_sweeps);
        }

        // step-halving guard on the true objective
        double step = 1.0;
        Eigen::VectorXd b_try = b;
        double a_try = a;
        Eigen::VectorXd eta_try = linear_predictor(x, b_try, offset, a_try);
        double obj_try = model.neg_log_likelihood(eta_try) + penalty_value(lambda, b_try);
        int halvings = 0;
        while (!(obj_try <= obj + 1e-12 * std::abs(obj)) && halvings < 40) {
            step *= 0.5;
            ++halvings;
            b_try = beta + step * (b - beta);
            a_try = intercept + step * (a - intercept);
            eta_try = linear_predictor(x, b_try, offset, a_try);
            obj_try = model.neg_log_likelihood(eta_try) + penalty_value(lambda, b_try);
        }
        if (!std::isfinite(obj_try)) throw NumericError("penalized IRLS diverged");
        if (!(obj_try <= obj + 1e-12 * std::abs(obj))) {
            // no descent possible along this direction: keep the current point
            res.converged = true;
            res.irls_iter = it + 1;
            break;
        }

        double change = std::abs(a_try - intercept);
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            change = std::max(change, std::abs(b_try[j] - beta[j]));
        }
        beta = std::move(b_try);
        intercept = a_try;
        eta = std::move(eta_try);
        obj = obj_try;
        res.irls_iter = it + 1;
        if (opts.on_objective) opts.on_objective(obj);
        if (change < opts.inner_tol) {
            res.converged = true;
            break;
        }
    }
    res.objective = obj;
    return res;
}

} // namespace bham
