#include "em_driver.hpp"

#include <bham/errors.hpp>

#include <cmath>
#include <string>

namespace bham::detail {

namespace {

void check_groups(const GroupStructure& groups, Eigen::Index p)
{
    if (groups.n_cols != p) {
        throw DomainError("group structure covers " + std::to_string(groups.n_cols)
                          + " columns but the design has " + std::to_string(p));
    }
    for (const auto& g : groups.groups) {
        if (g.null_cols.size() != 1) {
            throw DomainError("smooth group '" + g.var + "' must have exactly one null column");
        }
    }
}

// Per-column inclusion probability used for the penalty of that column.
Eigen::VectorXd column_inclusion(const GroupStructure& groups,
                                 const std::vector<InclusionState>& inc)
{
    Eigen::VectorXd p(groups.n_cols);
    for (std::size_t v = 0; v < groups.groups.size(); ++v) {
        const auto& g = groups.groups[v];
        for (int c : g.null_cols) p[c] = inc[v].p_lin;
        for (int c : g.pen_cols) p[c] = inc[v].p_non;
    }
    for (std::size_t i = 0; i < groups.parametric_cols.size(); ++i) {
        p[groups.parametric_cols[i]] = inc[groups.groups.size() + i].p_lin;
    }
    return p;
}

void e_step(const GroupStructure& groups, const Eigen::VectorXd& beta, const SSLConfig& cfg,
            std::vector<InclusionState>& inc)
{
    std::vector<double> pen;
    for (std::size_t v = 0; v < groups.groups.size(); ++v) {
        const auto& g = groups.groups[v];
        auto& s = inc[v];
        const double b_lin = beta[g.null_cols.front()];
        if (g.pen_cols.empty()) {
            s.p_lin = e_step_linear(b_lin, s.theta, cfg);
            s.p_non = 0.0;
            s.theta = update_theta_linear(s.p_lin, cfg);
            continue;
        }
        pen.clear();
        for (int c : g.pen_cols) pen.push_back(beta[c]);
        const auto gi = e_step_group(b_lin, pen, s.theta, cfg);
        s.p_lin = gi.p_lin;
        s.p_non = gi.p_non;
        s.theta = update_theta(s.p_lin, s.p_non, cfg);
    }
    for (std::size_t i = 0; i < groups.parametric_cols.size(); ++i) {
        auto& s = inc[groups.groups.size() + i];
        s.p_lin = e_step_linear(beta[groups.parametric_cols[i]], s.theta, cfg);
        s.p_non = 0.0;
        s.theta = update_theta_linear(s.p_lin, cfg);
    }
}

// Negative expected complete-data log posterior.
double em_objective(double neg_loglik, const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda,
                    const Eigen::VectorXd& p_col, const GroupStructure& groups,
                    const std::vector<InclusionState>& inc, const SSLConfig& cfg)
{
    double obj = neg_loglik;
    const double l1 = std::log(2.0 * cfg.s1), l0 = std::log(2.0 * cfg.s0);
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        obj += lambda[j] * std::abs(beta[j]) + p_col[j] * l1 + (1.0 - p_col[j]) * l0;
    }
    for (std::size_t v = 0; v < inc.size(); ++v) {
        const auto& s = inc[v];
        const double lt = std::log(s.theta), lf = std::log1p(-s.theta);
        double succ = s.p_lin, fail = 1.0 - s.p_lin;
        if (v < groups.groups.size() && !groups.groups[v].pen_cols.empty()) {
            succ += s.p_non;
            fail += s.p_lin - s.p_non;
        }
        obj -= (succ + cfg.a - 1.0) * lt + (fail + cfg.b - 1.0) * lf;
    }
    return obj;
}

Eigen::VectorXd penalties_from(const Eigen::VectorXd& p_col, const SSLConfig& cfg)
{
    Eigen::VectorXd lambda(p_col.size());
    for (Eigen::Index j = 0; j < p_col.size(); ++j) lambda[j] = penalty_scale(p_col[j], cfg);
    return lambda;
}

} // namespace

FittedModel run_em(EmModel& model, const Eigen::MatrixXd& x, Family family,
                   const GroupStructure& groups, const SSLConfig& cfg, const FitOptions& opts,
                   double initial_intercept)
{
    cfg.validate_allow_equal_scales();
    check_groups(groups, x.cols());
    if (opts.fixed_inclusion && !(*opts.fixed_inclusion >= 0.0 && *opts.fixed_inclusion <= 1.0)) {
        throw DomainError("fixed inclusion probability must lie in [0, 1]");
    }

    FittedModel fm;
    fm.family = family;
    fm.config = cfg;
    fm.groups = groups;
    fm.offset = opts.offset;
    fm.intercept = model.has_intercept() ? initial_intercept : 0.0;
    fm.coefficients = Eigen::VectorXd::Zero(x.cols());

    std::vector<InclusionState> inc(groups.n_variables());
    for (std::size_t i = groups.groups.size(); i < inc.size(); ++i) inc[i].p_non = 0.0;
    if (opts.fixed_inclusion) {
        for (auto& s : inc) s.p_lin = s.p_non = *opts.fixed_inclusion;
    }

    PenalizedSolveOptions so;
    so.inner_tol = opts.inner_tol;
    so.max_irls_iter = opts.max_irls_iter;
    so.active_set = opts.active_set;
    so.on_objective = opts.on_m_step_objective;

    Eigen::VectorXd p_col = column_inclusion(groups, inc);
    Eigen::VectorXd lambda = penalties_from(p_col, cfg);

    auto m_step = [&](int iter) {
        try {
            solve_penalized(model, x, lambda, opts.offset, fm.intercept, fm.coefficients, so);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (EM iteration " + std::to_string(iter)
                               + ")");
        }
        Eigen::VectorXd eta = x * fm.coefficients;
        eta.array() += opts.offset + fm.intercept;
        const double nll = model.neg_log_likelihood(eta);
        if (!std::isfinite(nll) || !fm.coefficients.allFinite()) {
            throw NumericError("non-finite likelihood in EM iteration " + std::to_string(iter));
        }
        return std::make_pair(eta, em_objective(nll, fm.coefficients, lambda, p_col, groups, inc,
                                                cfg));
    };

    if (opts.on_iteration) opts.on_iteration({0, inc, fm.coefficients});
    auto [eta, obj] = m_step(0);

    for (int iter = 1; iter <= cfg.max_em_iter; ++iter) {
        if (!opts.fixed_inclusion) {
            e_step(groups, fm.coefficients, cfg, inc);
            p_col = column_inclusion(groups, inc);
            lambda = penalties_from(p_col, cfg);
        }
        model.update_dispersion(eta);
        if (opts.on_iteration) opts.on_iteration({iter, inc, fm.coefficients});

        auto [eta_new, obj_new] = m_step(iter);
        fm.n_iter = iter;
        const double rel = std::abs(obj_new - obj) / (std::abs(obj_new) + 0.1);
        eta = std::move(eta_new);
        obj = obj_new;
        if (rel < cfg.tol) {
            fm.converged = true;
            break;
        }
    }

    fm.penalties = lambda;
    fm.inclusion = std::move(inc);
    fm.objective = obj;
    fm.final_deviance = model.deviance(eta);
    fm.dispersion = model.dispersion();
    return fm;
}

} // namespace bham::detail
