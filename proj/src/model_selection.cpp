#include <bham/model_selection.hpp>
#include <bham/data_frame.hpp>
#include <bham/errors.hpp>
#include <bham/glm_fit.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace bham {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const int> rows)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i), j) = x(rows[i], j);
    }
    return out;
}

std::vector<int> stratum_labels(const Outcome& o)
{
    std::vector<int> s(o.size(), 0);
    if (o.family == Family::binomial) {
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = o.y[i] == 1.0 ? 1 : 0;
    } else if (o.family == Family::cox) {
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = o.surv.status[i] == 1.0 ? 1 : 0;
    }
    return s;
}

std::vector<int> draw_folds(const std::vector<int>& strata, int nfolds, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<int> folds(strata.size(), 0);
    int next = 0;
    for (int stratum = 0; stratum <= 1; ++stratum) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < strata.size(); ++i) {
            if (strata[i] == stratum) idx.push_back(static_cast<int>(i));
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i : idx) {
            folds[i] = next + 1;
            next = (next + 1) % nfolds;
        }
    }
    return folds;
}

bool folds_have_both_classes(const Outcome& o, const std::vector<int>& folds, int nfolds)
{
    std::vector<int> ones(nfolds + 1, 0), total(nfolds + 1, 0);
    for (std::size_t i = 0; i < folds.size(); ++i) {
        ++total[folds[i]];
        if (o.y[i] == 1.0) ++ones[folds[i]];
    }
    for (int f = 1; f <= nfolds; ++f) {
        if (ones[f] == 0 || ones[f] == total[f]) return false;
    }
    return true;
}

CVRow score_pooled(const Outcome& o, const Eigen::VectorXd& eta, double s0)
{
    CVRow row;
    row.s0 = s0;
    const auto n = eta.size();
    if (o.family == Family::cox) {
        row.deviance = cox_deviance(o.surv, eta);
        row.c_index = c_index(std::span<const double>(eta.data(), n), o.surv);
        return row;
    }
    std::vector<double> mu(n);
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = inverse_link(o.family, eta[i]);
    if (o.family == Family::binomial) {
        const auto m = metrics_binomial(o.y, mu);
        row.deviance = m.deviance;
        row.auc = m.auc;
        row.mse = m.mse;
        row.mae = m.mae;
        row.misclassification = m.misclassification;
        return row;
    }
    double se = 0.0, ae = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        se += (o.y[i] - mu[i]) * (o.y[i] - mu[i]);
        ae += std::abs(o.y[i] - mu[i]);
    }
    row.deviance = deviance(o.family, o.y, mu);
    row.mse = se / static_cast<double>(n);
    row.mae = ae / static_cast<double>(n);
    return row;
}

void accumulate(std::optional<double>& into, const std::optional<double>& v)
{
    if (v) into = into.value_or(0.0) + *v;
}

void scale(std::optional<double>& v, double f)
{
    if (v) *v *= f;
}

} // namespace

Outcome Outcome::glm(Family f, std::vector<double> y)
{
    if (!is_glm(f)) throw DomainError("Outcome::glm: family must be a GLM family");
    Outcome o;
    o.family = f;
    o.y = std::move(y);
    return o;
}

Outcome Outcome::survival(SurvivalResponse s)
{
    Outcome o;
    o.family = Family::cox;
    o.surv = std::move(s);
    return o;
}

Outcome Outcome::subset(std::span<const int> rows) const
{
    Outcome o;
    o.family = family;
    for (int r : rows) {
        if (family == Family::cox) {
            o.surv.time.push_back(surv.time[r]);
            o.surv.status.push_back(surv.status[r]);
        } else {
            o.y.push_back(y[r]);
        }
    }
    return o;
}

void Outcome::validate() const
{
    if (family == Family::cox) surv.validate();
    else validate_response(family, y);
}

FittedModel fit_outcome(const Eigen::MatrixXd& design, const Outcome& outcome,
                        const GroupStructure& groups, const SSLConfig& cfg,
                        const FitOptions& opts)
{
    if (outcome.family == Family::cox) return fit_cox(design, outcome.surv, groups, cfg, opts);
    return fit(design, outcome.y, outcome.family, groups, cfg, opts);
}

double auc(std::span<const double> y, std::span<const double> score)
{
    if (y.size() != score.size()) throw DomainError("auc: length mismatch");
    const auto n = y.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    double rank_sum = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && score[idx[j + 1]] == score[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (y[idx[k]] == 1.0) {
                rank_sum += avg_rank;
                n1 += 1.0;
            }
        }
        i = j + 1;
    }
    const double n0 = static_cast<double>(n) - n1;
    if (n1 == 0.0 || n0 == 0.0) throw DomainError("auc undefined: response has a single class");
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

BinomialMetrics metrics_binomial(std::span<const double> y, std::span<const double> p_hat)
{
    if (y.size() != p_hat.size() || y.empty()) throw DomainError("metrics: length mismatch");
    BinomialMetrics m{};
    m.deviance = deviance(Family::binomial, y, p_hat);
    m.auc = auc(y, p_hat);
    double se = 0.0, ae = 0.0, wrong = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp(p_hat[i], binomial_mu_clip, 1.0 - binomial_mu_clip);
        se += (y[i] - p) * (y[i] - p);
        ae += std::abs(y[i] - p);
        const double cls = p > 0.5 ? 1.0 : 0.0;
        if (cls != y[i]) wrong += 1.0;
    }
    const auto n = static_cast<double>(y.size());
    m.mse = se / n;
    m.mae = ae / n;
    m.misclassification = wrong / n;
    return m;
}

std::size_t CVResult::best_index() const
{
    if (rows.empty()) throw DomainError("empty CV result");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].deviance < rows[best].deviance) best = i;
    }
    return best;
}

std::vector<int> assign_folds(const Outcome& outcome, int nfolds, std::uint64_t seed)
{
    const auto n = static_cast<int>(outcome.size());
    if (nfolds < 2 || nfolds > n) {
        throw DomainError("nfolds must lie in [2, n]; got " + std::to_string(nfolds));
    }
    const auto strata = stratum_labels(outcome);
    for (int attempt = 0; attempt < 10; ++attempt) {
        auto folds = draw_folds(strata, nfolds, seed + 0x9E3779B97F4A7C15ULL * attempt);
        if (outcome.family != Family::binomial || folds_have_both_classes(outcome, folds, nfolds)) {
            return folds;
        }
    }
    throw DomainError("stratification failed: could not draw " + std::to_string(nfolds)
                      + " folds that each contain both outcome classes");
}

std::vector<double> s0_sequence(double from, double to, double step)
{
    if (!(step > 0) || !(from > 0) || to < from) {
        throw DomainError("s0 grid needs 0 < from <= to and step > 0");
    }
    std::vector<double> out;
    for (int i = 0;; ++i) {
        // trim accumulated floating error so 0.005 + 3 * 0.01 prints as 0.035
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", from + step * i);
        const double v = std::strtod(buf, nullptr);
        if (v > to + 0.5 * step * 1e-9 + 1e-12 && i > 0) break;
        out.push_back(v);
        if (v > to - 1e-12) break;
    }
    return out;
}

CVResult tune(const Eigen::MatrixXd& design, const Outcome& outcome, const GroupStructure& groups,
              const SSLConfig& cfg, const std::vector<double>& s0_grid, const TuneOptions& opts)
{
    outcome.validate();
    const auto n = static_cast<int>(outcome.size());
    if (design.rows() != n) throw DomainError("design rows do not match the outcome length");
    if (s0_grid.empty()) throw DomainError("s0 grid is empty");
    for (std::size_t i = 0; i < s0_grid.size(); ++i) {
        if (!(s0_grid[i] > 0) || !(s0_grid[i] < cfg.s1)) {
            throw DomainError("every s0 must lie in (0, s1)");
        }
        if (i > 0 && !(s0_grid[i] > s0_grid[i - 1])) {
            throw DomainError("s0 grid must be strictly increasing");
        }
    }

    // fold labels per repetition
    std::vector<std::vector<int>> fold_sets;
    int nfolds = opts.nfolds;
    if (opts.fold_ids) {
        const auto& f = *opts.fold_ids;
        if (static_cast<int>(f.size()) != n) throw DomainError("fold_ids length must equal n");
        nfolds = *std::max_element(f.begin(), f.end());
        if (*std::min_element(f.begin(), f.end()) < 1 || nfolds < 2) {
            throw DomainError("fold_ids must be labels 1..nfolds with nfolds >= 2");
        }
        fold_sets.push_back(f);
    } else {
        if (opts.ncv < 1) throw DomainError("ncv must be at least 1");
        for (int r = 0; r < opts.ncv; ++r) {
            fold_sets.push_back(assign_folds(outcome, nfolds,
                                             opts.seed + 1000003ULL * static_cast<std::uint64_t>(r)));
        }
    }

    struct Split {
        std::vector<int> train, test;
        Eigen::MatrixXd x_train, x_test;
        Outcome o_train;
    };
    const auto n_rep = fold_sets.size();
    std::vector<std::vector<Split>> splits(n_rep);
    for (std::size_t r = 0; r < n_rep; ++r) {
        for (int f = 1; f <= nfolds; ++f) {
            Split s;
            for (int i = 0; i < n; ++i) (fold_sets[r][i] == f ? s.test : s.train).push_back(i);
            if (s.test.empty()) throw DomainError("fold " + std::to_string(f) + " is empty");
            s.x_train = take_rows(design, s.train);
            s.x_test = take_rows(design, s.test);
            s.o_train = outcome.subset(s.train);
            splits[r].push_back(std::move(s));
        }
    }

    // one job per (repetition, s0, fold); each writes its own slots
    const auto n_s0 = s0_grid.size();
    std::vector<Eigen::VectorXd> pooled(n_rep * n_s0, Eigen::VectorXd::Zero(n));
    const std::size_t n_jobs = n_rep * n_s0 * static_cast<std::size_t>(nfolds);
    std::vector<std::exception_ptr> errors(n_jobs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
            const std::size_t f = job % nfolds;
            const std::size_t s = (job / nfolds) % n_s0;
            const std::size_t r = job / (nfolds * n_s0);
            try {
                SSLConfig c = cfg;
                c.s0 = s0_grid[s];
                const auto& sp = splits[r][f];
                const auto m = fit_outcome(sp.x_train, sp.o_train, groups, c, opts.fit);
                const Eigen::VectorXd eta = predict(m, sp.x_test, PredictType::link, opts.fit.offset);
                auto& dst = pooled[r * n_s0 + s];
                for (std::size_t i = 0; i < sp.test.size(); ++i) dst[sp.test[i]] = eta[static_cast<Eigen::Index>(i)];
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    };

    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(n_jobs)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    CVResult cv;
    cv.family = outcome.family;
    cv.nfolds = nfolds;
    cv.ncv = static_cast<int>(n_rep);
    for (std::size_t s = 0; s < n_s0; ++s) {
        CVRow avg;
        avg.s0 = s0_grid[s];
        for (std::size_t r = 0; r < n_rep; ++r) {
            const auto row = score_pooled(outcome, pooled[r * n_s0 + s], s0_grid[s]);
            avg.deviance += row.deviance;
            accumulate(avg.auc, row.auc);
            accumulate(avg.mse, row.mse);
            accumulate(avg.mae, row.mae);
            accumulate(avg.misclassification, row.misclassification);
            accumulate(avg.c_index, row.c_index);
        }
        const double inv = 1.0 / static_cast<double>(n_rep);
        avg.deviance *= inv;
        scale(avg.auc, inv);
        scale(avg.mse, inv);
        scale(avg.mae, inv);
        scale(avg.misclassification, inv);
        scale(avg.c_index, inv);
        cv.rows.push_back(avg);
    }

    if (cv.rows.size() > 1) {
        const auto best = cv.best_index();
        if (best == 0 || best + 1 == cv.rows.size()) {
            std::ostringstream msg;
            msg << "minimum cross-validated deviance is at the grid boundary (s0 = "
                << format_double(cv.rows[best].s0)
                << "); consider widening the s0 range";
            cv.warning = msg.str();
        }
    }
    return cv;
}

SelectionReport select_variables(const FittedModel& model)
{
    SelectionReport rep;
    const auto& beta = model.coefficients;
    for (const auto& g : model.groups.groups) {
        SelectionRow row{g.var, false, false};
        for (int c : g.null_cols) row.linear = row.linear || beta[c] != 0.0;
        for (int c : g.pen_cols) row.nonlinear = row.nonlinear || beta[c] != 0.0;
        if (row.linear || row.nonlinear) rep.nonparametric.push_back(row);
    }
    for (std::size_t i = 0; i < model.groups.parametric_cols.size(); ++i) {
        if (beta[model.groups.parametric_cols[i]] != 0.0) {
            rep.parametric.push_back(model.groups.parametric_names[i]);
        }
    }
    return rep;
}

CurveData curve_data(const FittedModel& model, const std::string& var,
                     const std::vector<SmoothTransform>& transforms, double x_min, double x_max,
                     int n_points)
{
    auto t = std::find_if(transforms.begin(), transforms.end(),
                          [&](const SmoothTransform& s) { return s.var == var; });
    if (t == transforms.end()) throw SchemaError("unknown variable '" + var + "'");
    auto g = std::find_if(model.groups.groups.begin(), model.groups.groups.end(),
                          [&](const GroupStructure::Group& gr) { return gr.var == var; });
    if (g == model.groups.groups.end()) {
        throw SchemaError("variable '" + var + "' is not a smooth term of the model");
    }
    if (static_cast<int>(g->pen_cols.size()) != t->n_penalized() || g->null_cols.size() != 1) {
        throw SchemaError("model groups do not match the stored transform for '" + var + "'");
    }
    if (n_points < 1) throw DomainError("n_points must be positive");
    if (!(x_max >= x_min)) throw DomainError("curve range needs min <= max");

    CurveData out;
    out.x.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        out.x[i] = n_points == 1 ? x_min
                                 : x_min + (x_max - x_min) * i / static_cast<double>(n_points - 1);
    }
    if (n_points > 1) out.x.back() = x_max;

    std::vector<int> cols = g->pen_cols;
    cols.push_back(g->null_cols.front());
    const Eigen::MatrixXd b = apply_transform(*t, out.x);
    out.contribution.assign(n_points, 0.0);
    for (int i = 0; i < n_points; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            s += b(i, static_cast<Eigen::Index>(j)) * model.coefficients[cols[j]];
        }
        out.contribution[i] = s;
    }
    return out;
}

std::string to_csv(const CVResult& cv)
{
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : "NA"; };
    switch (cv.family) {
        case Family::binomial:
            out << "s0,deviance,auc,mse,mae,misclassification\n";
            for (const auto& r : cv.rows) {
                out << format_double(r.s0) << ',' << format_double(r.deviance) << ',' << opt(r.auc)
                    << ',' << opt(r.mse) << ',' << opt(r.mae) << ',' << opt(r.misclassification)
                    << '\n';
            }
            break;
        case Family::cox:
            out << "s0,deviance,c_index\n";
            for (const auto& r : cv.rows) {
                out << format_double(r.s0) << ',' << format_double(r.deviance) << ','
                    << opt(r.c_index) << '\n';
            }
            break;
        default:
            out << "s0,deviance,mse,mae\n";
            for (const auto& r : cv.rows) {
                out << format_double(r.s0) << ',' << format_double(r.deviance) << ',' << opt(r.mse)
                    << ',' << opt(r.mae) << '\n';
            }
    }
    return out.str();
}

std::string to_json(const SelectionReport& report, int indent)
{
    nlohmann::json j;
    j["parametric"] = report.parametric;
    j["nonparametric"] = nlohmann::json::array();
    for (const auto& r : report.nonparametric) {
        j["nonparametric"].push_back(
            {{"variable", r.variable}, {"linear", r.linear}, {"nonlinear", r.nonlinear}});
    }
    return j.dump(indent);
}

std::string to_csv(const CurveData& curve)
{
    std::ostringstream out;
    out << "x,contribution\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        out << format_double(curve.x[i]) << ',' << format_double(curve.contribution[i]) << '\n';
    }
    return out.str();
}

} // namespace bham
