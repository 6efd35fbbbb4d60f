#pragma once
#include <bham/cox.hpp>
#include <bham/model.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bham {

/// Response for any supported family: `y` for GLMs, `surv` for Cox.
struct Outcome
{
    Family family = Family::gaussian;
    std::vector<double> y;
    SurvivalResponse surv;

    static Outcome glm(Family f, std::vector<double> y);
    static Outcome survival(SurvivalResponse s);

    std::size_t size() const noexcept { return family == Family::cox ? surv.size() : y.size(); }
    Outcome subset(std::span<const int> rows) const;
    void validate() const;
};

/// Dispatches to fit() or fit_cox().
FittedModel fit_outcome(const Eigen::MatrixXd& design, const Outcome& outcome,
                        const GroupStructure& groups, const SSLConfig& cfg,
                        const FitOptions& opts = {});

struct BinomialMetrics
{
    double deviance;
    double auc;
    double mse;
    double mae;
    double misclassification;
};

/// Mann-Whitney AUC with ties counted one half. Throws DomainError if y
/// has a single class.
double auc(std::span<const double> y, std::span<const double> score);

BinomialMetrics metrics_binomial(std::span<const double> y, std::span<const double> p_hat);

struct CVRow
{
    double s0 = 0.0;
    double deviance = 0.0;
    std::optional<double> auc;
    std::optional<double> mse;
    std::optional<double> mae;
    std::optional<double> misclassification;
    std::optional<double> c_index;
};

struct CVResult
{
    Family family = Family::gaussian;
    std::vector<CVRow> rows;        // one per s0, ascending
    int nfolds = 0;
    int ncv = 0;
    std::optional<std::string> warning;

    /// Row with the smallest deviance; ties go to the smaller s0.
    std::size_t best_index() const;
    double best_s0() const { return rows.at(best_index()).s0; }
};

struct TuneOptions
{
    int nfolds = 5;
    int ncv = 1;
    /// Fold label per observation, 1..nfolds; used verbatim when given.
    std::optional<std::vector<int>> fold_ids;
    std::uint64_t seed = 1;
    int threads = 1;
    FitOptions fit;
};

/// Stratified (by class for binomial, by event status for Cox) random fold
/// labels in 1..nfolds. A binomial draw leaving some fold with a single
/// class is redrawn with a derived seed, up to 10 attempts.
std::vector<int> assign_folds(const Outcome& outcome, int nfolds, std::uint64_t seed);

/// Cross-validates each s0 on the same folds (s1 fixed at cfg.s1).
/// Out-of-fold linear predictors are pooled per s0 and repetition,
/// metrics computed on the pooled vector, then averaged over the ncv
/// repetitions. Fold fits may run on several threads; results do not
/// depend on the thread count.
CVResult tune(const Eigen::MatrixXd& design, const Outcome& outcome, const GroupStructure& groups,
              const SSLConfig& cfg, const std::vector<double>& s0_grid,
              const TuneOptions& opts = {});

/// Inclusive grid from..to (within half a step) by step.
std::vector<double> s0_sequence(double from, double to, double step);

struct SelectionRow
{
    std::string variable;
    bool linear = false;
    bool nonlinear = false;
};

struct SelectionReport
{
    std::vector<std::string> parametric;
    std::vector<SelectionRow> nonparametric;
};

/// Bi-level selection read off exact zeros of the coefficient vector.
SelectionReport select_variables(const FittedModel& model);

struct CurveData
{
    std::vector<double> x;
    std::vector<double> contribution;
};

/// Fitted contribution of one smooth on an even grid over [x_min, x_max],
/// all other terms held at zero. Defined up to the sum-to-zero shift of
/// the training design.
CurveData curve_data(const FittedModel& model, const std::string& var,
                     const std::vector<SmoothTransform>& transforms, double x_min, double x_max,
                     int n_points);

std::string to_csv(const CVResult& cv);
std::string to_json(const SelectionReport& report, int indent = 2);
std::string to_csv(const CurveData& curve);

} // namespace bham
