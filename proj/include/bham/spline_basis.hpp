#pragma once
#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bham {

enum class BasisKind { cubic_regression };

const char* to_string(BasisKind kind) noexcept;
BasisKind basis_kind_from_string(const std::string& s);

/// One row of the model specification table: which predictor gets which smooth.
struct SmoothSpec
{
    std::string var;
    BasisKind basis = BasisKind::cubic_regression;
    int k = 10;             // basis dimension (number of knots)
    std::string args;       // raw Args text, kept for the archive
};

using SpecTable = std::vector<SmoothSpec>;

/// Parses one (Var, Func, Args) triple. Func must be "s"; Args accepts
/// `k=<int>` and `bs='cr'` separated by commas. Empty or NA Args gives
/// the defaults (k = 10, cubic regression spline).
SmoothSpec parse_smooth_spec(const std::string& var, const std::string& func,
                             const std::string& args);

/// Reads a CSV with header `Var,Func,Args`. Errors name the offending row.
SpecTable parse_spec_table(std::istream& in);
SpecTable read_spec_table(const std::string& path);

/// Checks k >= 4 and non-empty, unique variable names.
void validate(const SpecTable& specs);

/// Frozen per-predictor transform: raw values -> scaled design columns.
/// Columns are ordered pen1..pen(k-2) (decreasing penalty eigenvalue)
/// followed by null1, the linear direction left unpenalized by the
/// wiggliness penalty.
struct SmoothTransform
{
    std::string var;
    BasisKind basis = BasisKind::cubic_regression;
    std::vector<double> knots;          // k, strictly increasing
    Eigen::MatrixXd constraint_map;     // k x (k-1), orthonormal, columns orthogonal to 1'B
    Eigen::MatrixXd eigen_map;          // (k-1) x (k-1)
    std::vector<double> column_scales;  // k-1, sample SD of the unscaled columns
    std::vector<std::string> column_names;
    std::vector<double> eigenvalues;    // k-1, decreasing, of the constrained penalty

    int k() const noexcept { return static_cast<int>(knots.size()); }
    int n_penalized() const noexcept { return k() - 2; }
};

struct SmoothBlock
{
    Eigen::MatrixXd block;      // n x (k-1)
    SmoothTransform transform;
};

namespace crs {

/// k knots at equally spaced quantiles of the distinct values of x,
/// extremes included.
std::vector<double> place_knots(std::span<const double> x, int k);

/// Maps knot values of the spline to its second derivatives at the knots
/// (natural end conditions, so the first and last rows are zero). k x k.
Eigen::MatrixXd second_derivative_map(std::span<const double> knots);

/// Integrated squared second derivative penalty, k x k.
Eigen::MatrixXd penalty(std::span<const double> knots);

/// n x k cardinal basis: row i gives the spline value at x[i] as a linear
/// function of the knot values. Linear beyond the boundary knots.
Eigen::MatrixXd basis(std::span<const double> knots, std::span<const double> x);

} // namespace crs

SmoothBlock build_smooth(const SmoothSpec& spec, std::span<const double> x);

/// Evaluates a stored transform at new values. Rows are computed
/// independently with a fixed operation order, so identical inputs give
/// bit-identical rows regardless of how many rows are requested.
Eigen::MatrixXd apply_transform(const SmoothTransform& t, std::span<const double> x);

/// Penalty matrix of the reparameterized (pre-scaling) coefficients:
/// eigen_map' constraint_map' S constraint_map eigen_map.
Eigen::MatrixXd reparameterized_penalty(const SmoothTransform& t);

} // namespace bham
