#pragma once
#include <bham/archive.hpp>
#include <bham/errors.hpp>
#include <bham/model_selection.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bham::cli {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,      // bad flags
    exit_schema = 3,     // missing/unknown columns, wrong types, missing values
    exit_parse = 4,      // malformed spec rows, fold files, archives
    exit_numeric = 5,    // solver failure, degenerate basis
    exit_io = 6,         // unreadable/unwritable files
    exit_domain = 7,     // invalid argument values
};

int exit_code_for(ErrorKind kind) noexcept;

struct RunConfig
{
    std::string subcommand;
    std::string data;
    std::string spec;
    std::string outcome = "y";
    std::string status;                 // Cox event column
    std::string family = "gaussian";
    std::vector<std::string> parametric;
    double s0 = 0.04;
    double s1 = 0.5;
    std::vector<double> s0_grid;
    int nfolds = 5;
    int ncv = 1;
    std::string fold_file;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string model;
    std::string out;
    std::string report;
    double offset = 0.0;
    // curve
    std::string var;
    std::optional<double> min, max;
    int n_points = 200;
    // sim
    int n = 500;
    int p = 10;
    std::string truth;
};

/// "a,b,c" or "from:to:step".
std::vector<double> parse_grid(const std::string& text);
std::vector<int> read_fold_file(const std::string& path);

struct FitSummary
{
    ModelArchive archive;
    SelectionReport selection;
};

struct TuneSummary
{
    CVResult cv;
    double chosen_s0 = 0.0;
    ModelArchive archive;
    SelectionReport selection;
};

FitSummary cmd_fit(const RunConfig& cfg, std::ostream& log);
TuneSummary cmd_tune(const RunConfig& cfg, std::ostream& log);
Eigen::MatrixXd cmd_predict(const RunConfig& cfg, std::ostream& log);   // n x 2: link, response
SelectionReport cmd_select(const RunConfig& cfg, std::ostream& log);
CurveData cmd_curve(const RunConfig& cfg, std::ostream& log);
void cmd_sim(const RunConfig& cfg, std::ostream& log);

/// Parses argv, runs the subcommand and converts failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace bham::cli
