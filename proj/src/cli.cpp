#include <bham/cli.hpp>
#include <bham/data_frame.hpp>
#include <bham/errors.hpp>
#include <bham/simulation.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bham::cli {

namespace {

using nlohmann::json;

double parse_double(const std::string& s, const std::string& what)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ParseError("cannot parse " + what + " '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

Outcome read_outcome(const DataFrame& data, const RunConfig& cfg, Family family)
{
    if (!data.has(cfg.outcome)) {
        throw SchemaError("outcome column '" + cfg.outcome + "' not found in " + cfg.data);
    }
    auto y = data.complete_numeric(cfg.outcome);
    if (family != Family::cox) return Outcome::glm(family, {y.begin(), y.end()});
    if (cfg.status.empty()) throw DomainError("family cox needs --status <event column>");
    if (!data.has(cfg.status)) {
        throw SchemaError("status column '" + cfg.status + "' not found in " + cfg.data);
    }
    auto st = data.complete_numeric(cfg.status);
    SurvivalResponse s{{y.begin(), y.end()}, {st.begin(), st.end()}};
    s.validate();
    return Outcome::survival(std::move(s));
}

struct Prepared {
    DataFrame data;
    SpecTable specs;
    AdditiveDesign design;
    GroupStructure groups;
    Outcome outcome;
    SSLConfig ssl;
};

Prepared prepare(const RunConfig& cfg)
{
    if (cfg.data.empty()) throw DomainError("--data is required");
    Prepared p;
    const auto family = family_from_string(cfg.family);
    p.data = read_csv(cfg.data);
    if (!cfg.spec.empty()) p.specs = read_spec_table(cfg.spec);
    p.outcome = read_outcome(p.data, cfg, family);
    for (const auto& s : p.specs) {
        if (s.var == cfg.outcome || s.var == cfg.status) {
            throw SchemaError("outcome column '" + s.var + "' also appears as a predictor");
        }
        if (!p.data.has(s.var)) {
            throw SchemaError("spec variable '" + s.var + "' not found in " + cfg.data);
        }
    }
    p.design = construct_smooth_data(p.specs, p.data, cfg.parametric);
    p.groups = make_group(p.design.column_names);
    p.ssl.s0 = cfg.s0;
    p.ssl.s1 = cfg.s1;
    p.ssl.validate();
    return p;
}

ModelArchive make_archive(const RunConfig& cfg, const Prepared& p, FittedModel model)
{
    ModelArchive a;
    a.outcome = cfg.outcome;
    a.status = model.family == Family::cox ? cfg.status : std::string();
    a.specs = p.specs;
    a.parametric = p.design.parametric;
    a.transforms = p.design.transforms;
    a.model = std::move(model);
    return a;
}

json selection_json(const SelectionReport& rep)
{
    return json::parse(to_json(rep, -1));
}

json fit_report(const ModelArchive& a, const SelectionReport& sel)
{
    const auto& m = a.model;
    json j = {
        {"family", to_string(m.family)},
        {"s0", m.config.s0},
        {"s1", m.config.s1},
        {"converged", m.converged},
        {"iterations", m.n_iter},
        {"deviance", m.final_deviance},
        {"intercept", m.intercept},
        {"selection", selection_json(sel)},
    };
    if (m.family == Family::gaussian) j["dispersion"] = m.dispersion;
    return j;
}

void emit(const std::string& path, const std::string& content, std::ostream& log)
{
    if (path.empty() || path == "-") log << content;
    else write_file_atomic(path, content);
}

} // namespace

int exit_code_for(ErrorKind kind) noexcept
{
    switch (kind) {
        case ErrorKind::schema: return exit_schema;
        case ErrorKind::parse: return exit_parse;
        case ErrorKind::numeric: return exit_numeric;
        case ErrorKind::io: return exit_io;
        case ErrorKind::domain: return exit_domain;
    }
    return exit_domain;
}

std::vector<double> parse_grid(const std::string& text)
{
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw ParseError("s0 grid range must be from:to:step");
        return s0_sequence(parse_double(parts[0], "grid start"), parse_double(parts[1], "grid end"),
                           parse_double(parts[2], "grid step"));
    }
    std::vector<double> out;
    for (const auto& s : split(text, ',')) out.push_back(parse_double(s, "s0 value"));
    if (out.empty()) throw ParseError("empty s0 grid");
    return out;
}

std::vector<int> read_fold_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open fold file '" + path + "'");
    auto records = parse_csv_records(in);
    std::vector<int> folds;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& cell = records[r].at(0);
        int v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            if (r == 0) continue;   // header
            throw ParseError("fold file row " + std::to_string(r + 1) + ": '" + cell
                             + "' is not an integer");
        }
        folds.push_back(v);
    }
    return folds;
}

FitSummary cmd_fit(const RunConfig& cfg, std::ostream& log)
{
    auto p = prepare(cfg);
    FitOptions opts;
    opts.offset = cfg.offset;
    auto model = fit_outcome(p.design.matrix, p.outcome, p.groups, p.ssl, opts);
    FitSummary s{make_archive(cfg, p, std::move(model)), {}};
    s.selection = select_variables(s.archive.model);
    if (!cfg.model.empty()) save_archive(cfg.model, s.archive);
    emit(cfg.out, fit_report(s.archive, s.selection).dump(2) + "\n", log);
    return s;
}

TuneSummary cmd_tune(const RunConfig& cfg, std::ostream& log)
{
    auto p = prepare(cfg);
    TuneOptions topts;
    topts.nfolds = cfg.nfolds;
    topts.ncv = cfg.ncv;
    topts.seed = cfg.seed;
    topts.threads = cfg.threads;
    topts.fit.offset = cfg.offset;
    if (!cfg.fold_file.empty()) topts.fold_ids = read_fold_file(cfg.fold_file);
    const auto grid = cfg.s0_grid.empty() ? std::vector<double>{cfg.s0} : cfg.s0_grid;

    TuneSummary s;
    s.cv = tune(p.design.matrix, p.outcome, p.groups, p.ssl, grid, topts);
    s.chosen_s0 = s.cv.best_s0();
    if (s.cv.warning) log << "warning: " << *s.cv.warning << "\n";

    SSLConfig final_cfg = p.ssl;
    final_cfg.s0 = s.chosen_s0;
    auto model = fit_outcome(p.design.matrix, p.outcome, p.groups, final_cfg, topts.fit);
    s.archive = make_archive(cfg, p, std::move(model));
    s.selection = select_variables(s.archive.model);

    if (!cfg.out.empty()) write_file_atomic(cfg.out, to_csv(s.cv));
    if (!cfg.model.empty()) save_archive(cfg.model, s.archive);
    auto rep = fit_report(s.archive, s.selection);
    rep["chosen_s0"] = s.chosen_s0;
    rep["nfolds"] = s.cv.nfolds;
    rep["ncv"] = s.cv.ncv;
    if (s.cv.warning) rep["warning"] = *s.cv.warning;
    emit(cfg.report, rep.dump(2) + "\n", log);
    return s;
}

Eigen::MatrixXd cmd_predict(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.model.empty()) throw DomainError("--model is required");
    if (cfg.data.empty()) throw DomainError("--data is required");
    const auto a = load_archive(cfg.model);
    const auto data = read_csv(cfg.data);
    for (const auto& t : a.transforms) {
        if (!data.has(t.var)) throw SchemaError("variable '" + t.var + "' missing from " + cfg.data);
    }
    const auto x = make_predict_dat(a.transforms, data, a.parametric);
    Eigen::MatrixXd out(x.rows(), 2);
    out.col(0) = predict(a.model, x, PredictType::link, cfg.offset);
    out.col(1) = predict(a.model, x, PredictType::response, cfg.offset);

    std::ostringstream csv;
    csv << "link,response\n";
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        csv << format_double(out(i, 0)) << ',' << format_double(out(i, 1)) << '\n';
    }
    emit(cfg.out, csv.str(), log);
    return out;
}

SelectionReport cmd_select(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.model.empty()) throw DomainError("--model is required");
    const auto a = load_archive(cfg.model);
    auto rep = select_variables(a.model);
    emit(cfg.out, to_json(rep) + "\n", log);
    return rep;
}

CurveData cmd_curve(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.model.empty()) throw DomainError("--model is required");
    if (cfg.var.empty()) throw DomainError("--var is required");
    const auto a = load_archive(cfg.model);
    auto t = std::find_if(a.transforms.begin(), a.transforms.end(),
                          [&](const SmoothTransform& s) { return s.var == cfg.var; });
    if (t == a.transforms.end()) throw SchemaError("unknown variable '" + cfg.var + "'");
    const double lo = cfg.min.value_or(t->knots.front());
    const double hi = cfg.max.value_or(t->knots.back());
    auto curve = curve_data(a.model, cfg.var, a.transforms, lo, hi, cfg.n_points);
    emit(cfg.out, to_csv(curve), log);
    return curve;
}

void cmd_sim(const RunConfig& cfg, std::ostream& log)
{
    const auto sim = sim_bai(cfg.n, cfg.p, family_from_string(cfg.family), cfg.seed);
    const auto df = sim.data();
    std::ostringstream csv;
    const auto names = df.names();
    for (std::size_t j = 0; j < names.size(); ++j) csv << (j ? "," : "") << names[j];
    csv << '\n';
    for (std::size_t i = 0; i < df.rows(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            csv << (j ? "," : "") << format_double(df.numeric(names[j])[i]);
        }
        csv << '\n';
    }
    emit(cfg.out, csv.str(), log);
    if (!cfg.truth.empty()) {
        std::ostringstream t;
        t << "eta\n";
        for (double e : sim.eta) t << format_double(e) << '\n';
        write_file_atomic(cfg.truth, t.str());
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bayesian hierarchical additive models with the two-part spike-and-slab LASSO prior"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string ss = "0.04,0.5";
    std::string grid;
    std::string parametric;

    auto data_opts = [&](CLI::App* sub) {
        sub->add_option("--data", cfg.data, "training data CSV")->required();
        sub->add_option("--spec", cfg.spec, "smooth specification CSV (Var,Func,Args)");
        sub->add_option("--outcome", cfg.outcome, "outcome column (survival time for cox)");
        sub->add_option("--status", cfg.status, "event indicator column (cox)");
        sub->add_option("--family", cfg.family, "gaussian, binomial, poisson or cox");
        sub->add_option("--parametric", parametric, "comma-separated unsmoothed columns");
        sub->add_option("--ss", ss, "spike,slab scales");
        sub->add_option("--offset", cfg.offset, "constant offset");
    };

    auto* fit = app.add_subcommand("fit", "fit a model at fixed scales");
    data_opts(fit);
    fit->add_option("--model", cfg.model, "output model archive");
    fit->add_option("--out", cfg.out, "fit report JSON (default stdout)");

    auto* tune_cmd = app.add_subcommand("tune", "cross-validate s0 and refit at the best value");
    data_opts(tune_cmd);
    tune_cmd->add_option("--s0-grid", grid, "comma list or from:to:step");
    tune_cmd->add_option("--nfolds", cfg.nfolds, "number of folds");
    tune_cmd->add_option("--ncv", cfg.ncv, "number of repeated CV runs");
    tune_cmd->add_option("--fold-file", cfg.fold_file, "fold labels 1..K, one per row");
    tune_cmd->add_option("--seed", cfg.seed, "fold assignment seed");
    tune_cmd->add_option("--threads", cfg.threads, "worker threads for fold fits");
    tune_cmd->add_option("--model", cfg.model, "output archive of the refit model");
    tune_cmd->add_option("--out", cfg.out, "CV metric table CSV");
    tune_cmd->add_option("--report", cfg.report, "summary JSON (default stdout)");

    auto* pred = app.add_subcommand("predict", "predict new data from an archive");
    pred->add_option("--model", cfg.model, "model archive")->required();
    pred->add_option("--data", cfg.data, "new data CSV")->required();
    pred->add_option("--offset", cfg.offset, "constant offset");
    pred->add_option("--out", cfg.out, "predictions CSV (default stdout)");

    auto* sel = app.add_subcommand("select", "bi-level variable selection report");
    sel->add_option("--model", cfg.model, "model archive")->required();
    sel->add_option("--out", cfg.out, "selection JSON (default stdout)");

    auto* curve = app.add_subcommand("curve", "estimated smooth contribution on a grid");
    curve->add_option("--model", cfg.model, "model archive")->required();
    curve->add_option("--var", cfg.var, "smoothed variable")->required();
    curve->add_option("--min", cfg.min, "grid start (default: lowest knot)");
    curve->add_option("--max", cfg.max, "grid end (default: highest knot)");
    curve->add_option("--n-points", cfg.n_points, "grid size");
    curve->add_option("--out", cfg.out, "curve CSV (default stdout)");

    auto* sim = app.add_subcommand("sim", "simulate the four-signal additive design");
    sim->add_option("--n", cfg.n, "observations");
    sim->add_option("--p", cfg.p, "predictors (>= 4)");
    sim->add_option("--family", cfg.family, "gaussian, binomial or poisson");
    sim->add_option("--seed", cfg.seed, "random seed");
    sim->add_option("--out", cfg.out, "data CSV (default stdout)");
    sim->add_option("--truth", cfg.truth, "true linear predictor CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_ok;
        }
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        const auto scales = split(ss, ',');
        if (scales.size() != 2) throw ParseError("--ss expects two values: s0,s1");
        cfg.s0 = parse_double(scales[0], "spike scale");
        cfg.s1 = parse_double(scales[1], "slab scale");
        if (!grid.empty()) cfg.s0_grid = parse_grid(grid);
        if (!parametric.empty()) cfg.parametric = split(parametric, ',');

        if (fit->parsed()) cmd_fit(cfg, out);
        else if (tune_cmd->parsed()) cmd_tune(cfg, out);
        else if (pred->parsed()) cmd_predict(cfg, out);
        else if (sel->parsed()) cmd_select(cfg, out);
        else if (curve->parsed()) cmd_curve(cfg, out);
        else if (sim->parsed()) cmd_sim(cfg, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}

} // namespace bham::cli
