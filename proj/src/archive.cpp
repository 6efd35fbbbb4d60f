#include <bham/archive.hpp>
#include <bham/data_frame.hpp>
#include <bham/errors.hpp>

#include <json.hpp>

namespace bham {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string("model archive: missing field '") + key + "'");
    }
    return j.at(key);
}

template <class T>
T get(const json& j, const char* key)
{
    try {
        return field(j, key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("model archive: bad field '") + key + "': " + e.what());
    }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* key)
{
    const auto rows = get<std::vector<std::vector<double>>>(j, key);
    const auto nr = static_cast<Eigen::Index>(rows.size());
    const auto nc = nr ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != nc) {
            throw ParseError(std::string("model archive: ragged matrix '") + key + "'");
        }
        for (Eigen::Index j2 = 0; j2 < nc; ++j2) m(i, j2) = rows[i][j2];
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, const char* key)
{
    const auto v = get<std::vector<double>>(j, key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

} // namespace

std::string to_json(const ModelArchive& a)
{
    json j;
    j["format"] = "bham-model";
    j["version"] = ModelArchive::format_version;
    j["outcome"] = {{"column", a.outcome}, {"status", a.status}};

    j["specs"] = json::array();
    for (const auto& s : a.specs) {
        j["specs"].push_back({{"var", s.var}, {"func", "s"}, {"bs", to_string(s.basis)},
                              {"k", s.k}, {"args", s.args}});
    }
    j["parametric"] = a.parametric;

    j["transforms"] = json::array();
    for (const auto& t : a.transforms) {
        j["transforms"].push_back({{"var", t.var},
                                   {"bs", to_string(t.basis)},
                                   {"knots", t.knots},
                                   {"constraint_map", matrix_to_json(t.constraint_map)},
                                   {"eigen_map", matrix_to_json(t.eigen_map)},
                                   {"column_scales", t.column_scales},
                                   {"column_names", t.column_names},
                                   {"eigenvalues", t.eigenvalues}});
    }

    const auto& m = a.model;
    json groups = json::array();
    for (const auto& g : m.groups.groups) {
        groups.push_back({{"var", g.var}, {"null_cols", g.null_cols}, {"pen_cols", g.pen_cols}});
    }
    json inclusion = json::array();
    for (const auto& s : m.inclusion) {
        inclusion.push_back({{"p_lin", s.p_lin}, {"p_non", s.p_non}, {"theta", s.theta}});
    }
    j["model"] = {
        {"family", to_string(m.family)},
        {"config", {{"s0", m.config.s0}, {"s1", m.config.s1}, {"a", m.config.a},
                    {"b", m.config.b}, {"max_em_iter", m.config.max_em_iter},
                    {"tol", m.config.tol}}},
        {"groups", {{"groups", groups}, {"parametric_cols", m.groups.parametric_cols},
                    {"parametric_names", m.groups.parametric_names},
                    {"n_cols", m.groups.n_cols}}},
        {"intercept", m.intercept},
        {"coefficients", to_std(m.coefficients)},
        {"penalties", to_std(m.penalties)},
        {"inclusion", inclusion},
        {"n_iter", m.n_iter},
        {"converged", m.converged},
        {"final_deviance", m.final_deviance},
        {"objective", m.objective},
        {"dispersion", m.dispersion},
        {"offset", m.offset},
    };
    return j.dump(1);
}

ModelArchive archive_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model archive is not valid JSON: ") + e.what());
    }
    if (get<std::string>(j, "format") != "bham-model") {
        throw ParseError("not a bham model archive");
    }
    const int version = get<int>(j, "version");
    if (version > ModelArchive::format_version) {
        throw ParseError("model archive version " + std::to_string(version)
                         + " is newer than this build supports ("
                         + std::to_string(ModelArchive::format_version) + ")");
    }
    if (version < 1) throw ParseError("invalid model archive version");

    ModelArchive a;
    const auto& outcome = field(j, "outcome");
    a.outcome = get<std::string>(outcome, "column");
    a.status = get<std::string>(outcome, "status");

    for (const auto& s : field(j, "specs")) {
        SmoothSpec spec;
        spec.var = get<std::string>(s, "var");
        spec.basis = basis_kind_from_string(get<std::string>(s, "bs"));
        spec.k = get<int>(s, "k");
        spec.args = get<std::string>(s, "args");
        a.specs.push_back(std::move(spec));
    }
    a.parametric = get<std::vector<std::string>>(j, "parametric");

    for (const auto& tj : field(j, "transforms")) {
        SmoothTransform t;
        t.var = get<std::string>(tj, "var");
        t.basis = basis_kind_from_string(get<std::string>(tj, "bs"));
        t.knots = get<std::vector<double>>(tj, "knots");
        t.constraint_map = matrix_from_json(tj, "constraint_map");
        t.eigen_map = matrix_from_json(tj, "eigen_map");
        t.column_scales = get<std::vector<double>>(tj, "column_scales");
        t.column_names = get<std::vector<std::string>>(tj, "column_names");
        t.eigenvalues = get<std::vector<double>>(tj, "eigenvalues");
        const auto k = static_cast<Eigen::Index>(t.knots.size());
        if (k < 4 || t.constraint_map.rows() != k || t.constraint_map.cols() != k - 1
            || t.eigen_map.rows() != k - 1 || t.eigen_map.cols() != k - 1
            || static_cast<Eigen::Index>(t.column_scales.size()) != k - 1
            || static_cast<Eigen::Index>(t.column_names.size()) != k - 1) {
            throw ParseError("model archive: inconsistent transform for '" + t.var + "'");
        }
        a.transforms.push_back(std::move(t));
    }

    const auto& mj = field(j, "model");
    auto& m = a.model;
    m.family = family_from_string(get<std::string>(mj, "family"));
    const auto& cj = field(mj, "config");
    m.config.s0 = get<double>(cj, "s0");
    m.config.s1 = get<double>(cj, "s1");
    m.config.a = get<double>(cj, "a");
    m.config.b = get<double>(cj, "b");
    m.config.max_em_iter = get<int>(cj, "max_em_iter");
    m.config.tol = get<double>(cj, "tol");

    const auto& gj = field(mj, "groups");
    for (const auto& g : field(gj, "groups")) {
        m.groups.groups.push_back({get<std::string>(g, "var"), get<std::vector<int>>(g, "null_cols"),
                                   get<std::vector<int>>(g, "pen_cols")});
    }
    m.groups.parametric_cols = get<std::vector<int>>(gj, "parametric_cols");
    m.groups.parametric_names = get<std::vector<std::string>>(gj, "parametric_names");
    m.groups.n_cols = get<int>(gj, "n_cols");

    m.intercept = get<double>(mj, "intercept");
    m.coefficients = vector_from_json(mj, "coefficients");
    m.penalties = vector_from_json(mj, "penalties");
    for (const auto& s : field(mj, "inclusion")) {
        m.inclusion.push_back({get<double>(s, "p_lin"), get<double>(s, "p_non"),
                               get<double>(s, "theta")});
    }
    m.n_iter = get<int>(mj, "n_iter");
    m.converged = get<bool>(mj, "converged");
    m.final_deviance = get<double>(mj, "final_deviance");
    m.objective = get<double>(mj, "objective");
    m.dispersion = get<double>(mj, "dispersion");
    m.offset = get<double>(mj, "offset");

    if (m.coefficients.size() != m.groups.n_cols) {
        throw ParseError("model archive: coefficient count does not match the group structure");
    }
    Eigen::Index expected = static_cast<Eigen::Index>(a.parametric.size());
    for (const auto& t : a.transforms) expected += static_cast<Eigen::Index>(t.column_names.size());
    if (expected != m.coefficients.size()) {
        throw ParseError("model archive: transforms do not match the coefficient vector");
    }
    return a;
}

void save_archive(const std::filesystem::path& path, const ModelArchive& archive)
{
    write_file_atomic(path, to_json(archive));
}

ModelArchive load_archive(const std::filesystem::path& path)
{
    return archive_from_json(read_file(path));
}

} // namespace bham
