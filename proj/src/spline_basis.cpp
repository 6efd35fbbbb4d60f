#include <bham/spline_basis.hpp>
#include <bham/data_frame.hpp>
#include <bham/errors.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace bham {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s)
{
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> split_args(const std::string& args)
{
    std::vector<std::string> parts;
    std::string cur;
    char quote = 0;
    for (char ch : args) {
        if (quote) {
            if (ch == quote) quote = 0;
            cur.push_back(ch);
        } else if (ch == '\'' || ch == '"') {
            quote = ch;
            cur.push_back(ch);
        } else if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    const auto n = v.size();
    const double mean = v.sum() / static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (v[i] - mean) * (v[i] - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// Makes the largest-magnitude entry positive so eigenvector signs are reproducible.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v)
{
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[imax]) + 1e-12) imax = i;
    }
    if (v[imax] < 0) v = -v;
}

// Householder reflector H with H c = -sign(c_0)|c| e_0; returns columns 1..k-1.
Eigen::MatrixXd constraint_null_space(const Eigen::VectorXd& c)
{
    const auto k = c.size();
    Eigen::VectorXd v = c;
    const double alpha = c.norm();
    v[0] += (c[0] >= 0 ? alpha : -alpha);
    const double vv = v.squaredNorm();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k) - (2.0 / vv) * v * v.transpose();
    return h.rightCols(k - 1);
}

// Full k x (k-1) coefficient map, accumulated with explicit loops.
Eigen::MatrixXd combined_map(const SmoothTransform& t)
{
    const auto& z = t.constraint_map;
    const auto& e = t.eigen_map;
    Eigen::MatrixXd m(z.rows(), e.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index l = 0; l < z.cols(); ++l) s += z(i, l) * e(l, j);
            m(i, j) = s;
        }
    }
    return m;
}

// Unscaled reparameterized block, one row at a time.
Eigen::MatrixXd unscaled_block(const SmoothTransform& t, std::span<const double> x)
{
    const Eigen::MatrixXd b = crs::basis(t.knots, x);
    const Eigen::MatrixXd m = combined_map(t);
    Eigen::MatrixXd out(b.rows(), m.cols());
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index l = 0; l < b.cols(); ++l) s += b(i, l) * m(l, j);
            out(i, j) = s;
        }
    }
    return out;
}

} // namespace

const char* to_string(BasisKind kind) noexcept
{
    switch (kind) {
        case BasisKind::cubic_regression: return "cr";
    }
    return "?";
}

BasisKind basis_kind_from_string(const std::string& s)
{
    if (s == "cr") return BasisKind::cubic_regression;
    throw ParseError("unsupported basis '" + s + "' (only bs='cr' is implemented)");
}

SmoothSpec parse_smooth_spec(const std::string& var, const std::string& func,
                             const std::string& args)
{
    SmoothSpec spec;
    spec.var = trim(var);
    spec.args = args;
    if (trim(func) != "s") {
        throw ParseError("unsupported smooth function '" + trim(func) + "' for variable '"
                         + spec.var + "' (expected 's')");
    }
    const auto a = trim(args);
    if (a.empty() || a == "NA") return spec;

    for (const auto& part : split_args(a)) {
        const auto p = trim(part);
        if (p.empty()) continue;
        const auto eq = p.find('=');
        if (eq == std::string::npos) {
            throw ParseError("malformed argument '" + p + "' for variable '" + spec.var + "'");
        }
        const auto key = trim(p.substr(0, eq));
        const auto value = unquote(p.substr(eq + 1));
        if (key == "k") {
            int k = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), k);
            if (ec != std::errc() || ptr != value.data() + value.size()) {
                throw ParseError("k must be an integer for variable '" + spec.var + "', got '"
                                 + value + "'");
            }
            spec.k = k;
        } else if (key == "bs") {
            spec.basis = basis_kind_from_string(value);
        } else {
            throw ParseError("unknown smooth argument '" + key + "' for variable '" + spec.var
                             + "'");
        }
    }
    return spec;
}

SpecTable parse_spec_table(std::istream& in)
{
    auto records = parse_csv_records(in);
    if (records.empty()) throw ParseError("spec file is empty (expected header Var,Func,Args)");
    const auto& header = records.front();
    auto find = [&](const char* name) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
        }
        return -1;
    };
    const auto iv = find("Var"), iff = find("Func"), ia = find("Args");
    if (iv < 0 || iff < 0 || ia < 0) {
        throw ParseError("spec file header must contain Var, Func and Args");
    }
    SpecTable table;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size()) {
            throw ParseError("spec row " + std::to_string(r) + " has " + std::to_string(rec.size())
                             + " fields, expected " + std::to_string(header.size()));
        }
        try {
            table.push_back(parse_smooth_spec(rec[iv], rec[iff], rec[ia]));
        } catch (const ParseError& e) {
            throw ParseError("spec row " + std::to_string(r) + ": " + e.what());
        }
    }
    validate(table);
    return table;
}

SpecTable read_spec_table(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open spec file '" + path + "'");
    return parse_spec_table(in);
}

void validate(const SpecTable& specs)
{
    std::set<std::string> seen;
    for (const auto& s : specs) {
        if (s.var.empty()) throw ParseError("spec row with empty variable name");
        if (!seen.insert(s.var).second) {
            throw ParseError("variable '" + s.var + "' appears more than once in the spec table");
        }
        if (s.k < 4) {
            throw ParseError("k = " + std::to_string(s.k) + " for variable '" + s.var
                             + "' (cubic regression splines need k >= 4)");
        }
    }
}

namespace crs {

std::vector<double> place_knots(std::span<const double> x, int k)
{
    std::vector<double> u(x.begin(), x.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    const auto m = u.size();
    if (k < 2 || m < static_cast<std::size_t>(k)) {
        throw DomainError("degenerate knots: " + std::to_string(m) + " distinct values for "
                          + std::to_string(k) + " knots");
    }
    std::vector<double> knots(k);
    const double delta = static_cast<double>(m - 1) / static_cast<double>(k - 1);
    knots.front() = u.front();
    knots.back() = u.back();
    for (int i = 1; i < k - 1; ++i) {
        const double pos = delta * i;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        knots[i] = lo + 1 < m ? u[lo] * (1.0 - frac) + u[lo + 1] * frac : u[lo];
    }
    return knots;
}

namespace {

struct BandedPieces {
    Eigen::MatrixXd d;   // (k-2) x k
    Eigen::MatrixXd b;   // (k-2) x (k-2)
};

BandedPieces banded_pieces(std::span<const double> knots)
{
    const auto k = static_cast<Eigen::Index>(knots.size());
    if (k < 3) throw DomainError("cubic regression spline needs at least 3 knots");
    Eigen::VectorXd h(k - 1);
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
        h[i] = knots[i + 1] - knots[i];
        if (!(h[i] > 0)) throw DomainError("knots must be strictly increasing");
    }
    BandedPieces p{Eigen::MatrixXd::Zero(k - 2, k), Eigen::MatrixXd::Zero(k - 2, k - 2)};
    for (Eigen::Index i = 0; i < k - 2; ++i) {
        p.d(i, i) = 1.0 / h[i];
        p.d(i, i + 1) = -1.0 / h[i] - 1.0 / h[i + 1];
        p.d(i, i + 2) = 1.0 / h[i + 1];
        p.b(i, i) = (h[i] + h[i + 1]) / 3.0;
        if (i + 1 < k - 2) {
            p.b(i, i + 1) = h[i + 1] / 6.0;
            p.b(i + 1, i) = h[i + 1] / 6.0;
        }
    }
    return p;
}

} // namespace

Eigen::MatrixXd second_derivative_map(std::span<const double> knots)
{
    const auto k = static_cast<Eigen::Index>(knots.size());
    const auto p = banded_pieces(knots);
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(k, k);
    f.middleRows(1, k - 2) = p.b.ldlt().solve(p.d);
    return f;
}

Eigen::MatrixXd penalty(std::span<const double> knots)
{
    const auto p = banded_pieces(knots);
    Eigen::MatrixXd s = p.d.transpose() * p.b.ldlt().solve(p.d);
    return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd basis(std::span<const double> knots, std::span<const double> x)
{
    const auto k = static_cast<Eigen::Index>(knots.size());
    const Eigen::MatrixXd f = second_derivative_map(knots);
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[i];
        if (!std::isfinite(xi)) throw DomainError("non-finite value passed to spline basis");
        if (xi < knots.front()) {
            const double h = knots[1] - knots[0];
            const double dx = xi - knots[0];
            for (Eigen::Index c = 0; c < k; ++c) out(i, c) = -dx * h / 6.0 * f(1, c);
            out(i, 0) += 1.0 - dx / h;
            out(i, 1) += dx / h;
            continue;
        }
        if (xi > knots.back()) {
            const double h = knots[k - 1] - knots[k - 2];
            const double dx = xi - knots[k - 1];
            for (Eigen::Index c = 0; c < k; ++c) out(i, c) = dx * h / 6.0 * f(k - 2, c);
            out(i, k - 1) += 1.0 + dx / h;
            out(i, k - 2) += -dx / h;
            continue;
        }
        auto it = std::upper_bound(knots.begin(), knots.end(), xi);
        auto j = static_cast<Eigen::Index>(it - knots.begin()) - 1;
        j = std::clamp<Eigen::Index>(j, 0, k - 2);
        const double h = knots[j + 1] - knots[j];
        const double right = knots[j + 1] - xi;
        const double left = xi - knots[j];
        const double am = right / h;
        const double ap = left / h;
        const double cm = (right * right * right / h - h * right) / 6.0;
        const double cp = (left * left * left / h - h * left) / 6.0;
        for (Eigen::Index c = 0; c < k; ++c) out(i, c) = cm * f(j, c) + cp * f(j + 1, c);
        out(i, j) += am;
        out(i, j + 1) += ap;
    }
    return out;
}

} // namespace crs

SmoothBlock build_smooth(const SmoothSpec& spec, std::span<const double> x)
{
    const int k = spec.k;
    if (k < 4) {
        throw DomainError("k = " + std::to_string(k) + " for '" + spec.var + "' (need k >= 4)");
    }
    if (x.size() <= static_cast<std::size_t>(k)) {
        throw DomainError("variable '" + spec.var + "' has " + std::to_string(x.size())
                          + " observations; need more than k = " + std::to_string(k));
    }

    SmoothTransform t;
    t.var = spec.var;
    t.basis = spec.basis;
    t.knots = crs::place_knots(x, k);

    // sum-to-zero constraint: coefficients restricted to the complement of 1'B
    const Eigen::MatrixXd b = crs::basis(t.knots, x);
    const Eigen::VectorXd c = b.colwise().sum().transpose();
    t.constraint_map = constraint_null_space(c);

    const Eigen::MatrixXd s = crs::penalty(t.knots);
    Eigen::MatrixXd sc = t.constraint_map.transpose() * s * t.constraint_map;
    sc = 0.5 * (sc + sc.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sc);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of the penalty failed for '" + spec.var + "'");
    }
    const Eigen::VectorXd& values = eig.eigenvalues();   // ascending
    const Eigen::MatrixXd& vectors = eig.eigenvectors();
    const auto m = values.size();
    const double tol_eig = values[m - 1] * 1e-10;
    Eigen::Index n_null = 0;
    while (n_null < m && values[n_null] < tol_eig) ++n_null;
    if (n_null != 1) {
        throw NumericError("degenerate basis for '" + spec.var + "': null space of dimension "
                           + std::to_string(n_null) + " after constraint");
    }

    t.eigen_map.resize(m, m);
    t.eigenvalues.resize(m);
    for (Eigen::Index j = 0; j < m - 1; ++j) {
        const auto src = m - 1 - j;   // decreasing eigenvalue order
        Eigen::VectorXd v = vectors.col(src);
        fix_sign(v);
        t.eigen_map.col(j) = v / std::sqrt(values[src]);
        t.eigenvalues[j] = values[src];
        t.column_names.push_back(spec.var + ".pen" + std::to_string(j + 1));
    }
    Eigen::VectorXd vnull = vectors.col(0);
    fix_sign(vnull);
    t.eigen_map.col(m - 1) = vnull;
    t.eigenvalues[m - 1] = 0.0;
    t.column_names.push_back(spec.var + ".null1");

    const Eigen::MatrixXd raw = unscaled_block(t, x);
    t.column_scales.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double sd = sample_sd(raw.col(j));
        if (!(sd > 1e-12) || !std::isfinite(sd)) {
            throw NumericError("degenerate basis: column '" + t.column_names[j]
                               + "' has zero variance");
        }
        t.column_scales[j] = sd;
    }

    SmoothBlock out{apply_transform(t, x), std::move(t)};
    return out;
}

Eigen::MatrixXd apply_transform(const SmoothTransform& t, std::span<const double> x)
{
    Eigen::MatrixXd out = unscaled_block(t, x);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double s = t.column_scales[j];
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) /= s;
    }
    return out;
}

Eigen::MatrixXd reparameterized_penalty(const SmoothTransform& t)
{
    const Eigen::MatrixXd s = crs::penalty(t.knots);
    const Eigen::MatrixXd m = t.constraint_map * t.eigen_map;
    return m.transpose() * s * m;
}

} // namespace bham
