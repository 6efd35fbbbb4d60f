#include <bham/design.hpp>
#include <bham/errors.hpp>

#include <map>
#include <regex>
#include <set>

namespace bham {

AdditiveDesign construct_smooth_data(const SpecTable& specs, const DataFrame& data,
                                     const std::vector<std::string>& parametric)
{
    validate(specs);
    AdditiveDesign design;
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index total = 0;

    for (const auto& spec : specs) {
        auto x = data.complete_numeric(spec.var);
        auto sb = build_smooth(spec, x);
        total += sb.block.cols();
        blocks.push_back(std::move(sb.block));
        for (const auto& name : sb.transform.column_names) design.column_names.push_back(name);
        design.transforms.push_back(std::move(sb.transform));
    }
    for (const auto& name : parametric) {
        data.complete_numeric(name);
        design.column_names.push_back(name);
        design.parametric.push_back(name);
        ++total;
    }
    std::set<std::string> unique(design.column_names.begin(), design.column_names.end());
    if (unique.size() != design.column_names.size()) {
        throw SchemaError("design column names are not unique");
    }

    const auto n = static_cast<Eigen::Index>(data.rows());
    design.matrix.resize(n, total);
    Eigen::Index col = 0;
    for (const auto& b : blocks) {
        design.matrix.middleCols(col, b.cols()) = b;
        col += b.cols();
    }
    for (const auto& name : parametric) {
        auto x = data.complete_numeric(name);
        for (Eigen::Index i = 0; i < n; ++i) design.matrix(i, col) = x[i];
        ++col;
    }
    return design;
}

Eigen::MatrixXd make_predict_dat(const std::vector<SmoothTransform>& transforms,
                                 const DataFrame& new_data,
                                 const std::vector<std::string>& parametric)
{
    Eigen::Index total = 0;
    for (const auto& t : transforms) total += static_cast<Eigen::Index>(t.column_names.size());
    total += static_cast<Eigen::Index>(parametric.size());

    const auto n = static_cast<Eigen::Index>(new_data.rows());
    Eigen::MatrixXd out(n, total);
    Eigen::Index col = 0;
    for (const auto& t : transforms) {
        auto block = apply_transform(t, new_data.complete_numeric(t.var));
        out.middleCols(col, block.cols()) = block;
        col += block.cols();
    }
    for (const auto& name : parametric) {
        auto x = new_data.complete_numeric(name);
        for (Eigen::Index i = 0; i < n; ++i) out(i, col) = x[i];
        ++col;
    }
    return out;
}

GroupStructure make_group(const std::vector<std::string>& column_names)
{
    static const std::regex pattern(R"(^(.+)\.(pen|null)([0-9]+)$)");
    GroupStructure gs;
    gs.n_cols = static_cast<int>(column_names.size());
    std::map<std::string, std::size_t> index;

    for (int c = 0; c < gs.n_cols; ++c) {
        std::smatch m;
        const auto& name = column_names[c];
        if (!std::regex_match(name, m, pattern)) {
            gs.parametric_cols.push_back(c);
            gs.parametric_names.push_back(name);
            continue;
        }
        const auto var = m[1].str();
        auto [it, inserted] = index.try_emplace(var, gs.groups.size());
        if (inserted) gs.groups.push_back({var, {}, {}});
        auto& g = gs.groups[it->second];
        (m[2] == "null" ? g.null_cols : g.pen_cols).push_back(c);
    }
    return gs;
}

} // namespace bham
