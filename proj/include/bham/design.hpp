#pragma once
#include <bham/data_frame.hpp>
#include <bham/spline_basis.hpp>

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bham {

/// Stacked design: smooth blocks in spec order, then any parametric
/// (unsmoothed, raw) columns.
struct AdditiveDesign
{
    Eigen::MatrixXd matrix;
    std::vector<std::string> column_names;
    std::vector<SmoothTransform> transforms;
    std::vector<std::string> parametric;
};

/// Column index sets per smoothed variable plus the ungrouped columns.
struct GroupStructure
{
    struct Group {
        std::string var;
        std::vector<int> null_cols;
        std::vector<int> pen_cols;
    };

    std::vector<Group> groups;
    std::vector<int> parametric_cols;
    std::vector<std::string> parametric_names;
    int n_cols = 0;

    /// Number of prior "variables": one per smooth group plus one per
    /// parametric column.
    int n_variables() const noexcept
    {
        return static_cast<int>(groups.size() + parametric_cols.size());
    }
};

AdditiveDesign construct_smooth_data(const SpecTable& specs, const DataFrame& data,
                                     const std::vector<std::string>& parametric = {});

/// Rebuilds a design conformable with the training one from stored
/// transforms; never refits knots or scales.
Eigen::MatrixXd make_predict_dat(const std::vector<SmoothTransform>& transforms,
                                 const DataFrame& new_data,
                                 const std::vector<std::string>& parametric = {});

/// Groups `<var>.pen<i>` / `<var>.null<i>` columns by variable; anything
/// else is parametric.
GroupStructure make_group(const std::vector<std::string>& column_names);

} // namespace bham
