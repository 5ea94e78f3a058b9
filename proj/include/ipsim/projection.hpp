#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ipsim {

/// Principal axes of a point cloud, one column per component in order of
/// decreasing variance.
struct Pca {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components; // d x k, orthonormal columns
    Eigen::VectorXd variances;  // k, descending

    /// Rows of `points` (n x d) in component coordinates (n x k).
    Eigen::MatrixXd transform(const Eigen::MatrixXd& points) const;
};

/// Fits from the sample covariance (divisor n - 1, or 1 for a single row).
/// Each component's largest-magnitude entry is made positive; on equal
/// magnitudes the lowest index decides. Throws ShapeError unless
/// 1 <= dims <= d and n >= 1.
Pca fit_pca(const Eigen::MatrixXd& points, int dims = 2);

struct LabelledPoints {
    std::vector<std::string> names;
    Eigen::MatrixXd values; // one row per name
};

/// CSV with a header row; first column is the name, the rest numbers.
LabelledPoints parse_points_csv(const std::string& text);
std::string write_points_csv(const LabelledPoints& points, const std::string& prefix);

} // namespace ipsim
