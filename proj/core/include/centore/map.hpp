#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "centore/domain.hpp"

namespace centore {

/// Piecewise-linear map from the triangulated square into R^n, stored as one
/// R^n value per grid node. Boundary nodes are pinned to the boundary data
/// they were built from; mutating operations must not touch them.
class DiscreteMap {
public:
    DiscreteMap(std::shared_ptr<const DomainGrid> grid, int target_dim);

    /// Nodal interpolation of an arbitrary field (synthetic diagnostics inputs).
    static DiscreteMap from_function(std::shared_ptr<const DomainGrid> grid,
                                     const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& f,
                                     int target_dim);
    /// Nodal interpolation of boundary data on the whole closed square.
    static DiscreteMap interpolate_boundary(std::shared_ptr<const DomainGrid> grid,
                                            const BoundaryData& phi);

    const DomainGrid& grid() const { return *grid_; }
    std::shared_ptr<const DomainGrid> grid_ptr() const { return grid_; }
    int target_dim() const { return static_cast<int>(values_.cols()); }

    /// node_count x n matrix of nodal values.
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }

    Eigen::VectorXd value_at_node(int node) const { return values_.row(node).transpose(); }

    /// Barycentric target value of triangle t.
    Eigen::VectorXd barycentric_value(int t) const;

    /// Constant gradient p of the linear interpolant on triangle t, as the
    /// n x 2 matrix p(i, a) = D_a u^i.
    Eigen::MatrixXd element_gradient(int t) const;

    /// FNV-1a hash of the nodal bytes; used by read-only assertions.
    std::uint64_t content_hash() const;

private:
    std::shared_ptr<const DomainGrid> grid_;
    Eigen::MatrixXd values_;
};

/// Squared Frobenius norm of the element gradient summed with weight
/// area over the given triangles (int |Du|^2 over the covered region).
double gradient_square_integral(const DiscreteMap& m, const std::vector<int>& triangles);

/// Same with |Du|^q instead of |Du|^2.
double gradient_power_integral(const DiscreteMap& m, const std::vector<int>& triangles, double q);

/// Area-weighted mean of element gradients over the given triangles.
Eigen::MatrixXd mean_element_gradient(const DiscreteMap& m, const std::vector<int>& triangles);

/// Area-weighted mean of barycentric values over the given triangles
/// (the window integral mean of the map).
Eigen::VectorXd mean_value(const DiscreteMap& m, const std::vector<int>& triangles);

} // namespace centore
