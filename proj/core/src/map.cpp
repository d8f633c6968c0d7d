#include "centore/map.hpp"

#include <cstring>

#include "centore/errors.hpp"

namespace centore {

DiscreteMap::DiscreteMap(std::shared_ptr<const DomainGrid> grid, int target_dim)
    : grid_(std::move(grid)) {
    if (!grid_) throw ContractViolation("DiscreteMap: null grid");
    if (target_dim < 1) throw ContractViolation("DiscreteMap: target_dim must be positive");
    values_ = Eigen::MatrixXd::Zero(grid_->node_count(), target_dim);
}

DiscreteMap DiscreteMap::from_function(
    std::shared_ptr<const DomainGrid> grid,
    const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& f, int target_dim) {
    DiscreteMap m(grid, target_dim);
    for (int v = 0; v < m.grid().node_count(); ++v) {
        Eigen::VectorXd val = f(m.grid().node(v));
        if (val.size() != target_dim)
            throw ContractViolation("DiscreteMap::from_function: field dimension mismatch");
        m.values_.row(v) = val.transpose();
    }
    return m;
}

DiscreteMap DiscreteMap::interpolate_boundary(std::shared_ptr<const DomainGrid> grid,
                                              const BoundaryData& phi) {
    return from_function(std::move(grid), [&phi](const Eigen::Vector2d& x) { return phi.at(x); },
                         phi.dim());
}

Eigen::VectorXd DiscreteMap::barycentric_value(int t) const {
    const auto& tri = grid_->triangle(t);
    return (values_.row(tri[0]) + values_.row(tri[1]) + values_.row(tri[2])).transpose() / 3.0;
}

Eigen::MatrixXd DiscreteMap::element_gradient(int t) const {
    const auto& tri = grid_->triangle(t);
    const Eigen::Vector2d a = grid_->node(tri[0]);
    const Eigen::Vector2d b = grid_->node(tri[1]);
    const Eigen::Vector2d c = grid_->node(tri[2]);
    Eigen::Matrix2d J;
    J.col(0) = b - a;
    J.col(1) = c - a;
    // u(x) = u_a + U * J^{-1} (x - a) with U = [u_b - u_a | u_c - u_a]
    Eigen::MatrixXd U(target_dim(), 2);
    U.col(0) = (values_.row(tri[1]) - values_.row(tri[0])).transpose();
    U.col(1) = (values_.row(tri[2]) - values_.row(tri[0])).transpose();
    return U * J.inverse();
}

std::uint64_t DiscreteMap::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    const double* data = values_.data();
    const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(values_.size());
    const unsigned char* p = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

double gradient_square_integral(const DiscreteMap& m, const std::vector<int>& triangles) {
    const double area = m.grid().triangle_area();
    double sum = 0.0;
    for (int t : triangles) sum += m.element_gradient(t).squaredNorm() * area;
    return sum;
}

double gradient_power_integral(const DiscreteMap& m, const std::vector<int>& triangles, double q) {
    const double area = m.grid().triangle_area();
    double sum = 0.0;
    for (int t : triangles) sum += std::pow(m.element_gradient(t).norm(), q) * area;
    return sum;
}

Eigen::MatrixXd mean_element_gradient(const DiscreteMap& m, const std::vector<int>& triangles) {
    if (triangles.empty()) throw EmptySampleError("mean_element_gradient: no triangles");
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m.target_dim(), 2);
    for (int t : triangles) mean += m.element_gradient(t);
    return mean / static_cast<double>(triangles.size());
}

Eigen::VectorXd mean_value(const DiscreteMap& m, const std::vector<int>& triangles) {
    if (triangles.empty()) throw EmptySampleError("mean_value: no triangles");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m.target_dim());
    for (int t : triangles) mean += m.barycentric_value(t);
    return mean / static_cast<double>(triangles.size());
}

} // namespace centore
