#include "centore/domain.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "centore/errors.hpp"

namespace centore {

DomainGrid::DomainGrid(int side_nodes) : n_(side_nodes) {
    if (side_nodes < 3) throw ContractViolation("DomainGrid: need at least 3 nodes per side");
    h_ = 1.0 / (n_ - 1);
    const int cells = n_ - 1;
    triangles_.reserve(2 * cells * cells);
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            const int v00 = node_index(i, j);
            const int v10 = node_index(i + 1, j);
            const int v01 = node_index(i, j + 1);
            const int v11 = node_index(i + 1, j + 1);
            // split along the main diagonal v00 -- v11
            triangles_.push_back({v00, v10, v11});
            triangles_.push_back({v00, v11, v01});
        }
    }
    barycenters_.reserve(triangles_.size());
    for (const auto& t : triangles_) {
        barycenters_.push_back((node(t[0]) + node(t[1]) + node(t[2])) / 3.0);
    }
    incident_.resize(node_count());
    for (int t = 0; t < triangle_count(); ++t)
        for (int v : triangles_[t]) incident_[v].push_back(t);
}

std::vector<int> DomainGrid::interior_nodes() const {
    std::vector<int> out;
    out.reserve((n_ - 2) * (n_ - 2));
    for (int idx = 0; idx < node_count(); ++idx)
        if (!is_boundary_node(idx)) out.push_back(idx);
    return out;
}

SourceMetric::SourceMetric(std::string name, Fn evaluator, bool is_euclidean)
    : name_(std::move(name)), fn_(std::move(evaluator)), euclidean_(is_euclidean) {}

SourceMetric SourceMetric::euclidean() {
    return SourceMetric("euclidean", [](const Eigen::Vector2d&) {
        return Eigen::Matrix2d::Identity().eval();
    }, true);
}

SourceMetric SourceMetric::curved() {
    return SourceMetric("curved", [](const Eigen::Vector2d& x) {
        Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
        g(0, 0) = 1.0 + 0.5 * x(0);
        g(1, 1) = 1.0;
        return g;
    }, false);
}

double SourceMetric::sqrt_det(const Eigen::Vector2d& x) const {
    if (euclidean_) return 1.0;
    const double det = fn_(x).determinant();
    if (det <= 0.0) throw ContractViolation("SourceMetric: nonpositive determinant");
    return std::sqrt(det);
}

OrthonormalFrame build_frame(const SourceMetric& g, const Eigen::Vector2d& x) {
    if (g.is_euclidean()) return OrthonormalFrame{Eigen::Matrix2d::Identity()};
    const Eigen::Matrix2d gx = g.at(x);
    if (gx(0, 1) != gx(1, 0) && std::abs(gx(0, 1) - gx(1, 0)) > 1e-14 * gx.norm())
        throw ContractViolation("build_frame: metric not symmetric");
    Eigen::LLT<Eigen::Matrix2d> llt(gx.inverse());
    if (llt.info() != Eigen::Success)
        throw ContractViolation("build_frame: metric not positive definite");
    return OrthonormalFrame{llt.matrixL()};
}

WindowSpec make_window(const Eigen::Vector2d& x0, double radius) {
    if (radius <= 0.0) throw ContractViolation("make_window: radius must be positive");
    WindowSpec w;
    w.center = x0;
    w.radius = radius;
    const bool inside = (x0(0) - 2.0 * radius >= 0.0) && (x0(0) + 2.0 * radius <= 1.0) &&
                        (x0(1) - 2.0 * radius >= 0.0) && (x0(1) + 2.0 * radius <= 1.0);
    w.kind = inside ? WindowKind::Interior : WindowKind::Clipped;
    return w;
}

WindowElements window_elements(const DomainGrid& grid, const WindowSpec& w) {
    if (w.radius <= grid.spacing()) {
        std::ostringstream msg;
        msg << "window_elements: radius " << w.radius << " must exceed the grid spacing "
            << grid.spacing();
        throw WindowTooSmall(msg.str());
    }
    WindowElements out;
    for (int t = 0; t < grid.triangle_count(); ++t) {
        const Eigen::Vector2d& c = grid.barycenter(t);
        if (std::abs(c(0) - w.center(0)) < w.radius && std::abs(c(1) - w.center(1)) < w.radius) {
            out.triangles.push_back(t);
            for (int v : grid.triangle(t)) out.nodes.push_back(v);
        }
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
    return out;
}

std::vector<double> nested_radii(const DomainGrid& grid, const Eigen::Vector2d& x0, int count) {
    if (count < 3) throw ContractViolation("nested_radii: count >= 3 required");
    // Largest R with Q(x0, 2R) inside the unit square, using only coordinates
    // off the boundary faces; this covers both interior points and edge
    // points (tangential distance).
    double r_max = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int a = 0; a < 2; ++a) {
        const double c = x0(a);
        if (c <= 0.0 || c >= 1.0) continue;
        any = true;
        r_max = std::min(r_max, std::min(c, 1.0 - c) / 2.0);
    }
    if (!any)
        throw ContractViolation("nested_radii: probe point is a domain corner");
    std::vector<double> radii(count);
    for (int k = 0; k < count; ++k) radii[k] = r_max * std::pow(2.0, -k);
    if (radii.back() < 3.0 * grid.spacing()) {
        std::ostringstream msg;
        msg << "nested_radii: smallest radius " << radii.back() << " is below 3h = "
            << 3.0 * grid.spacing() << "; refine the grid or shorten the ladder";
        throw ResolutionTooCoarse(msg.str());
    }
    return radii;
}

BoundaryData::BoundaryData(std::string name, int dim, Fn evaluator, std::string smoothness)
    : name_(std::move(name)), dim_(dim), fn_(std::move(evaluator)),
      smoothness_(std::move(smoothness)) {}

Eigen::VectorXd BoundaryData::at(const Eigen::Vector2d& x) const {
    Eigen::VectorXd v = fn_(x);
    if (!v.allFinite()) throw ContractViolation("BoundaryData: nonfinite value at boundary");
    return v;
}

BoundaryData BoundaryData::affine(const Eigen::Matrix<double, 2, 2>& A, const Eigen::Vector2d& c) {
    return BoundaryData("affine", 2, [A, c](const Eigen::Vector2d& x) {
        return Eigen::VectorXd(A * x + c);
    }, "affine");
}

BoundaryData BoundaryData::constant(const Eigen::VectorXd& value) {
    return BoundaryData("constant", static_cast<int>(value.size()),
                        [value](const Eigen::Vector2d&) { return value; }, "constant");
}

BoundaryData BoundaryData::sine_warp(double amp1, double amp2) {
    // Nonaffine along every boundary edge; the first component crosses zero
    // through the middle of the domain.
    return BoundaryData("sine_warp", 2, [amp1, amp2](const Eigen::Vector2d& x) {
        Eigen::VectorXd v(2);
        v(0) = x(0) - 0.5 + amp1 * std::sin(M_PI * x(0)) * std::cos(M_PI * x(1));
        v(1) = x(1) - 0.5 + amp2 * std::cos(2.0 * M_PI * x(0)) * std::sin(M_PI * x(1));
        return v;
    }, "smooth");
}

} // namespace centore
