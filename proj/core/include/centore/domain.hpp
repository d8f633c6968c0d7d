#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace centore {

/// Uniform triangulation of the unit square: N x N nodes, each cell split
/// along its main diagonal into two positively oriented triangles.
class DomainGrid {
public:
    explicit DomainGrid(int side_nodes);

    int side_nodes() const { return n_; }
    double spacing() const { return h_; }
    int node_count() const { return n_ * n_; }
    int triangle_count() const { return 2 * (n_ - 1) * (n_ - 1); }

    int node_index(int i, int j) const { return j * n_ + i; }
    Eigen::Vector2d node(int idx) const {
        return {h_ * (idx % n_), h_ * (idx / n_)};
    }
    bool is_boundary_node(int idx) const {
        const int i = idx % n_, j = idx / n_;
        return i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1;
    }

    /// Vertex node indices of triangle t, counterclockwise.
    const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
    double triangle_area() const { return 0.5 * h_ * h_; }
    const Eigen::Vector2d& barycenter(int t) const { return barycenters_[t]; }

    /// Triangles incident to a node, in index order.
    const std::vector<int>& incident_triangles(int node) const { return incident_[node]; }

    std::vector<int> interior_nodes() const;

private:
    int n_;
    double h_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Eigen::Vector2d> barycenters_;
    std::vector<std::vector<int>> incident_;
};

/// Riemannian metric on the source square, given pointwise as an SPD 2x2.
class SourceMetric {
public:
    using Fn = std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>;

    static SourceMetric euclidean();
    /// g = diag(1 + x1/2, 1).
    static SourceMetric curved();

    SourceMetric(std::string name, Fn evaluator, bool is_euclidean);

    const std::string& name() const { return name_; }
    bool is_euclidean() const { return euclidean_; }
    Eigen::Matrix2d at(const Eigen::Vector2d& x) const { return fn_(x); }
    double sqrt_det(const Eigen::Vector2d& x) const;

private:
    std::string name_;
    Fn fn_;
    bool euclidean_;
};

/// Frame matrix eta with eta * eta^T = g^{-1}(x).
struct OrthonormalFrame {
    Eigen::Matrix2d eta;
};

/// Cholesky frame of the inverse metric at x.
OrthonormalFrame build_frame(const SourceMetric& g, const Eigen::Vector2d& x);

enum class WindowKind { Interior, Clipped };

/// Axis-aligned open square of half-side R about x0, clipped to the domain.
struct WindowSpec {
    Eigen::Vector2d center;
    double radius = 0.0;
    WindowKind kind = WindowKind::Interior;
};

/// Classifies the window as interior (Q(x0, 2R) inside the unit square) or
/// clipped, without touching the grid.
WindowSpec make_window(const Eigen::Vector2d& x0, double radius);

/// Triangle and node subsets covered by a window.
struct WindowElements {
    std::vector<int> triangles; // barycenter strictly inside the square
    std::vector<int> nodes;     // nodes of those triangles, sorted unique
};

/// Triangles whose barycenters lie in the open square of half-side R about
/// the window center; membership is by strict inequality. Requires R > h.
WindowElements window_elements(const DomainGrid& grid, const WindowSpec& w);

/// Geometric radius ladder rho_k = R_max 2^{-k}, k = 0..count-1, with R_max
/// the largest radius keeping Q(x0, 2 R_max) inside the domain for interior
/// points (for edge points, the tangential distance rule). Requires
/// rho_{count-1} >= 3h.
std::vector<double> nested_radii(const DomainGrid& grid, const Eigen::Vector2d& x0, int count);

/// Prescribed boundary values phi: evaluable on the closed domain.
class BoundaryData {
public:
    using Fn = std::function<Eigen::VectorXd(const Eigen::Vector2d&)>;

    BoundaryData(std::string name, int dim, Fn evaluator, std::string smoothness);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const std::string& smoothness() const { return smoothness_; }
    Eigen::VectorXd at(const Eigen::Vector2d& x) const;

    /// phi(x) = A x + c.
    static BoundaryData affine(const Eigen::Matrix<double, 2, 2>& A, const Eigen::Vector2d& c);
    static BoundaryData constant(const Eigen::VectorXd& value);
    /// Smooth nonaffine data whose first component crosses zero inside the
    /// domain (so rough-in-u metrics see their rough set).
    static BoundaryData sine_warp(double amp1, double amp2);

private:
    std::string name_;
    int dim_;
    Fn fn_;
    std::string smoothness_;
};

} // namespace centore
