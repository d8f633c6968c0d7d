#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "centore/domain.hpp"
#include "centore/finsler.hpp"
#include "centore/map.hpp"

namespace centore {

/// Uniformly spaced unit directions on the circle with equal weights 2pi/M.
/// Nodes carry a half-step offset so axis directions are never hit exactly.
class CircleQuadrature {
public:
    explicit CircleQuadrature(int node_count);

    int node_count() const { return static_cast<int>(dirs_.size()); }
    double weight() const { return weight_; }
    const Eigen::Vector2d& direction(int m) const { return dirs_[m]; }

private:
    std::vector<Eigen::Vector2d> dirs_;
    double weight_;
};

/// The 2 x 2 x n x n coefficient array at one (x, u, p): block(a, b) is the
/// n x n matrix indexed by the target components. Symmetric under the joint
/// swap (a, i) <-> (b, j).
struct CoefficientTensor {
    std::array<Eigen::MatrixXd, 4> blocks; // row-major in (a, b)
    bool degenerate = false;               // p = 0 fill convention applied

    const Eigen::MatrixXd& block(int a, int b) const { return blocks[2 * a + b]; }
    Eigen::MatrixXd& block(int a, int b) { return blocks[2 * a + b]; }

    /// Contraction with q(i, a): sum E^{ab}_{ij} q^i_a q^j_b.
    double contract(const Eigen::MatrixXd& q) const;
};

/// Indicatrix-averaged, frame-contracted coefficient tensor at (x, u, p).
/// The disk integral is reduced exactly to a circle integral by the degree-0
/// homogeneity of the fundamental tensor, which contributes the factor 1/4.
/// For p = 0 the fill convention (identity scaled by the midpoint of the
/// declared convexity bounds) applies and the result is flagged degenerate.
CoefficientTensor coefficients(const Eigen::Vector2d& x, const Eigen::VectorXd& u,
                               const Eigen::MatrixXd& p, const FinslerStructure& F,
                               const CircleQuadrature& quad, const OrthonormalFrame& frame,
                               double sqrt_g);

/// coefficients with (x, u) frozen at the window data (x0, uR); the
/// p-dependence is retained.
CoefficientTensor frozen_coefficients(const Eigen::Vector2d& x0, const Eigen::VectorXd& uR,
                                      const Eigen::MatrixXd& p, const FinslerStructure& F,
                                      const CircleQuadrature& quad, const OrthonormalFrame& frame,
                                      double sqrt_g);

/// Energy density E^{ab}_{ij} p^i_a p^j_b / sqrt(g) -- the integral mean of
/// the pulled-back squared norm over the metric unit ball. Zero at p = 0.
double energy_density(const Eigen::Vector2d& x, const Eigen::VectorXd& u,
                      const Eigen::MatrixXd& p, const FinslerStructure& F,
                      const CircleQuadrature& quad, const OrthonormalFrame& frame, double sqrt_g);

/// Direct circle-quadrature disk mean of F^2(u, p xi) (no fundamental
/// tensor); equals energy_density by the degree-2 homogeneity identity.
double density_direct(const Eigen::VectorXd& u, const Eigen::MatrixXd& p,
                      const FinslerStructure& F, const CircleQuadrature& quad,
                      const OrthonormalFrame& frame);

/// Threading knob for the triangle assembly. The reduction shape is fixed
/// (2048-triangle chunks combined in index order), so results are identical
/// for every thread count.
struct AssemblyOptions {
    int threads = 1;
};

/// Total energy: sum over triangles of the coefficient contraction at the
/// barycenter times the triangle area.
double total_energy(const DiscreteMap& m, const FinslerStructure& F, const CircleQuadrature& quad,
                    const SourceMetric& g, const AssemblyOptions& opts = {});

/// Same value through the direct disk mean of F^2 (no fundamental tensor);
/// equal to total_energy by the degree-2 homogeneity identity, exact for
/// analytic tensors. This is the solver's inner-loop objective.
double assembly_energy(const DiscreteMap& m, const FinslerStructure& F,
                       const CircleQuadrature& quad, const SourceMetric& g,
                       const AssemblyOptions& opts = {});

/// Gradient of the discrete energy with respect to nodal values; boundary
/// rows are exactly zero. The X-dependence is differentiated through
/// dF^2/dX on the circle nodes; the u-dependence by central differences in
/// u with step 1e-5.
Eigen::MatrixXd energy_gradient(const DiscreteMap& m, const FinslerStructure& F,
                                const CircleQuadrature& quad, const SourceMetric& g,
                                const AssemblyOptions& opts = {});

// ---------------------------------------------------------------------------
// Window-restricted (frozen) assembly, used by the frozen-functional solver.
// ---------------------------------------------------------------------------

/// Precomputed frozen data of a window: frame, density weight and the frozen
/// target point, all evaluated once at (x0, uR).
struct FrozenWindowData {
    Eigen::Vector2d x0;
    Eigen::VectorXd uR;
    OrthonormalFrame frame;
    double sqrt_g = 1.0;
};

/// Frozen energy of the map restricted to the window triangles.
double frozen_window_energy(const DiscreteMap& m, const std::vector<int>& triangles,
                            const FrozenWindowData& data, const FinslerStructure& F,
                            const CircleQuadrature& quad);

/// Gradient of the frozen window energy with respect to the nodal values of
/// the window nodes; rows outside `free_nodes` are zero.
Eigen::MatrixXd frozen_window_gradient(const DiscreteMap& m, const std::vector<int>& triangles,
                                       const std::vector<int>& free_nodes,
                                       const FrozenWindowData& data, const FinslerStructure& F,
                                       const CircleQuadrature& quad);

} // namespace centore
