#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "centore/energy.hpp"

namespace centore {

enum class DescentMethod { GradientDescent, NonlinearCG };

struct SolveConfig {
    int max_iterations = 2000;
    double gradient_tolerance = 1e-8; // sup-norm of the nodal gradient
    double armijo_slope = 1e-4;
    double backtrack_factor = 0.5;
    DescentMethod method = DescentMethod::NonlinearCG;
    int restart_interval = 50;
    std::uint64_t deterministic_seed = 0;
    int threads = 1;

    void validate() const;
};

struct SolveResult {
    explicit SolveResult(DiscreteMap m) : map(std::move(m)) {}

    DiscreteMap map;
    int iterations = 0;
    double final_energy = 0.0;
    double final_gradient_sup = 0.0;
    std::vector<double> energy_history; // nonincreasing, one entry per iterate
    bool converged = false;
    std::uint64_t init_hash = 0;
};

/// Componentwise discrete harmonic extension of the boundary data: the
/// P1 Dirichlet problem of the flat Laplacian, solved directly.
DiscreteMap harmonic_extension(std::shared_ptr<const DomainGrid> grid, const BoundaryData& phi);

/// Minimizes the discrete energy over maps agreeing with phi on the boundary.
/// Armijo backtracking keeps the energy history strictly nonincreasing; stops
/// at the gradient tolerance or the iteration cap. Throws StagnationError if
/// the line search fails after 60 halvings.
SolveResult minimize(const FinslerStructure& F, std::shared_ptr<const DomainGrid> grid,
                     const SourceMetric& g, const BoundaryData& phi,
                     const CircleQuadrature& quad, const SolveConfig& cfg,
                     const std::optional<DiscreteMap>& init = std::nullopt);

/// Minimizes the frozen-coefficient window functional over maps agreeing
/// with u outside and on the rim of the window. The freeze point is
/// (window center, area-weighted window mean of u).
SolveResult frozen_minimize(const FinslerStructure& F, const DomainGrid& grid,
                            const SourceMetric& g, const WindowSpec& window, const DiscreteMap& u,
                            const CircleQuadrature& quad, const SolveConfig& cfg);

/// Nodes of the window whose incident triangles all lie inside the window
/// (the free unknowns of the frozen solve).
std::vector<int> window_free_nodes(const DomainGrid& grid, const WindowElements& elements);

} // namespace centore
