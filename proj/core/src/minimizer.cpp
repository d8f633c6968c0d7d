#include "centore/minimizer.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "centore/errors.hpp"

namespace centore {

void SolveConfig::validate() const {
    if (max_iterations < 0) throw ContractViolation("SolveConfig: max_iterations < 0");
    if (gradient_tolerance <= 0.0)
        throw ContractViolation("SolveConfig: gradient_tolerance must be positive");
    if (armijo_slope <= 0.0 || armijo_slope >= 1.0)
        throw ContractViolation("SolveConfig: armijo_slope must lie in (0, 1)");
    if (backtrack_factor <= 0.0 || backtrack_factor >= 1.0)
        throw ContractViolation("SolveConfig: backtrack_factor must lie in (0, 1)");
    if (restart_interval < 1) throw ContractViolation("SolveConfig: restart_interval < 1");
    if (threads < 1) throw ContractViolation("SolveConfig: threads < 1");
}

DiscreteMap harmonic_extension(std::shared_ptr<const DomainGrid> grid, const BoundaryData& phi) {
    const DomainGrid& G = *grid;
    DiscreteMap m = DiscreteMap::interpolate_boundary(grid, phi);
    const std::vector<int> interior = G.interior_nodes();
    if (interior.empty()) return m;

    std::vector<int> dof(G.node_count(), -1);
    for (std::size_t k = 0; k < interior.size(); ++k) dof[interior[k]] = static_cast<int>(k);

    const int n_int = static_cast<int>(interior.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * n_int);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_int, m.target_dim());

    const double area = G.triangle_area();
    for (int t = 0; t < G.triangle_count(); ++t) {
        const auto& tri = G.triangle(t);
        const Eigen::Vector2d a = G.node(tri[0]);
        Eigen::Matrix2d J;
        J.col(0) = G.node(tri[1]) - a;
        J.col(1) = G.node(tri[2]) - a;
        const Eigen::Matrix2d K = J.inverse();
        Eigen::Matrix<double, 2, 3> hats;
        hats.col(1) = K.row(0).transpose();
        hats.col(2) = K.row(1).transpose();
        hats.col(0) = -(hats.col(1) + hats.col(2));
        for (int r = 0; r < 3; ++r) {
            if (dof[tri[r]] < 0) continue;
            for (int s = 0; s < 3; ++s) {
                const double k_rs = area * hats.col(r).dot(hats.col(s));
                if (dof[tri[s]] >= 0) {
                    trips.emplace_back(dof[tri[r]], dof[tri[s]], k_rs);
                } else {
                    rhs.row(dof[tri[r]]) -= k_rs * m.values().row(tri[s]);
                }
            }
        }
    }

    Eigen::SparseMatrix<double> K(n_int, n_int);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success)
        throw ContractViolation("harmonic_extension: stiffness factorization failed");
    const Eigen::MatrixXd sol = solver.solve(rhs);
    for (int k = 0; k < n_int; ++k) m.values().row(interior[k]) = sol.row(k);
    return m;
}

namespace {

struct DescentStats {
    int iterations = 0;
    double final_gradient_sup = 0.0;
    std::vector<double> energy_history;
    bool converged = false;
};

// Nonlinear CG (Polak-Ribiere with nonnegativity clamp and periodic
// restarts) or plain gradient descent, with Armijo backtracking.
DescentStats run_descent(const std::function<double()>& value,
                         const std::function<Eigen::VectorXd()>& gradient,
                         const std::function<Eigen::VectorXd()>& get_x,
                         const std::function<void(const Eigen::VectorXd&)>& set_x,
                         const SolveConfig& cfg) {
    DescentStats stats;
    double energy = value();
    stats.energy_history.push_back(energy);

    Eigen::VectorXd x = get_x();
    Eigen::VectorXd grad = gradient();
    double grad_sup = grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    Eigen::VectorXd direction = -grad;
    double step = 1.0;

    while (grad_sup > cfg.gradient_tolerance && stats.iterations < cfg.max_iterations) {
        double slope = direction.dot(grad);
        if (!(slope < 0.0)) { // not a descent direction, restart on -grad
            direction = -grad;
            slope = -grad.squaredNorm();
            if (!(slope < 0.0)) break; // gradient numerically zero
        }

        double t = step * 2.0;
        bool accepted = false;
        double trial_energy = energy;
        for (int halvings = 0; halvings <= 60; ++halvings) {
            set_x(x + t * direction);
            trial_energy = value();
            if (trial_energy <= energy + cfg.armijo_slope * t * slope) {
                accepted = true;
                break;
            }
            t *= cfg.backtrack_factor;
        }
        if (!accepted) {
            set_x(x); // restore the last accepted iterate
            std::ostringstream msg;
            msg << "descent stagnated at iteration " << stats.iterations << ": no Armijo step in "
                   "60 halvings (energy " << energy << ", gradient sup-norm " << grad_sup << ")";
            throw StagnationError(msg.str());
        }

        // floating-point stall: the accepted step no longer moves the iterate
        if (trial_energy == energy && t * direction.lpNorm<Eigen::Infinity>() < 1e-30) {
            set_x(x);
            break;
        }

        x += t * direction;
        step = t;
        energy = trial_energy;
        stats.energy_history.push_back(energy);
        ++stats.iterations;

        const Eigen::VectorXd grad_new = gradient();
        grad_sup = grad_new.lpNorm<Eigen::Infinity>();
        if (grad_sup <= cfg.gradient_tolerance) {
            grad = grad_new;
            break;
        }

        if (cfg.method == DescentMethod::GradientDescent ||
            stats.iterations % cfg.restart_interval == 0) {
            direction = -grad_new;
        } else {
            const double denom = grad.squaredNorm();
            double beta = denom > 0.0 ? grad_new.dot(grad_new - grad) / denom : 0.0;
            beta = std::max(beta, 0.0);
            direction = -grad_new + beta * direction;
        }
        grad = grad_new;
    }

    stats.final_gradient_sup = grad_sup;
    stats.converged = grad_sup <= cfg.gradient_tolerance;
    return stats;
}

// Flatten/unflatten a row subset of the nodal matrix.
Eigen::VectorXd flatten_rows(const Eigen::MatrixXd& values, const std::vector<int>& rows) {
    const int n = static_cast<int>(values.cols());
    Eigen::VectorXd x(static_cast<int>(rows.size()) * n);
    for (std::size_t k = 0; k < rows.size(); ++k)
        x.segment(static_cast<int>(k) * n, n) = values.row(rows[k]).transpose();
    return x;
}

void unflatten_rows(const Eigen::VectorXd& x, const std::vector<int>& rows,
                    Eigen::MatrixXd& values) {
    const int n = static_cast<int>(values.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        values.row(rows[k]) = x.segment(static_cast<int>(k) * n, n).transpose();
}

} // namespace

SolveResult minimize(const FinslerStructure& F, std::shared_ptr<const DomainGrid> grid,
                     const SourceMetric& g, const BoundaryData& phi,
                     const CircleQuadrature& quad, const SolveConfig& cfg,
                     const std::optional<DiscreteMap>& init) {
    cfg.validate();
    if (phi.dim() != F.target_dim())
        throw ContractViolation("minimize: boundary data / metric dimension mismatch");

    DiscreteMap work = init ? *init : harmonic_extension(grid, phi);
    if (init) {
        for (int v = 0; v < grid->node_count(); ++v) {
            if (!grid->is_boundary_node(v)) continue;
            const Eigen::VectorXd expect = phi.at(grid->node(v));
            if ((work.values().row(v).transpose() - expect).lpNorm<Eigen::Infinity>() > 1e-12)
                throw ContractViolation("minimize: init map does not respect boundary pinning");
        }
    }
    const std::uint64_t init_hash = work.content_hash();

    const std::vector<int> interior = grid->interior_nodes();
    const AssemblyOptions assembly{cfg.threads};

    auto value = [&]() { return assembly_energy(work, F, quad, g, assembly); };
    auto gradient = [&]() {
        return flatten_rows(energy_gradient(work, F, quad, g, assembly), interior);
    };
    auto get_x = [&]() { return flatten_rows(work.values(), interior); };
    auto set_x = [&](const Eigen::VectorXd& x) { unflatten_rows(x, interior, work.values()); };

    const DescentStats stats = run_descent(value, gradient, get_x, set_x, cfg);

    SolveResult result{std::move(work)};
    result.iterations = stats.iterations;
    result.final_energy = stats.energy_history.back();
    result.final_gradient_sup = stats.final_gradient_sup;
    result.energy_history = stats.energy_history;
    result.converged = stats.converged;
    result.init_hash = init_hash;
    return result;
}

std::vector<int> window_free_nodes(const DomainGrid& grid, const WindowElements& elements) {
    std::vector<char> in_window(grid.triangle_count(), 0);
    for (int t : elements.triangles) in_window[t] = 1;
    std::vector<int> free_nodes;
    for (int v : elements.nodes) {
        const auto& incident = grid.incident_triangles(v);
        const bool interior_to_window =
            std::all_of(incident.begin(), incident.end(), [&](int t) { return in_window[t]; });
        if (interior_to_window && !grid.is_boundary_node(v)) free_nodes.push_back(v);
    }
    return free_nodes;
}

SolveResult frozen_minimize(const FinslerStructure& F, const DomainGrid& grid,
                            const SourceMetric& g, const WindowSpec& window, const DiscreteMap& u,
                            const CircleQuadrature& quad, const SolveConfig& cfg) {
    cfg.validate();
    if (window.kind != WindowKind::Interior)
        throw ContractViolation("frozen_minimize: window must be interior");
    if (u.target_dim() != F.target_dim())
        throw ContractViolation("frozen_minimize: map/metric dimension mismatch");

    const WindowElements elements = window_elements(grid, window);
    if (elements.triangles.empty())
        throw ContractViolation("frozen_minimize: window covers no triangles");
    const std::vector<int> free_nodes = window_free_nodes(grid, elements);

    FrozenWindowData data;
    data.x0 = window.center;
    data.uR = mean_value(u, elements.triangles);
    data.frame = build_frame(g, window.center);
    data.sqrt_g = g.sqrt_det(window.center);

    DiscreteMap work = u;
    const std::uint64_t init_hash = work.content_hash();

    SolveResult result{std::move(work)};
    result.init_hash = init_hash;
    if (free_nodes.empty()) {
        result.final_energy = frozen_window_energy(result.map, elements.triangles, data, F, quad);
        result.energy_history.push_back(result.final_energy);
        result.converged = true;
        return result;
    }

    auto value = [&]() {
        return frozen_window_energy(result.map, elements.triangles, data, F, quad);
    };
    auto gradient = [&]() {
        return flatten_rows(
            frozen_window_gradient(result.map, elements.triangles, free_nodes, data, F, quad),
            free_nodes);
    };
    auto get_x = [&]() { return flatten_rows(result.map.values(), free_nodes); };
    auto set_x = [&](const Eigen::VectorXd& x) {
        unflatten_rows(x, free_nodes, result.map.values());
    };

    const DescentStats stats = run_descent(value, gradient, get_x, set_x, cfg);
    result.iterations = stats.iterations;
    result.final_energy = stats.energy_history.back();
    result.final_gradient_sup = stats.final_gradient_sup;
    result.energy_history = stats.energy_history;
    result.converged = stats.converged;
    return result;
}

} // namespace centore
