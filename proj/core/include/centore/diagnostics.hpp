#pragma once

#include <optional>
#include <string>
#include <vector>

#include "centore/map.hpp"
#include "centore/minimizer.hpp"

namespace centore {

/// Power-law fit of a window quantity against the window radius.
struct DecayFit {
    std::vector<double> radii;  // strictly decreasing
    std::vector<double> values; // nonnegative, aligned with radii
    double exponent = 0.0;      // slope of log value vs log radius
    double constant = 0.0;      // exponentiated intercept
    double residual = 0.0;      // max log deviation from the fitted line
    bool degenerate = false;    // all values below 1e-14
};

/// OLS fit in log-log; values below 1e-14 are excluded, and the fit is
/// degenerate when fewer than two points survive.
DecayFit fit_decay(const std::vector<double>& radii, const std::vector<double>& values);

/// Nodally recovered gradient (area-weighted average of incident element
/// gradients) and its central second differences on the grid lines.
class GradientField {
public:
    explicit GradientField(const DiscreteMap& m);

    /// Recovered gradient at a node as the n x 2 matrix (i, a) = D_a u^i.
    Eigen::MatrixXd recovered(int node) const;
    /// Squared Frobenius norm of all second differences at a node.
    double hessian_sq(int node) const { return hess_sq_[node]; }

    int node_count() const { return static_cast<int>(hess_sq_.size()); }
    int target_dim() const { return n_; }

private:
    int n_;
    Eigen::MatrixXd recovered_; // nodes x (2n), column (2i + a)
    std::vector<double> hess_sq_;
};

/// Integral of a nodal quantity over the window triangles (each triangle
/// contributes area/3 per vertex value).
double integrate_nodal(const DomainGrid& grid, const std::vector<int>& triangles,
                       const std::vector<double>& nodal);

/// int_{Omega(x0, rho)} |Du|^2 against rho. Interior and clipped windows
/// both supported; degenerate for constant maps.
DecayFit dirichlet_growth_fit(const DiscreteMap& u, const Eigen::Vector2d& x0,
                              const std::vector<double>& radii);

/// int_{Q(x0, rho)} |Du - (Du)_rho|^2 against rho, with (Du)_rho the
/// area-weighted mean of the element gradients. Interior probes only.
/// The Hoelder seminorm exponent estimate is (exponent - 2) / 2.
DecayFit campanato_fit(const DiscreteMap& u, const Eigen::Vector2d& x0,
                       const std::vector<double>& radii);

/// One window entry of a ratio diagnostic.
struct RatioRecord {
    double radius = 0.0;
    double value = 0.0;
    bool skipped = false;
    std::string reason;
};

/// int_{Q(x, r/2)} |D^2 v|^2 / ( (1/r^2) int_{Q(x, r)} |Dv - (Dv)_r|^2 )
/// per window; windows with vanishing oscillation are skipped.
std::vector<RatioRecord> caccioppoli_ratio(const DiscreteMap& v,
                                           const std::vector<WindowSpec>& windows);

/// (mean_{Q(r/2)} |D^2 v|^q)^{1/q} / (mean_{Q(r)} |D^2 v|^2)^{1/2} per window.
std::vector<RatioRecord> reverse_holder_ratio(const DiscreteMap& v,
                                              const std::vector<WindowSpec>& windows, double q);

/// int_Omega |Du|^q / int_Omega |D phi_ext|^q with phi_ext the nodal
/// interpolant of the boundary data; skipped when the denominator vanishes.
RatioRecord higher_integrability_check(const DiscreteMap& u, const BoundaryData& phi, double q);

/// Per-radius record of one frozen-window comparison solve.
struct FrozenSolveRecord {
    double radius = 0.0;
    double dw_sq_integral = 0.0; // int_{Q(x0, R)} |D(u - v)|^2
    double lq_ratio = 0.0;       // int_Q |Dv|^q / int_Q |Du|^q
    int iterations = 0;
    bool converged = false;
    bool failed = false; // solver stagnation; excluded from the fit
    std::string note;
};

struct FrozenComparison {
    DecayFit fit;
    std::vector<FrozenSolveRecord> records;
    /// Frozen minimizer of the largest window, kept for the second-derivative
    /// ratio diagnostics.
    std::optional<DiscreteMap> coarsest_v;
};

/// For each radius: frozen solve on Q(x0, R), w = u - v, record
/// int_{Q(x0, R)} |Dw|^2; fit the decay exponent over the surviving radii.
FrozenComparison frozen_comparison_decay(const DiscreteMap& u, const FinslerStructure& F,
                                         const SourceMetric& g, const Eigen::Vector2d& x0,
                                         const std::vector<double>& radii,
                                         const CircleQuadrature& quad, const SolveConfig& cfg,
                                         double lq_exponent);

/// Least-squares slope of log |u(x) - u(y)| against log |x - y| over node
/// pairs. The input pair set must hold at least 20 distinct-node pairs
/// spanning two decades of separation.
struct HolderFit {
    double beta = 0.0;
    double residual = 0.0;
    long pair_count = 0;
    bool degenerate = false;
};

HolderFit holder_exponent(const DiscreteMap& u, const std::vector<std::pair<int, int>>& pairs);

/// Deterministic pair set for holder_exponent: a distance ladder anchored at
/// the probe, long diagonal pairs, and seeded random pairs. Throws
/// ContractViolation when the grid cannot span two decades of separation.
std::vector<std::pair<int, int>> default_holder_pairs(const DomainGrid& grid,
                                                      const Eigen::Vector2d& x0,
                                                      std::uint64_t seed);

} // namespace centore
