#include "centore/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "centore/errors.hpp"
#include "centore/powerlaw.hpp"

namespace centore {

namespace {

constexpr double kDegenerate = 1e-14;

void check_radii(const std::vector<double>& radii) {
    if (radii.size() < 2) throw ContractViolation("decay fit: need at least two radii");
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (!(radii[k] < radii[k - 1]))
            throw ContractViolation("decay fit: radii must be strictly decreasing");
}

void require_interior_probe(const Eigen::Vector2d& x0, double largest_radius, const char* op) {
    if (make_window(x0, largest_radius).kind != WindowKind::Interior)
        throw ContractViolation(std::string(op) + ": interior probe required");
}

} // namespace

DecayFit fit_decay(const std::vector<double>& radii, const std::vector<double>& values) {
    check_radii(radii);
    if (values.size() != radii.size())
        throw ContractViolation("fit_decay: radii/values size mismatch");
    DecayFit fit;
    fit.radii = radii;
    fit.values = values;

    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (values[k] >= kDegenerate) {
            xs.push_back(radii[k]);
            ys.push_back(values[k]);
        }
    }
    if (xs.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const LogLogFit line = fit_loglog(xs, ys);
    fit.exponent = line.slope;
    fit.constant = std::exp(line.intercept);
    fit.residual = line.max_residual;
    return fit;
}

GradientField::GradientField(const DiscreteMap& m) : n_(m.target_dim()) {
    const DomainGrid& grid = m.grid();
    const int nodes = grid.node_count();
    const int cols = 2 * n_;
    recovered_ = Eigen::MatrixXd::Zero(nodes, cols);

    // element gradients once
    std::vector<Eigen::MatrixXd> elem(grid.triangle_count());
    for (int t = 0; t < grid.triangle_count(); ++t) elem[t] = m.element_gradient(t);

    for (int v = 0; v < nodes; ++v) {
        const auto& inc = grid.incident_triangles(v);
        Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n_, 2);
        for (int t : inc) avg += elem[t];
        avg /= static_cast<double>(inc.size()); // uniform triangle areas
        for (int i = 0; i < n_; ++i)
            for (int a = 0; a < 2; ++a) recovered_(v, 2 * i + a) = avg(i, a);
    }

    // central second differences of the recovery; one-sided on the edges
    hess_sq_.assign(nodes, 0.0);
    const int N = grid.side_nodes();
    const double h = grid.spacing();
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
            const int v = grid.node_index(i, j);
            double sq = 0.0;
            for (int col = 0; col < cols; ++col) {
                // d/dx1
                double d1;
                if (i == 0) {
                    d1 = (recovered_(grid.node_index(1, j), col) - recovered_(v, col)) / h;
                } else if (i == N - 1) {
                    d1 = (recovered_(v, col) - recovered_(grid.node_index(N - 2, j), col)) / h;
                } else {
                    d1 = (recovered_(grid.node_index(i + 1, j), col) -
                          recovered_(grid.node_index(i - 1, j), col)) /
                         (2.0 * h);
                }
                // d/dx2
                double d2;
                if (j == 0) {
                    d2 = (recovered_(grid.node_index(i, 1), col) - recovered_(v, col)) / h;
                } else if (j == N - 1) {
                    d2 = (recovered_(v, col) - recovered_(grid.node_index(i, N - 2), col)) / h;
                } else {
                    d2 = (recovered_(grid.node_index(i, j + 1), col) -
                          recovered_(grid.node_index(i, j - 1), col)) /
                         (2.0 * h);
                }
                sq += d1 * d1 + d2 * d2;
            }
            hess_sq_[v] = sq;
        }
    }
}

Eigen::MatrixXd GradientField::recovered(int node) const {
    Eigen::MatrixXd out(n_, 2);
    for (int i = 0; i < n_; ++i)
        for (int a = 0; a < 2; ++a) out(i, a) = recovered_(node, 2 * i + a);
    return out;
}

double integrate_nodal(const DomainGrid& grid, const std::vector<int>& triangles,
                       const std::vector<double>& nodal) {
    const double third = grid.triangle_area() / 3.0;
    double sum = 0.0;
    for (int t : triangles) {
        const auto& tri = grid.triangle(t);
        sum += third * (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]);
    }
    return sum;
}

DecayFit dirichlet_growth_fit(const DiscreteMap& u, const Eigen::Vector2d& x0,
                              const std::vector<double>& radii) {
    check_radii(radii);
    std::vector<double> values;
    values.reserve(radii.size());
    for (double rho : radii) {
        const WindowElements win = window_elements(u.grid(), make_window(x0, rho));
        values.push_back(gradient_square_integral(u, win.triangles));
    }
    return fit_decay(radii, values);
}

DecayFit campanato_fit(const DiscreteMap& u, const Eigen::Vector2d& x0,
                       const std::vector<double>& radii) {
    check_radii(radii);
    require_interior_probe(x0, radii.front(), "campanato_fit");
    const double area = u.grid().triangle_area();
    std::vector<double> values;
    values.reserve(radii.size());
    for (double rho : radii) {
        const WindowElements win = window_elements(u.grid(), make_window(x0, rho));
        if (win.triangles.empty()) {
            values.push_back(0.0);
            continue;
        }
        const Eigen::MatrixXd mean = mean_element_gradient(u, win.triangles);
        double osc = 0.0;
        for (int t : win.triangles) osc += (u.element_gradient(t) - mean).squaredNorm() * area;
        values.push_back(osc);
    }
    return fit_decay(radii, values);
}

std::vector<RatioRecord> caccioppoli_ratio(const DiscreteMap& v,
                                           const std::vector<WindowSpec>& windows) {
    const GradientField field(v);
    std::vector<double> hess(field.node_count());
    for (int k = 0; k < field.node_count(); ++k) hess[k] = field.hessian_sq(k);

    std::vector<RatioRecord> out;
    out.reserve(windows.size());
    const double area = v.grid().triangle_area();
    for (const WindowSpec& w : windows) {
        RatioRecord rec;
        rec.radius = w.radius;
        if (w.kind != WindowKind::Interior) {
            rec.skipped = true;
            rec.reason = "window not interior";
            out.push_back(rec);
            continue;
        }
        const WindowElements outer = window_elements(v.grid(), w);
        const WindowElements innerw =
            window_elements(v.grid(), make_window(w.center, 0.5 * w.radius));
        const double numer = integrate_nodal(v.grid(), innerw.triangles, hess);
        const Eigen::MatrixXd mean = mean_element_gradient(v, outer.triangles);
        double osc = 0.0;
        for (int t : outer.triangles) osc += (v.element_gradient(t) - mean).squaredNorm() * area;
        if (osc < kDegenerate) {
            rec.skipped = true;
            rec.reason = "gradient oscillation vanishes on the window";
            out.push_back(rec);
            continue;
        }
        rec.value = numer / (osc / (w.radius * w.radius));
        out.push_back(rec);
    }
    return out;
}

std::vector<RatioRecord> reverse_holder_ratio(const DiscreteMap& v,
                                              const std::vector<WindowSpec>& windows, double q) {
    if (!(q > 2.0 && q <= 3.0))
        throw ContractViolation("reverse_holder_ratio: q must lie in (2, 3]");
    const GradientField field(v);
    std::vector<double> hess_sq(field.node_count()), hess_q(field.node_count());
    for (int k = 0; k < field.node_count(); ++k) {
        hess_sq[k] = field.hessian_sq(k);
        hess_q[k] = std::pow(field.hessian_sq(k), 0.5 * q);
    }

    std::vector<RatioRecord> out;
    out.reserve(windows.size());
    const double area = v.grid().triangle_area();
    for (const WindowSpec& w : windows) {
        RatioRecord rec;
        rec.radius = w.radius;
        if (w.kind != WindowKind::Interior) {
            rec.skipped = true;
            rec.reason = "window not interior";
            out.push_back(rec);
            continue;
        }
        const WindowElements outer = window_elements(v.grid(), w);
        const WindowElements innerw =
            window_elements(v.grid(), make_window(w.center, 0.5 * w.radius));
        const double area_outer = area * static_cast<double>(outer.triangles.size());
        const double area_inner = area * static_cast<double>(innerw.triangles.size());
        const double mean_sq = integrate_nodal(v.grid(), outer.triangles, hess_sq) / area_outer;
        const double mean_q = integrate_nodal(v.grid(), innerw.triangles, hess_q) / area_inner;
        if (mean_sq < kDegenerate) {
            rec.skipped = true;
            rec.reason = "second differences vanish on the window";
            out.push_back(rec);
            continue;
        }
        rec.value = std::pow(mean_q, 1.0 / q) / std::sqrt(mean_sq);
        out.push_back(rec);
    }
    return out;
}

RatioRecord higher_integrability_check(const DiscreteMap& u, const BoundaryData& phi, double q) {
    if (!(q > 2.0 && q <= 3.0))
        throw ContractViolation("higher_integrability_check: q must lie in (2, 3]");
    RatioRecord rec;
    rec.radius = 0.0;
    std::vector<int> all(u.grid().triangle_count());
    for (int t = 0; t < u.grid().triangle_count(); ++t) all[t] = t;
    const DiscreteMap phi_ext = DiscreteMap::interpolate_boundary(u.grid_ptr(), phi);
    const double denom = gradient_power_integral(phi_ext, all, q);
    if (denom < kDegenerate) {
        rec.skipped = true;
        rec.reason = "boundary data has vanishing gradient";
        return rec;
    }
    rec.value = gradient_power_integral(u, all, q) / denom;
    return rec;
}

FrozenComparison frozen_comparison_decay(const DiscreteMap& u, const FinslerStructure& F,
                                         const SourceMetric& g, const Eigen::Vector2d& x0,
                                         const std::vector<double>& radii,
                                         const CircleQuadrature& quad, const SolveConfig& cfg,
                                         double lq_exponent) {
    check_radii(radii);
    require_interior_probe(x0, radii.front(), "frozen_comparison_decay");

    FrozenComparison out;
    std::vector<double> fit_radii, fit_values;
    for (double R : radii) {
        FrozenSolveRecord rec;
        rec.radius = R;
        const WindowSpec window = make_window(x0, R);
        try {
            const SolveResult solve = frozen_minimize(F, u.grid(), g, window, u, quad, cfg);
            rec.iterations = solve.iterations;
            rec.converged = solve.converged;
            const WindowElements win = window_elements(u.grid(), window);

            DiscreteMap w(u.grid_ptr(), u.target_dim());
            w.values() = u.values() - solve.map.values();
            rec.dw_sq_integral = gradient_square_integral(w, win.triangles);

            const double du_q = gradient_power_integral(u, win.triangles, lq_exponent);
            const double dv_q = gradient_power_integral(solve.map, win.triangles, lq_exponent);
            rec.lq_ratio = du_q > 0.0 ? dv_q / du_q : 1.0;

            fit_radii.push_back(R);
            fit_values.push_back(rec.dw_sq_integral);
            if (R == radii.front()) out.coarsest_v = solve.map;
        } catch (const StagnationError& e) {
            rec.failed = true;
            rec.note = e.what();
        }
        out.records.push_back(std::move(rec));
    }

    if (fit_radii.size() >= 2) {
        out.fit = fit_decay(fit_radii, fit_values);
    } else {
        out.fit.radii = fit_radii;
        out.fit.values = fit_values;
        out.fit.degenerate = true;
    }
    return out;
}

HolderFit holder_exponent(const DiscreteMap& u, const std::vector<std::pair<int, int>>& pairs) {
    // precondition: enough pairs, spanning two decades of separation
    double min_sep = std::numeric_limits<double>::infinity(), max_sep = 0.0;
    long distinct = 0;
    for (const auto& [a, b] : pairs) {
        const double sep = (u.grid().node(a) - u.grid().node(b)).norm();
        if (sep == 0.0) continue; // coincident pair, skipped
        ++distinct;
        min_sep = std::min(min_sep, sep);
        max_sep = std::max(max_sep, sep);
    }
    if (distinct < 20)
        throw ContractViolation("holder_exponent: need at least 20 distinct-node pairs");
    if (max_sep / min_sep < 99.0)
        throw ContractViolation("holder_exponent: pair separations must span two decades");

    std::vector<double> seps, diffs;
    for (const auto& [a, b] : pairs) {
        const double sep = (u.grid().node(a) - u.grid().node(b)).norm();
        if (sep == 0.0) continue;
        const double diff = (u.values().row(a) - u.values().row(b)).norm();
        if (diff < kDegenerate) continue; // log-degenerate value, dropped
        seps.push_back(sep);
        diffs.push_back(diff);
    }
    HolderFit fit;
    fit.pair_count = static_cast<long>(seps.size());
    if (seps.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const LogLogFit line = fit_loglog(seps, diffs);
    fit.beta = line.slope;
    fit.residual = line.max_residual;
    return fit;
}

std::vector<std::pair<int, int>> default_holder_pairs(const DomainGrid& grid,
                                                      const Eigen::Vector2d& x0,
                                                      std::uint64_t seed) {
    const int N = grid.side_nodes();
    const double h = grid.spacing();
    auto nearest = [&](const Eigen::Vector2d& x) {
        const int i = std::clamp(static_cast<int>(std::lround(x(0) / h)), 0, N - 1);
        const int j = std::clamp(static_cast<int>(std::lround(x(1) / h)), 0, N - 1);
        return grid.node_index(i, j);
    };
    auto in_domain = [](const Eigen::Vector2d& x) {
        return x(0) >= 0.0 && x(0) <= 1.0 && x(1) >= 0.0 && x(1) <= 1.0;
    };

    // All pairs are anchored at the probe or straddle it: those realize the
    // growth of |u(x) - u(y)| in |x - y|; generic pairs only scatter below it.
    std::set<std::pair<int, int>> unique_pairs;
    const int anchor = nearest(x0);
    const Eigen::Vector2d anchor_pos = grid.node(anchor);

    const Eigen::Vector2d dirs[4] = {{1, 0}, {0, 1}, {M_SQRT1_2, M_SQRT1_2}, {-1, 0}};
    for (const auto& dir : dirs) {
        for (double d = h; d <= 0.45; d *= 2.0) {
            const Eigen::Vector2d target = anchor_pos + d * dir;
            if (!in_domain(target)) continue;
            const int partner = nearest(target);
            if (partner != anchor) unique_pairs.emplace(anchor, partner);
        }
    }
    // anchor to the domain corners
    for (int ci : {0, N - 1})
        for (int cj : {0, N - 1}) {
            const int corner = grid.node_index(ci, cj);
            if (corner != anchor) unique_pairs.emplace(anchor, corner);
        }
    // pairs straddling the probe supply the top of the separation range
    for (const auto& dir : dirs) {
        for (double d : {0.25, 0.4, 0.5}) {
            const Eigen::Vector2d lo = anchor_pos - d * dir;
            const Eigen::Vector2d hi = anchor_pos + d * dir;
            if (!in_domain(lo) || !in_domain(hi)) continue;
            const int a = nearest(lo), b = nearest(hi);
            if (a != b) unique_pairs.emplace(std::min(a, b), std::max(a, b));
        }
    }
    // seeded anchored fillers
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, grid.node_count() - 1);
    int guard = 0;
    while (unique_pairs.size() < 24 && ++guard < 10000) {
        const int b = pick(rng);
        if (b != anchor) unique_pairs.emplace(std::min(anchor, b), std::max(anchor, b));
    }

    std::vector<std::pair<int, int>> pairs(unique_pairs.begin(), unique_pairs.end());
    double min_sep = std::numeric_limits<double>::infinity(), max_sep = 0.0;
    for (const auto& [a, b] : pairs) {
        const double sep = (grid.node(a) - grid.node(b)).norm();
        min_sep = std::min(min_sep, sep);
        max_sep = std::max(max_sep, sep);
    }
    if (pairs.size() < 20 || max_sep / min_sep < 99.0)
        throw ContractViolation(
            "default_holder_pairs: grid too coarse to span two decades of separation");
    return pairs;
}

} // namespace centore
