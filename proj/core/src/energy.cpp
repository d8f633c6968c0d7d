#include "centore/energy.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "centore/errors.hpp"

namespace centore {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr int kChunk = 2048; // fixed reduction shape, independent of threads

Eigen::MatrixXd tensor_at(const FinslerStructure& F, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& X, const Eigen::MatrixXd& fill) {
    if (X.norm() == 0.0) return fill;
    if (F.has_analytic_tensor()) return F.analytic_tensor(u, X);
    return fundamental_tensor(F, TangentSample{u, X}, TensorMode::FiniteDifference).entries;
}

Eigen::MatrixXd zero_section_fill(const FinslerStructure& F) {
    double mid = 1.0;
    if (auto b = F.declared_bounds()) mid = 0.5 * (b->first + b->second);
    return mid * Eigen::MatrixXd::Identity(F.target_dim(), F.target_dim());
}

// Runs fn(chunk_index) over chunk_count chunks on the requested number of
// threads. Chunk results must land in per-chunk slots; the caller combines
// them in index order, so the reduction is thread-count independent.
void run_chunks(int chunk_count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || chunk_count <= 1) {
        for (int c = 0; c < chunk_count; ++c) fn(c);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= chunk_count) return;
            fn(c);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(threads, chunk_count);
    pool.reserve(n_workers);
    for (int k = 0; k < n_workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// Preallocated per-thread buffers for the triangle loops.
struct TriangleScratch {
    explicit TriangleScratch(int n)
        : U(n, 2), p(n, 2), ptilde(n, 2), dWdp(n, 2), dWdptilde(n, 2), uc(n), X(n), G(n),
          u_probe(n), dW_du(n) {}

    Eigen::MatrixXd U, p, ptilde, dWdp, dWdptilde;
    Eigen::VectorXd uc, X, G, u_probe, dW_du;
};

// Rows of J^{-1}; hat gradients of the vertices are gb = row 0, gc = row 1,
// ga = -(gb + gc).
inline Eigen::Matrix2d inverse_jacobian(const DomainGrid& grid, int t) {
    const auto& tri = grid.triangle(t);
    const Eigen::Vector2d a = grid.node(tri[0]);
    Eigen::Matrix2d J;
    J.col(0) = grid.node(tri[1]) - a;
    J.col(1) = grid.node(tri[2]) - a;
    return J.inverse();
}

inline void load_triangle(const DiscreteMap& m, int t, TriangleScratch& ws) {
    const auto& tri = m.grid().triangle(t);
    const Eigen::MatrixXd& V = m.values();
    ws.uc = (V.row(tri[0]) + V.row(tri[1]) + V.row(tri[2])).transpose() / 3.0;
    ws.U.col(0) = (V.row(tri[1]) - V.row(tri[0])).transpose();
    ws.U.col(1) = (V.row(tri[2]) - V.row(tri[0])).transpose();
    ws.p.noalias() = ws.U * inverse_jacobian(m.grid(), t);
}

// Direct circle-quadrature sum of F^2(u, ptilde theta); allocation-free.
inline double f2_circle_sum(const FinslerStructure& F, const Eigen::VectorXd& u,
                            const Eigen::MatrixXd& ptilde, const CircleQuadrature& quad,
                            TriangleScratch& ws) {
    double sum = 0.0;
    for (int m = 0; m < quad.node_count(); ++m) {
        ws.X.noalias() = ptilde * quad.direction(m);
        sum += F.eval_sq(u, ws.X);
    }
    return sum;
}

// Energy contribution of one triangle through the direct route:
//   W = area * sqrt_g * (1/(4 pi)) * sum_m w F^2(u_c, ptilde theta_m).
inline double triangle_energy_direct(const FinslerStructure& F, const CircleQuadrature& quad,
                                     const OrthonormalFrame& frame, double sqrt_g, double area,
                                     TriangleScratch& ws) {
    if (auto c = F.conformal_factor(ws.uc)) {
        ws.ptilde.noalias() = ws.p * frame.eta;
        return area * sqrt_g * 0.25 * (*c) * ws.ptilde.squaredNorm();
    }
    ws.ptilde.noalias() = ws.p * frame.eta;
    const double sum = f2_circle_sum(F, ws.uc, ws.ptilde, quad, ws);
    return area * sqrt_g * sum * quad.weight() / (4.0 * M_PI);
}

// Gradient pieces of the same contribution: dW/dp (n x 2, into ws.dWdp) and
// dW/du (n, into ws.dW_du). The u-dependence is differentiated by central
// differences in u with step 1e-5.
inline void triangle_gradient(const FinslerStructure& F, const CircleQuadrature& quad,
                              const OrthonormalFrame& frame, double sqrt_g, double area,
                              bool with_u_term, TriangleScratch& ws) {
    const double du_step = 1e-5;
    ws.dW_du.setZero();
    ws.ptilde.noalias() = ws.p * frame.eta;

    if (auto c = F.conformal_factor(ws.uc)) {
        const double w = area * sqrt_g;
        ws.dWdp.noalias() = (w * 0.5 * (*c)) * ws.ptilde * frame.eta.transpose();
        if (with_u_term && F.depends_on_u()) {
            const double psq = 0.25 * ws.ptilde.squaredNorm();
            ws.u_probe = ws.uc;
            for (int i = 0; i < ws.uc.size(); ++i) {
                ws.u_probe(i) = ws.uc(i) + du_step;
                const double cp = *F.conformal_factor(ws.u_probe);
                ws.u_probe(i) = ws.uc(i) - du_step;
                const double cm = *F.conformal_factor(ws.u_probe);
                ws.u_probe(i) = ws.uc(i);
                ws.dW_du(i) = w * psq * (cp - cm) / (2.0 * du_step);
            }
        }
        return;
    }

    const double scale = area * sqrt_g * quad.weight() / (4.0 * M_PI);
    ws.dWdptilde.setZero();
    for (int m = 0; m < quad.node_count(); ++m) {
        const Eigen::Vector2d& theta = quad.direction(m);
        ws.X.noalias() = ws.ptilde * theta;
        F.grad_sq_x_into(ws.uc, ws.X, ws.G);
        ws.dWdptilde.col(0) += theta(0) * ws.G;
        ws.dWdptilde.col(1) += theta(1) * ws.G;
    }
    ws.dWdp.noalias() = scale * ws.dWdptilde * frame.eta.transpose();

    if (with_u_term && F.depends_on_u() && ws.p.squaredNorm() != 0.0) {
        ws.u_probe = ws.uc;
        for (int i = 0; i < ws.uc.size(); ++i) {
            ws.u_probe(i) = ws.uc(i) + du_step;
            const double sp = f2_circle_sum(F, ws.u_probe, ws.ptilde, quad, ws);
            ws.u_probe(i) = ws.uc(i) - du_step;
            const double sm = f2_circle_sum(F, ws.u_probe, ws.ptilde, quad, ws);
            ws.u_probe(i) = ws.uc(i);
            ws.dW_du(i) = scale * (sp - sm) / (2.0 * du_step);
        }
    }
}

inline void scatter_triangle(const DomainGrid& grid, int t, const TriangleScratch& ws,
                             Eigen::Ref<Eigen::MatrixXd> target, int row_offset) {
    const auto& tri = grid.triangle(t);
    const Eigen::Matrix2d K = inverse_jacobian(grid, t);
    const Eigen::Vector2d gb = K.row(0);
    const Eigen::Vector2d gc = K.row(1);
    const Eigen::Vector2d ga = -(gb + gc);
    target.row(tri[0] - row_offset) += (ws.dWdp * ga + ws.dW_du / 3.0).transpose();
    target.row(tri[1] - row_offset) += (ws.dWdp * gb + ws.dW_du / 3.0).transpose();
    target.row(tri[2] - row_offset) += (ws.dWdp * gc + ws.dW_du / 3.0).transpose();
}

} // namespace

CircleQuadrature::CircleQuadrature(int node_count) {
    if (node_count < 16)
        throw ContractViolation("CircleQuadrature: at least 16 nodes required");
    dirs_.reserve(node_count);
    for (int m = 0; m < node_count; ++m) {
        const double t = kTwoPi * (m + 0.5) / node_count;
        dirs_.emplace_back(std::cos(t), std::sin(t));
    }
    weight_ = kTwoPi / node_count;
}

double CoefficientTensor::contract(const Eigen::MatrixXd& q) const {
    double sum = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) sum += q.col(a).dot(block(a, b) * q.col(b));
    return sum;
}

CoefficientTensor coefficients(const Eigen::Vector2d& x, const Eigen::VectorXd& u,
                               const Eigen::MatrixXd& p, const FinslerStructure& F,
                               const CircleQuadrature& quad, const OrthonormalFrame& frame,
                               double sqrt_g) {
    (void)x; // position enters through frame and sqrt_g, evaluated by the caller
    const int n = F.target_dim();
    if (u.size() != n || p.rows() != n || p.cols() != 2)
        throw ContractViolation("coefficients: dimension mismatch");

    CoefficientTensor out;
    const bool zero_p = (p.norm() == 0.0);
    out.degenerate = zero_p;

    // Inner disk means in frame coordinates.
    std::array<Eigen::MatrixXd, 4> inner;
    if (auto c = F.conformal_factor(u); c && !zero_p) {
        // Tensor is c(u) * I independent of the direction: the circle means
        // of theta^a theta^b are delta^{ab} * pi exactly.
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                inner[2 * a + b] = (a == b ? 0.25 * (*c) : 0.0) * Eigen::MatrixXd::Identity(n, n);
    } else {
        const Eigen::MatrixXd fill = zero_section_fill(F);
        const Eigen::MatrixXd ptilde = p * frame.eta; // frame components of du
        for (auto& m : inner) m = Eigen::MatrixXd::Zero(n, n);
        for (int m = 0; m < quad.node_count(); ++m) {
            const Eigen::Vector2d& theta = quad.direction(m);
            const Eigen::VectorXd X = ptilde * theta;
            const Eigen::MatrixXd f = zero_p ? fill : tensor_at(F, u, X, fill);
            for (int a = 0; a < 2; ++a)
                for (int b = a; b < 2; ++b) inner[2 * a + b] += (theta(a) * theta(b)) * f;
        }
        const double scale = quad.weight() / (4.0 * M_PI);
        for (int a = 0; a < 2; ++a)
            for (int b = a; b < 2; ++b) inner[2 * a + b] *= scale;
        inner[2] = inner[1]; // symmetric in (a, b) for symmetric f
    }

    for (int k = 0; k < 2; ++k) {
        for (int v = 0; v < 2; ++v) {
            Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    e += frame.eta(k, a) * frame.eta(v, b) * inner[2 * a + b];
            out.block(k, v) = sqrt_g * e;
        }
    }
    return out;
}

CoefficientTensor frozen_coefficients(const Eigen::Vector2d& x0, const Eigen::VectorXd& uR,
                                      const Eigen::MatrixXd& p, const FinslerStructure& F,
                                      const CircleQuadrature& quad, const OrthonormalFrame& frame,
                                      double sqrt_g) {
    return coefficients(x0, uR, p, F, quad, frame, sqrt_g);
}

double energy_density(const Eigen::Vector2d& x, const Eigen::VectorXd& u,
                      const Eigen::MatrixXd& p, const FinslerStructure& F,
                      const CircleQuadrature& quad, const OrthonormalFrame& frame,
                      double sqrt_g) {
    if (p.norm() == 0.0) return 0.0;
    const CoefficientTensor e = coefficients(x, u, p, F, quad, frame, sqrt_g);
    return e.contract(p) / sqrt_g;
}

double density_direct(const Eigen::VectorXd& u, const Eigen::MatrixXd& p,
                      const FinslerStructure& F, const CircleQuadrature& quad,
                      const OrthonormalFrame& frame) {
    if (p.norm() == 0.0) return 0.0;
    const Eigen::MatrixXd ptilde = p * frame.eta;
    if (auto c = F.conformal_factor(u)) return 0.25 * (*c) * ptilde.squaredNorm();
    double sum = 0.0;
    for (int m = 0; m < quad.node_count(); ++m)
        sum += F.eval_sq(u, ptilde * quad.direction(m));
    return sum * quad.weight() / (4.0 * M_PI);
}

namespace {

template <typename PerTriangle>
double reduce_triangles(const DiscreteMap& m, const SourceMetric& g, int threads,
                        PerTriangle&& per_triangle) {
    const DomainGrid& grid = m.grid();
    const int tri_count = grid.triangle_count();
    const int chunk_count = (tri_count + kChunk - 1) / kChunk;
    std::vector<double> partial(chunk_count, 0.0);

    run_chunks(chunk_count, threads, [&](int c) {
        const int t0 = c * kChunk;
        const int t1 = std::min(t0 + kChunk, tri_count);
        TriangleScratch ws(m.target_dim());
        double sum = 0.0;
        for (int t = t0; t < t1; ++t) {
            load_triangle(m, t, ws);
            const Eigen::Vector2d& xc = grid.barycenter(t);
            const OrthonormalFrame frame = build_frame(g, xc);
            sum += per_triangle(t, frame, g.sqrt_det(xc), ws);
        }
        partial[c] = sum;
    });

    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

} // namespace

double total_energy(const DiscreteMap& m, const FinslerStructure& F, const CircleQuadrature& quad,
                    const SourceMetric& g, const AssemblyOptions& opts) {
    if (m.target_dim() != F.target_dim())
        throw ContractViolation("total_energy: map/metric dimension mismatch");
    const double area = m.grid().triangle_area();
    return reduce_triangles(
        m, g, opts.threads,
        [&](int, const OrthonormalFrame& frame, double sg, TriangleScratch& ws) {
            const CoefficientTensor e = coefficients({0, 0}, ws.uc, ws.p, F, quad, frame, sg);
            return e.contract(ws.p) * area;
        });
}

double assembly_energy(const DiscreteMap& m, const FinslerStructure& F,
                       const CircleQuadrature& quad, const SourceMetric& g,
                       const AssemblyOptions& opts) {
    if (m.target_dim() != F.target_dim())
        throw ContractViolation("assembly_energy: map/metric dimension mismatch");
    const double area = m.grid().triangle_area();
    return reduce_triangles(
        m, g, opts.threads,
        [&](int, const OrthonormalFrame& frame, double sg, TriangleScratch& ws) {
            return triangle_energy_direct(F, quad, frame, sg, area, ws);
        });
}

Eigen::MatrixXd energy_gradient(const DiscreteMap& m, const FinslerStructure& F,
                                const CircleQuadrature& quad, const SourceMetric& g,
                                const AssemblyOptions& opts) {
    if (m.target_dim() != F.target_dim())
        throw ContractViolation("energy_gradient: map/metric dimension mismatch");
    const DomainGrid& grid = m.grid();
    const double area = grid.triangle_area();
    const int n = m.target_dim();
    const int tri_count = grid.triangle_count();
    const int chunk_count = (tri_count + kChunk - 1) / kChunk;

    struct ChunkBuffer {
        int row0 = 0;
        Eigen::MatrixXd acc;
    };
    std::vector<ChunkBuffer> buffers(chunk_count);

    run_chunks(chunk_count, opts.threads, [&](int c) {
        const int t0 = c * kChunk;
        const int t1 = std::min(t0 + kChunk, tri_count);
        int lo = grid.node_count(), hi = 0;
        for (int t = t0; t < t1; ++t) {
            for (int v : grid.triangle(t)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        ChunkBuffer& buf = buffers[c];
        buf.row0 = lo;
        buf.acc = Eigen::MatrixXd::Zero(hi - lo + 1, n);
        TriangleScratch ws(n);
        for (int t = t0; t < t1; ++t) {
            load_triangle(m, t, ws);
            const Eigen::Vector2d& xc = grid.barycenter(t);
            const OrthonormalFrame frame = build_frame(g, xc);
            triangle_gradient(F, quad, frame, g.sqrt_det(xc), area, /*with_u_term=*/true, ws);
            scatter_triangle(grid, t, ws, buf.acc, buf.row0);
        }
    });

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(grid.node_count(), n);
    for (const auto& buf : buffers)
        grad.middleRows(buf.row0, buf.acc.rows()) += buf.acc;

    for (int v = 0; v < grid.node_count(); ++v)
        if (grid.is_boundary_node(v)) grad.row(v).setZero();
    return grad;
}

double frozen_window_energy(const DiscreteMap& m, const std::vector<int>& triangles,
                            const FrozenWindowData& data, const FinslerStructure& F,
                            const CircleQuadrature& quad) {
    const double area = m.grid().triangle_area();
    TriangleScratch ws(m.target_dim());
    double sum = 0.0;
    for (int t : triangles) {
        load_triangle(m, t, ws);
        ws.uc = data.uR; // (x, u) frozen at the window data
        sum += triangle_energy_direct(F, quad, data.frame, data.sqrt_g, area, ws);
    }
    return sum;
}

Eigen::MatrixXd frozen_window_gradient(const DiscreteMap& m, const std::vector<int>& triangles,
                                       const std::vector<int>& free_nodes,
                                       const FrozenWindowData& data, const FinslerStructure& F,
                                       const CircleQuadrature& quad) {
    const DomainGrid& grid = m.grid();
    const double area = grid.triangle_area();
    const int n = m.target_dim();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(grid.node_count(), n);
    TriangleScratch ws(n);
    for (int t : triangles) {
        load_triangle(m, t, ws);
        ws.uc = data.uR;
        triangle_gradient(F, quad, data.frame, data.sqrt_g, area, /*with_u_term=*/false, ws);
        scatter_triangle(grid, t, ws, grad, 0);
    }
    std::vector<char> free_mask(grid.node_count(), 0);
    for (int v : free_nodes) free_mask[v] = 1;
    for (int v = 0; v < grid.node_count(); ++v)
        if (!free_mask[v]) grad.row(v).setZero();
    return grad;
}

} // namespace centore
