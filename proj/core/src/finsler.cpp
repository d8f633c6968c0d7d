#include "centore/finsler.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "centore/errors.hpp"
#include "centore/powerlaw.hpp"

namespace centore {

namespace {

void check_sample(const FinslerStructure& F, const TangentSample& s, const char* op) {
    if (s.u.size() != F.target_dim() || s.X.size() != F.target_dim()) {
        std::ostringstream msg;
        msg << op << ": dimension mismatch (metric dim " << F.target_dim() << ", u dim "
            << s.u.size() << ", X dim " << s.X.size() << ")";
        throw ContractViolation(msg.str());
    }
}

void check_slit(const TangentSample& s, const char* op) {
    if (s.X.norm() == 0.0) {
        throw SlitBundleError(std::string(op) + ": X = 0 is outside the slit bundle");
    }
}

std::string format_sample(const Eigen::VectorXd& u, const Eigen::VectorXd& X) {
    std::ostringstream os;
    os << "u = (" << u.transpose() << "), X = (" << X.transpose() << ")";
    return os.str();
}

} // namespace

// ---------------------------------------------------------------------------
// FinslerStructure defaults
// ---------------------------------------------------------------------------

Eigen::VectorXd FinslerStructure::grad_sq_x(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& X) const {
    const int n = static_cast<int>(X.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    if (X.norm() == 0.0) return g;
    const double h = 1e-7 * std::max(X.norm(), 1.0);
    Eigen::VectorXd xp = X, xm = X;
    for (int i = 0; i < n; ++i) {
        xp(i) = X(i) + h;
        xm(i) = X(i) - h;
        g(i) = (eval_sq(u, xp) - eval_sq(u, xm)) / (2.0 * h);
        xp(i) = X(i);
        xm(i) = X(i);
    }
    return g;
}

Eigen::MatrixXd FinslerStructure::analytic_tensor(const Eigen::VectorXd&,
                                                  const Eigen::VectorXd&) const {
    throw ContractViolation(name() + ": no analytic fundamental tensor available");
}

// ---------------------------------------------------------------------------
// Euclidean
// ---------------------------------------------------------------------------

EuclideanMetric::EuclideanMetric(int n) : n_(n) {
    if (n < 1) throw ContractViolation("EuclideanMetric: dimension must be positive");
}

double EuclideanMetric::eval(const Eigen::VectorXd&, const Eigen::VectorXd& X) const {
    return X.norm();
}

double EuclideanMetric::eval_sq(const Eigen::VectorXd&, const Eigen::VectorXd& X) const {
    return X.squaredNorm();
}

Eigen::VectorXd EuclideanMetric::grad_sq_x(const Eigen::VectorXd&,
                                           const Eigen::VectorXd& X) const {
    return 2.0 * X;
}

void EuclideanMetric::grad_sq_x_into(const Eigen::VectorXd&, const Eigen::VectorXd& X,
                                     Eigen::Ref<Eigen::VectorXd> out) const {
    out = 2.0 * X;
}

Eigen::MatrixXd EuclideanMetric::analytic_tensor(const Eigen::VectorXd&,
                                                 const Eigen::VectorXd&) const {
    return Eigen::MatrixXd::Identity(n_, n_);
}

// ---------------------------------------------------------------------------
// Conformal-in-u family
// ---------------------------------------------------------------------------

ConformalInUMetric::ConformalInUMetric(int n, double eps, Profile profile)
    : n_(n), eps_(eps), profile_(profile) {
    if (n < 1) throw ContractViolation("ConformalInUMetric: dimension must be positive");
    if (profile == Profile::SmoothSin && std::abs(eps) >= 1.0)
        throw ContractViolation("ConformalInUMetric: |eps| < 1 required for positivity");
    if (profile == Profile::RootAbsSin && (eps <= -1.0))
        throw ContractViolation("ConformalInUMetric: eps > -1 required for positivity");
}

std::string ConformalInUMetric::name() const {
    return profile_ == Profile::SmoothSin ? "riemannian_u" : "rough";
}

double ConformalInUMetric::factor(const Eigen::VectorXd& u) const {
    const double t = u(0);
    if (profile_ == Profile::SmoothSin) return 1.0 + eps_ * std::sin(t);
    return 1.0 + eps_ * std::sqrt(std::abs(std::sin(t)));
}

double ConformalInUMetric::eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const {
    return std::sqrt(factor(u)) * X.norm();
}

double ConformalInUMetric::eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const {
    return factor(u) * X.squaredNorm();
}

Eigen::VectorXd ConformalInUMetric::grad_sq_x(const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& X) const {
    return 2.0 * factor(u) * X;
}

void ConformalInUMetric::grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
    out = 2.0 * factor(u) * X;
}

Eigen::MatrixXd ConformalInUMetric::analytic_tensor(const Eigen::VectorXd& u,
                                                    const Eigen::VectorXd&) const {
    return factor(u) * Eigen::MatrixXd::Identity(n_, n_);
}

std::optional<double> ConformalInUMetric::conformal_factor(const Eigen::VectorXd& u) const {
    return factor(u);
}

std::optional<std::pair<double, double>> ConformalInUMetric::declared_bounds() const {
    if (profile_ == Profile::SmoothSin)
        return std::make_pair(1.0 - std::abs(eps_), 1.0 + std::abs(eps_));
    if (eps_ >= 0.0) return std::make_pair(1.0, 1.0 + eps_);
    return std::make_pair(1.0 + eps_, 1.0);
}

std::optional<std::pair<double, double>> ConformalInUMetric::declared_modulus() const {
    // |factor(u) - factor(v)| <= eps |u1-v1|^(2 sigma) with sigma = 1/2 for
    // the smooth profile and 1/4 for the root profile, in t = |u-v|^2.
    if (profile_ == Profile::SmoothSin) return std::make_pair(std::abs(eps_), 0.5);
    return std::make_pair(std::abs(eps_), 0.25);
}

// ---------------------------------------------------------------------------
// Randers
// ---------------------------------------------------------------------------

RandersMetric::RandersMetric(int n, Eigen::VectorXd b)
    : n_(n), u_dependent_(false), b_const_(std::move(b)), label_("randers") {
    if (n < 1) throw ContractViolation("RandersMetric: dimension must be positive");
    if (b_const_.size() != n)
        throw ContractViolation("RandersMetric: drift dimension mismatch");
}

RandersMetric::RandersMetric(int n, DriftFn b_of_u, double sup_b, double lip_b,
                             std::string label)
    : n_(n),
      u_dependent_(true),
      b_of_u_(std::move(b_of_u)),
      sup_b_(sup_b),
      lip_b_(lip_b),
      label_(std::move(label)) {
    if (n < 1) throw ContractViolation("RandersMetric: dimension must be positive");
}

Eigen::VectorXd RandersMetric::drift(const Eigen::VectorXd& u) const {
    return u_dependent_ ? b_of_u_(u) : b_const_;
}

const Eigen::VectorXd& RandersMetric::drift_cached(const Eigen::VectorXd& u) const {
    if (!u_dependent_) return b_const_;
    thread_local const RandersMetric* owner = nullptr;
    thread_local Eigen::VectorXd cached_u, cached_b;
    if (owner != this || cached_u.size() != u.size() || cached_u != u) {
        cached_b = b_of_u_(u);
        cached_u = u;
        owner = this;
    }
    return cached_b;
}

double RandersMetric::eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const {
    return X.norm() + drift_cached(u).dot(X);
}

double RandersMetric::eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const {
    const double f = X.norm() + drift_cached(u).dot(X);
    return f * f;
}

Eigen::VectorXd RandersMetric::grad_sq_x(const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& X) const {
    Eigen::VectorXd out(n_);
    grad_sq_x_into(u, X, out);
    return out;
}

void RandersMetric::grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                                   Eigen::Ref<Eigen::VectorXd> out) const {
    const double alpha = X.norm();
    if (alpha == 0.0) {
        out.setZero();
        return;
    }
    const Eigen::VectorXd& b = drift_cached(u);
    const double f = alpha + b.dot(X);
    out = (2.0 * f / alpha) * X + (2.0 * f) * b;
}

Eigen::MatrixXd RandersMetric::analytic_tensor(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& X) const {
    const double alpha = X.norm();
    if (alpha == 0.0) throw SlitBundleError("RandersMetric::analytic_tensor: X = 0");
    const Eigen::VectorXd ell = X / alpha;
    const Eigen::VectorXd& b = drift_cached(u);
    const double f = alpha + b.dot(X);
    const Eigen::VectorXd lb = ell + b;
    return (f / alpha) * (Eigen::MatrixXd::Identity(n_, n_) - ell * ell.transpose()) +
           lb * lb.transpose();
}

std::optional<std::pair<double, double>> RandersMetric::declared_modulus() const {
    if (!u_dependent_) return std::make_pair(0.0, 1.0);
    // |F^2(u,X)-F^2(v,X)| <= |(b(u)-b(v)).X| (2|X| + |b(u)+b(v)||X|)
    return std::make_pair(2.0 * lip_b_ * (1.0 + sup_b_), 0.5);
}

// ---------------------------------------------------------------------------
// Minkowski quartic
// ---------------------------------------------------------------------------

MinkowskiQuarticMetric::MinkowskiQuarticMetric(int n, double c) : n_(n), c_(c) {
    if (n < 1) throw ContractViolation("MinkowskiQuarticMetric: dimension must be positive");
    if (c <= -1.0) throw ContractViolation("MinkowskiQuarticMetric: c > -1 required");
}

double MinkowskiQuarticMetric::eval(const Eigen::VectorXd&, const Eigen::VectorXd& X) const {
    return std::sqrt(eval_sq(Eigen::VectorXd(), X));
}

double MinkowskiQuarticMetric::eval_sq(const Eigen::VectorXd&, const Eigen::VectorXd& X) const {
    const double q = X.squaredNorm();
    const double G = q * q + c_ * X.array().pow(4).sum();
    return std::sqrt(G);
}

Eigen::VectorXd MinkowskiQuarticMetric::grad_sq_x(const Eigen::VectorXd& u,
                                                  const Eigen::VectorXd& X) const {
    Eigen::VectorXd out(n_);
    grad_sq_x_into(u, X, out);
    return out;
}

void MinkowskiQuarticMetric::grad_sq_x_into(const Eigen::VectorXd&, const Eigen::VectorXd& X,
                                            Eigen::Ref<Eigen::VectorXd> out) const {
    if (X.norm() == 0.0) {
        out.setZero();
        return;
    }
    const double q = X.squaredNorm();
    const double G = q * q + c_ * X.array().pow(4).sum();
    out = (2.0 / std::sqrt(G)) * (q * X + c_ * X.array().cube().matrix());
}

Eigen::MatrixXd MinkowskiQuarticMetric::analytic_tensor(const Eigen::VectorXd&,
                                                        const Eigen::VectorXd& X) const {
    if (X.norm() == 0.0) throw SlitBundleError("MinkowskiQuarticMetric::analytic_tensor: X = 0");
    const double q = X.squaredNorm();
    const double G = q * q + c_ * X.array().pow(4).sum();
    const Eigen::VectorXd Gx = 4.0 * q * X + 4.0 * c_ * X.array().cube().matrix();
    Eigen::MatrixXd Gxx = 8.0 * X * X.transpose() + 4.0 * q * Eigen::MatrixXd::Identity(n_, n_);
    Gxx.diagonal() += 12.0 * c_ * X.array().square().matrix();
    const double s = std::sqrt(G);
    return 0.25 * Gxx / s - 0.125 * (Gx * Gx.transpose()) / (G * s);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

double eval_norm(const FinslerStructure& F, const TangentSample& s) {
    check_sample(F, s, "eval_norm");
    if (s.X.norm() == 0.0) return 0.0;
    return F.eval(s.u, s.X);
}

namespace {

Eigen::MatrixXd fd_tensor(const FinslerStructure& F, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& X) {
    const int n = static_cast<int>(X.size());
    const double h = 1e-4 * std::max(X.norm(), 1.0);
    Eigen::MatrixXd t(n, n);
    const double f0 = F.eval_sq(u, X);
    Eigen::VectorXd probe = X;
    for (int i = 0; i < n; ++i) {
        probe(i) = X(i) + h;
        const double fp = F.eval_sq(u, probe);
        probe(i) = X(i) - h;
        const double fm = F.eval_sq(u, probe);
        probe(i) = X(i);
        t(i, i) = 0.5 * (fp - 2.0 * f0 + fm) / (h * h);
        for (int j = i + 1; j < n; ++j) {
            probe(i) = X(i) + h;
            probe(j) = X(j) + h;
            const double fpp = F.eval_sq(u, probe);
            probe(j) = X(j) - h;
            const double fpm = F.eval_sq(u, probe);
            probe(i) = X(i) - h;
            const double fmm = F.eval_sq(u, probe);
            probe(j) = X(j) + h;
            const double fmp = F.eval_sq(u, probe);
            probe(i) = X(i);
            probe(j) = X(j);
            t(i, j) = 0.125 * (fpp - fpm - fmp + fmm) / (h * h);
            t(j, i) = t(i, j);
        }
    }
    return 0.5 * (t + t.transpose());
}

} // namespace

FundamentalTensor fundamental_tensor(const FinslerStructure& F, const TangentSample& s,
                                     TensorMode mode) {
    check_sample(F, s, "fundamental_tensor");
    check_slit(s, "fundamental_tensor");
    FundamentalTensor out;
    out.mode = mode;
    if (mode == TensorMode::Analytic) {
        if (!F.has_analytic_tensor())
            throw ContractViolation("fundamental_tensor: " + F.name() +
                                    " has no analytic tensor; use finite differences");
        Eigen::MatrixXd t = F.analytic_tensor(s.u, s.X);
        out.entries = 0.5 * (t + t.transpose());
    } else {
        out.entries = fd_tensor(F, s.u, s.X);
    }
    return out;
}

double verify_homogeneity(const FinslerStructure& F, const std::vector<TangentSample>& samples,
                          const std::vector<double>& scales, TensorMode mode) {
    double worst = 0.0;
    for (const auto& s : samples) {
        check_sample(F, s, "verify_homogeneity");
        check_slit(s, "verify_homogeneity");
        const double f = F.eval(s.u, s.X);
        const FundamentalTensor base = fundamental_tensor(F, s, mode);
        const double tensor_scale = std::max(base.entries.norm(), 1e-300);
        for (double lambda : scales) {
            if (lambda <= 0.0)
                throw ContractViolation("verify_homogeneity: scales must be positive");
            TangentSample scaled{s.u, lambda * s.X};
            const double fs = F.eval(scaled.u, scaled.X);
            worst = std::max(worst,
                             std::abs(fs - lambda * f) / std::max(std::abs(lambda * f), 1e-300));
            const FundamentalTensor ts = fundamental_tensor(F, scaled, mode);
            worst = std::max(worst, (ts.entries - base.entries).norm() / tensor_scale);
        }
    }
    return worst;
}

double verify_euler_identity(const FinslerStructure& F, const std::vector<TangentSample>& samples,
                             TensorMode mode) {
    double worst = 0.0;
    for (const auto& s : samples) {
        check_sample(F, s, "verify_euler_identity");
        check_slit(s, "verify_euler_identity");
        const double fsq = F.eval_sq(s.u, s.X);
        const FundamentalTensor t = fundamental_tensor(F, s, mode);
        const double contracted = s.X.dot(t.entries * s.X);
        worst = std::max(worst, std::abs(contracted - fsq) / std::max(std::abs(fsq), 1e-300));
    }
    return worst;
}

ConvexityBounds estimate_convexity_bounds(const FinslerStructure& F,
                                          const std::vector<Eigen::VectorXd>& u_samples,
                                          int direction_count) {
    if (direction_count < 8)
        throw ContractViolation("estimate_convexity_bounds: direction_count >= 8 required");
    if (u_samples.empty())
        throw EmptySampleError("estimate_convexity_bounds: no u samples");
    if (F.target_dim() != 2)
        throw ContractViolation("estimate_convexity_bounds: implemented for target_dim = 2");

    const TensorMode mode =
        F.has_analytic_tensor() ? TensorMode::Analytic : TensorMode::FiniteDifference;
    ConvexityBounds bounds;
    bounds.lambda_min = std::numeric_limits<double>::infinity();
    bounds.lambda_max = -std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    for (const auto& u : u_samples) {
        for (int k = 0; k < direction_count; ++k) {
            const double t = 2.0 * M_PI * k / direction_count;
            Eigen::VectorXd X(2);
            X << std::cos(t), std::sin(t);
            const FundamentalTensor tensor = fundamental_tensor(F, TangentSample{u, X}, mode);
            eig.compute(tensor.entries, Eigen::EigenvaluesOnly);
            const double lo = eig.eigenvalues().minCoeff();
            const double hi = eig.eigenvalues().maxCoeff();
            if (lo <= 0.0) {
                throw ConvexityViolation("estimate_convexity_bounds: nonpositive eigenvalue " +
                                         std::to_string(lo) + " at " + format_sample(u, X));
            }
            bounds.lambda_min = std::min(bounds.lambda_min, lo);
            bounds.lambda_max = std::max(bounds.lambda_max, hi);
            ++bounds.sample_count;
        }
    }
    return bounds;
}

ModulusFit estimate_modulus(
    const FinslerStructure& F,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& u_pairs,
    const std::vector<Eigen::VectorXd>& X_samples) {
    if (u_pairs.empty() || X_samples.empty())
        throw EmptySampleError("estimate_modulus: empty sample set");
    for (const auto& X : X_samples)
        if (X.norm() == 0.0) throw SlitBundleError("estimate_modulus: X = 0 sample");

    // Probed-range diameter; the fitted bound is capped at t = 4 * diam^2.
    double diam_sq = 0.0;
    std::vector<double> ts, ratios;
    for (const auto& [u, v] : u_pairs) {
        const double t = (u - v).squaredNorm();
        diam_sq = std::max(diam_sq, t);
        if (t == 0.0) continue; // identical pair, skipped
        double ratio = 0.0;
        for (const auto& X : X_samples) {
            const double d = std::abs(F.eval_sq(u, X) - F.eval_sq(v, X)) / X.squaredNorm();
            ratio = std::max(ratio, d);
        }
        ts.push_back(t);
        ratios.push_back(ratio);
    }
    if (ts.empty()) throw EmptySampleError("estimate_modulus: all pairs identical");

    ModulusFit fit;
    fit.pair_count = static_cast<long>(ts.size());

    // The modulus is an upper bound, so the exponent comes from the upper
    // envelope of the ratios: cluster the separations (sorted, a cluster
    // spans at most a sixth of a decade in t) and keep the max per cluster.
    const double floor = 1e-15;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ratios[i] > floor) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });

    std::vector<double> fit_t, fit_r;
    const double cluster_span = std::pow(10.0, 1.0 / 6.0);
    std::size_t pos = 0;
    while (pos < order.size()) {
        const double t0 = ts[order[pos]];
        double best_t = t0, best_r = ratios[order[pos]];
        std::size_t end = pos;
        while (end < order.size() && ts[order[end]] <= t0 * cluster_span) {
            if (ratios[order[end]] > best_r) {
                best_r = ratios[order[end]];
                best_t = ts[order[end]];
            }
            ++end;
        }
        fit_t.push_back(best_t);
        fit_r.push_back(best_r);
        pos = end;
    }
    if (fit_t.size() < 2) {
        // u-independent metric: zero modulus, exponent undefined.
        fit.c_omega = 0.0;
        fit.sigma_defined = false;
        fit.max_observed_ratio = 0.0;
        return fit;
    }

    const LogLogFit line = fit_loglog(fit_t, fit_r);
    fit.sigma = std::min(line.slope, 1.0);
    fit.sigma_defined = true;

    // The bound with the fitted exponent must cover every probed sample, not
    // just the envelope; c_omega absorbs the worst excess over the line.
    const double t_cap = 4.0 * diam_sq;
    double worst = 0.0;
    const double ls_const = std::exp(line.intercept);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ratios[i] <= floor) continue;
        const double teff = std::min(ts[i], t_cap);
        worst = std::max(worst, ratios[i] / (ls_const * std::pow(teff, fit.sigma)));
    }
    fit.max_observed_ratio = worst;
    // Smallest constant for which the fitted-exponent bound covers every
    // probed sample.
    fit.c_omega = ls_const * worst;
    return fit;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>
default_modulus_pairs(int dim, unsigned long long seed, int per_anchor) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-1.5, 1.5);
    std::vector<Eigen::VectorXd> anchors;
    anchors.push_back(Eigen::VectorXd::Zero(dim));
    for (int a = 0; a < 2; ++a) {
        Eigen::VectorXd u(dim);
        for (int i = 0; i < dim; ++i) u(i) = box(rng);
        anchors.push_back(u);
    }
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(dim);
    dir(0) = 1.0; // the built-in roster varies in u^1
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (int k = 0; k < per_anchor; ++k) {
        // separations log-spaced in |u - v| from 1e-3 to 1
        const double delta = std::pow(10.0, -3.0 + 3.0 * k / (per_anchor - 1.0));
        for (const auto& anchor : anchors) pairs.emplace_back(anchor, anchor + delta * dir);
        // pair centered on the origin: realizes the sup at every separation
        // for metrics whose u-dependence has an extremum or a kink at 0
        pairs.emplace_back(-0.5 * delta * dir, 0.5 * delta * dir);
    }
    return pairs;
}

std::vector<TangentSample> random_slit_samples(int dim, int count, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ub(-2.0, 2.0);
    std::uniform_real_distribution<double> radius(0.3, 3.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<TangentSample> samples;
    samples.reserve(count);
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd u(dim), X(dim);
        for (int i = 0; i < dim; ++i) u(i) = ub(rng);
        double norm = 0.0;
        do {
            for (int i = 0; i < dim; ++i) X(i) = gauss(rng);
            norm = X.norm();
        } while (norm < 1e-8);
        X *= radius(rng) / norm;
        samples.push_back(TangentSample{std::move(u), std::move(X)});
    }
    return samples;
}

} // namespace centore
