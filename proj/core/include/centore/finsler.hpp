#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace centore {

/// A point of the slit tangent bundle of the target: base point u and
/// tangent vector X, both in R^n.
struct TangentSample {
    Eigen::VectorXd u;
    Eigen::VectorXd X;
};

/// Eigenvalue range of the fundamental tensor observed over a sample set.
struct ConvexityBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    long sample_count = 0;
};

/// Power-law bound c_omega * t^sigma fitted to the u-modulus of F^2,
/// with t = |u-v|^2. sigma_defined is false for u-independent metrics.
struct ModulusFit {
    double c_omega = 0.0;
    double sigma = 0.0;
    bool sigma_defined = false;
    /// Worst multiplicative excess of a probed ratio over the fitted
    /// least-squares line; c_omega already absorbs it.
    double max_observed_ratio = 0.0;
    long pair_count = 0;
};

/// Norm on the tangent spaces of R^n: nonnegative, 1-homogeneous in X,
/// with strongly convex square away from X = 0.
///
/// Built-in metrics provide analytic fundamental tensors and the X-gradient
/// of F^2; custom metrics may rely on the finite-difference fallbacks.
class FinslerStructure {
public:
    virtual ~FinslerStructure() = default;

    virtual int target_dim() const = 0;
    virtual std::string name() const = 0;

    /// F(u, X). Must return 0 for X = 0.
    virtual double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const = 0;

    /// F^2(u, X). Default squares eval(); overridden where the square is
    /// the natural quantity.
    virtual double eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const {
        const double f = eval(u, X);
        return f * f;
    }

    /// dF^2/dX, degree-1 homogeneous; the zero vector at X = 0.
    /// Default is a central finite difference of F^2.
    virtual Eigen::VectorXd grad_sq_x(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const;

    /// Allocation-free variant for assembly loops; built-ins override.
    virtual void grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                                Eigen::Ref<Eigen::VectorXd> out) const {
        out = grad_sq_x(u, X);
    }

    virtual bool has_analytic_tensor() const { return false; }

    /// Analytic fundamental tensor (1/2) d^2F^2/dX^2; throws if unavailable.
    virtual Eigen::MatrixXd analytic_tensor(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& X) const;

    virtual bool depends_on_u() const = 0;

    /// True when F^2(u, X) = factor(u) |X|^2; enables the closed-form
    /// disk means in the energy assembly.
    virtual std::optional<double> conformal_factor(const Eigen::VectorXd& u) const {
        (void)u;
        return std::nullopt;
    }

    /// F^2 smooth in u (central differences in u trustworthy everywhere).
    virtual bool smooth_in_u() const { return true; }

    /// Known (lambda, Lambda) of the strong convexity condition, if any.
    virtual std::optional<std::pair<double, double>> declared_bounds() const {
        return std::nullopt;
    }

    /// Known (C_omega, sigma) of the u-modulus power bound, if any.
    virtual std::optional<std::pair<double, double>> declared_modulus() const {
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Built-in metric roster
// ---------------------------------------------------------------------------

/// F(u, X) = |X|.
class EuclideanMetric final : public FinslerStructure {
public:
    explicit EuclideanMetric(int n);
    int target_dim() const override { return n_; }
    std::string name() const override { return "euclidean"; }
    double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    double eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    Eigen::VectorXd grad_sq_x(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    void grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    bool has_analytic_tensor() const override { return true; }
    Eigen::MatrixXd analytic_tensor(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& X) const override;
    bool depends_on_u() const override { return false; }
    std::optional<double> conformal_factor(const Eigen::VectorXd&) const override { return 1.0; }
    std::optional<std::pair<double, double>> declared_bounds() const override {
        return std::make_pair(1.0, 1.0);
    }
    std::optional<std::pair<double, double>> declared_modulus() const override {
        return std::make_pair(0.0, 1.0);
    }

private:
    int n_;
};

/// Conformal family F^2(u, X) = (1 + eps * profile(u^1)) |X|^2 with either the
/// smooth profile sin(t) or the rough profile |sin(t)|^{1/2}.
class ConformalInUMetric final : public FinslerStructure {
public:
    enum class Profile { SmoothSin, RootAbsSin };

    ConformalInUMetric(int n, double eps, Profile profile);
    int target_dim() const override { return n_; }
    std::string name() const override;
    double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    double eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    Eigen::VectorXd grad_sq_x(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    void grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    bool has_analytic_tensor() const override { return true; }
    Eigen::MatrixXd analytic_tensor(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& X) const override;
    bool depends_on_u() const override { return true; }
    std::optional<double> conformal_factor(const Eigen::VectorXd& u) const override;
    bool smooth_in_u() const override { return profile_ == Profile::SmoothSin; }
    std::optional<std::pair<double, double>> declared_bounds() const override;
    std::optional<std::pair<double, double>> declared_modulus() const override;

    double eps() const { return eps_; }
    Profile profile() const { return profile_; }

private:
    double factor(const Eigen::VectorXd& u) const;
    int n_;
    double eps_;
    Profile profile_;
};

/// Randers metric F(u, X) = |X| + b(u) . X with a = identity.
/// Strongly convex iff |b| < 1; larger b is accepted so that the
/// verification ops can detect the violation.
class RandersMetric final : public FinslerStructure {
public:
    using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    /// Constant drift covector.
    RandersMetric(int n, Eigen::VectorXd b);
    /// u-dependent drift; sup_b is a declared bound on sup |b(u)| and
    /// lip_b on its Lipschitz constant (used for the declared modulus).
    RandersMetric(int n, DriftFn b_of_u, double sup_b, double lip_b, std::string label);

    int target_dim() const override { return n_; }
    std::string name() const override { return label_; }
    double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    double eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    Eigen::VectorXd grad_sq_x(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    void grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    bool has_analytic_tensor() const override { return true; }
    Eigen::MatrixXd analytic_tensor(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& X) const override;
    bool depends_on_u() const override { return u_dependent_; }
    bool smooth_in_u() const override { return true; }
    std::optional<std::pair<double, double>> declared_modulus() const override;

    Eigen::VectorXd drift(const Eigen::VectorXd& u) const;

private:
    // assembly loops call F^2 with the same u for every quadrature node;
    // memoizing the drift there avoids reevaluating the callback
    const Eigen::VectorXd& drift_cached(const Eigen::VectorXd& u) const;

    int n_;
    bool u_dependent_;
    Eigen::VectorXd b_const_;
    DriftFn b_of_u_;
    double sup_b_ = 0.0;
    double lip_b_ = 0.0;
    std::string label_;
};

/// u-independent Minkowski norm F(X) = (|X|^4 + c * sum_i X_i^4)^{1/4}.
class MinkowskiQuarticMetric final : public FinslerStructure {
public:
    MinkowskiQuarticMetric(int n, double c);
    int target_dim() const override { return n_; }
    std::string name() const override { return "minkowski_quartic"; }
    double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    double eval_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    Eigen::VectorXd grad_sq_x(const Eigen::VectorXd& u, const Eigen::VectorXd& X) const override;
    void grad_sq_x_into(const Eigen::VectorXd& u, const Eigen::VectorXd& X,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    bool has_analytic_tensor() const override { return true; }
    Eigen::MatrixXd analytic_tensor(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& X) const override;
    bool depends_on_u() const override { return false; }
    std::optional<std::pair<double, double>> declared_modulus() const override {
        return std::make_pair(0.0, 1.0);
    }

private:
    int n_;
    double c_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class TensorMode { Analytic, FiniteDifference };

/// Symmetric n x n fundamental tensor evaluated at one slit-bundle point.
struct FundamentalTensor {
    Eigen::MatrixXd entries;
    TensorMode mode = TensorMode::Analytic;
};

/// F(u, X); checks the dimension contract and the X = 0 convention.
double eval_norm(const FinslerStructure& F, const TangentSample& s);

/// (1/2) d^2F^2/dX^2 at s. Finite-difference mode uses symmetrized central
/// second differences of F^2 with step 1e-4 * max(|X|, 1).
FundamentalTensor fundamental_tensor(const FinslerStructure& F, const TangentSample& s,
                                     TensorMode mode = TensorMode::Analytic);

/// Max relative deviation over samples x scales of f_ij(u, lambda X) from
/// f_ij(u, X) and of F(u, lambda X) from lambda F(u, X).
double verify_homogeneity(const FinslerStructure& F, const std::vector<TangentSample>& samples,
                          const std::vector<double>& scales,
                          TensorMode mode = TensorMode::Analytic);

/// Max relative deviation of f_ij(u, X) X^i X^j from F^2(u, X).
double verify_euler_identity(const FinslerStructure& F, const std::vector<TangentSample>& samples,
                             TensorMode mode = TensorMode::Analytic);

/// Eigenvalue range of the fundamental tensor over u_samples x uniformly
/// spaced unit directions. Throws ConvexityViolation (naming the sample) on
/// a nonpositive eigenvalue.
ConvexityBounds estimate_convexity_bounds(const FinslerStructure& F,
                                          const std::vector<Eigen::VectorXd>& u_samples,
                                          int direction_count);

/// Least-squares power-law fit of the u-modulus of F^2 over the given pairs;
/// each pair's ratio sup_X |F^2(u,X)-F^2(v,X)| / |X|^2 is maximized over
/// X_samples. Identical pairs are skipped; all skipped raises EmptySampleError.
/// The bound is capped at t = 4 * (diameter of the probed u set)^2.
ModulusFit estimate_modulus(const FinslerStructure& F,
                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& u_pairs,
                            const std::vector<Eigen::VectorXd>& X_samples);

/// Deterministic default pair set for estimate_modulus: anchors at the origin
/// and at seeded random points, separations log-spaced over three decades.
std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>
default_modulus_pairs(int dim, unsigned long long seed, int per_anchor = 24);

/// Deterministic slit-bundle sample set for the verification drivers.
std::vector<TangentSample> random_slit_samples(int dim, int count, unsigned long long seed);

} // namespace centore
