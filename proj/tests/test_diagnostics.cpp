#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "centore/diagnostics.hpp"
#include "centore/errors.hpp"

using namespace centore;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

std::shared_ptr<DomainGrid> fine_grid() { return std::make_shared<DomainGrid>(129); }

DiscreteMap affine_map(std::shared_ptr<const DomainGrid> grid) {
    return DiscreteMap::from_function(
        grid, [](const Eigen::Vector2d& x) { return vec2(x(0), x(1)); }, 2);
}

} // namespace

TEST_CASE("decay fit recovers exact power laws") {
    const std::vector<double> radii = {0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> values;
    for (double r : radii) values.push_back(3.0 * std::pow(r, 2.5));
    const DecayFit fit = fit_decay(radii, values);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.exponent == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(fit.constant == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.residual < 1e-12);

    const DecayFit degenerate = fit_decay(radii, {0.0, 0.0, 1e-16, 0.0});
    CHECK(degenerate.degenerate);

    CHECK_THROWS_AS(fit_decay({0.1, 0.2}, {1.0, 2.0}), ContractViolation);
}

TEST_CASE("gradient recovery is exact on affine maps, second differences vanish") {
    auto grid = std::make_shared<DomainGrid>(33);
    const DiscreteMap m = DiscreteMap::from_function(
        grid, [](const Eigen::Vector2d& x) { return vec2(2 * x(0) - x(1), 0.5 * x(1)); }, 2);
    const GradientField field(m);
    Eigen::MatrixXd expect(2, 2);
    expect << 2, -1, 0, 0.5;
    for (int v = 0; v < grid->node_count(); ++v) {
        CHECK((field.recovered(v) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(field.hessian_sq(v) < 1e-20);
    }
}

TEST_CASE("dirichlet growth of reference fields") {
    auto grid = fine_grid();
    const Eigen::Vector2d x0(0.5, 0.5);
    const auto radii = nested_radii(*grid, x0, 4);

    // affine map: int over Q(rho) of |Du|^2 = 2 (2 rho)^2 = 8 rho^2
    const DiscreteMap aff = affine_map(grid);
    const DecayFit fit = dirichlet_growth_fit(aff, x0, radii);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.005));
    for (std::size_t k = 0; k < radii.size(); ++k)
        CHECK(fit.values[k] == doctest::Approx(8.0 * radii[k] * radii[k]).epsilon(1e-10));

    // constant map: degenerate
    const DiscreteMap constant = DiscreteMap::from_function(
        grid, [](const Eigen::Vector2d&) { return vec2(1.0, -2.0); }, 2);
    CHECK(dirichlet_growth_fit(constant, x0, radii).degenerate);
}

TEST_CASE("dirichlet window values are monotone in the radius") {
    auto grid = std::make_shared<DomainGrid>(65);
    const DiscreteMap m = DiscreteMap::interpolate_boundary(
        grid, BoundaryData::sine_warp(0.3, 0.2));
    const auto radii = nested_radii(*grid, {0.5, 0.5}, 3);
    const DecayFit fit = dirichlet_growth_fit(m, {0.5, 0.5}, radii);
    for (std::size_t k = 1; k < fit.values.size(); ++k)
        CHECK(fit.values[k] <= fit.values[k - 1]);
}

TEST_CASE("campanato fit on synthetic fields") {
    auto grid = fine_grid();
    const Eigen::Vector2d x0(0.5, 0.5);
    const auto radii = nested_radii(*grid, x0, 4);

    // affine: oscillation identically zero
    CHECK(campanato_fit(affine_map(grid), x0, radii).degenerate);

    // |x - x0|^{3/2} radial profile: Du ~ |x|^{1/2}, oscillation ~ rho^3,
    // reported alpha = (3 - 2) / 2 = 1/2
    const DiscreteMap synthetic = DiscreteMap::from_function(
        grid,
        [&x0](const Eigen::Vector2d& x) {
            return vec2(std::pow((x - x0).norm(), 1.5), 0.0);
        },
        2);
    const DecayFit fit = campanato_fit(synthetic, x0, radii);
    CHECK_FALSE(fit.degenerate);
    const double alpha = 0.5 * (fit.exponent - 2.0);
    CHECK(alpha == doctest::Approx(0.5).epsilon(0.2));
    CHECK(std::abs(alpha - 0.5) < 0.1);

    // boundary probes are rejected
    CHECK_THROWS_AS(campanato_fit(affine_map(grid), {0.5, 0.0}, radii), ContractViolation);
}

TEST_CASE("diagnostics leave the map untouched") {
    auto grid = fine_grid();
    const DiscreteMap m = DiscreteMap::interpolate_boundary(
        grid, BoundaryData::sine_warp(0.3, 0.2));
    const std::uint64_t before = m.content_hash();
    const auto radii = nested_radii(*grid, {0.5, 0.5}, 3);
    (void)dirichlet_growth_fit(m, {0.5, 0.5}, radii);
    (void)campanato_fit(m, {0.5, 0.5}, radii);
    (void)holder_exponent(m, default_holder_pairs(*grid, {0.5, 0.5}, 5));
    (void)caccioppoli_ratio(m, {make_window({0.5, 0.5}, 0.25)});
    CHECK(m.content_hash() == before);
}

TEST_CASE("caccioppoli ratio of the quadratic synthetic field") {
    auto grid = fine_grid();
    const Eigen::Vector2d x0(0.5, 0.5);
    // v = (x1^2, 0): D^2 v constant, closed-form ratio
    //   num = 4 r^2, den = (16/3) r^2, ratio = 3/4
    const DiscreteMap quadratic = DiscreteMap::from_function(
        grid, [](const Eigen::Vector2d& x) { return vec2(x(0) * x(0), 0.0); }, 2);
    const std::vector<WindowSpec> windows = {make_window(x0, 0.25), make_window(x0, 0.125)};
    const auto records = caccioppoli_ratio(quadratic, windows);
    REQUIRE(records.size() == 2);
    for (const auto& rec : records) {
        REQUIRE_FALSE(rec.skipped);
        CHECK(rec.value == doctest::Approx(0.75).epsilon(0.05));
    }

    // affine: numerator and denominator both vanish -> skipped
    const auto skipped = caccioppoli_ratio(affine_map(grid), windows);
    CHECK(skipped[0].skipped);
    CHECK_FALSE(skipped[0].reason.empty());
}

TEST_CASE("reverse Hoelder ratio is one for constant second differences") {
    auto grid = fine_grid();
    const DiscreteMap quadratic = DiscreteMap::from_function(
        grid, [](const Eigen::Vector2d& x) { return vec2(x(0) * x(0), 0.0); }, 2);
    const std::vector<WindowSpec> windows = {make_window({0.5, 0.5}, 0.25)};
    const auto records = reverse_holder_ratio(quadratic, windows, 2.5);
    REQUIRE_FALSE(records[0].skipped);
    CHECK(records[0].value == doctest::Approx(1.0).epsilon(0.02));

    CHECK(reverse_holder_ratio(affine_map(grid), windows, 2.5)[0].skipped);
    CHECK_THROWS_AS(reverse_holder_ratio(quadratic, windows, 3.5), ContractViolation);
}

TEST_CASE("higher integrability ratio") {
    auto grid = std::make_shared<DomainGrid>(33);
    Eigen::Matrix2d A;
    A << 1, 0.3, -0.2, 1;
    const BoundaryData phi = BoundaryData::affine(A, {0, 0});
    // u equal to the interpolated data: ratio exactly 1
    const DiscreteMap u = DiscreteMap::interpolate_boundary(grid, phi);
    const RatioRecord rec = higher_integrability_check(u, phi, 2.5);
    REQUIRE_FALSE(rec.skipped);
    CHECK(rec.value == doctest::Approx(1.0).epsilon(1e-12));

    const BoundaryData constant = BoundaryData::constant(vec2(1, 1));
    const DiscreteMap uc = DiscreteMap::interpolate_boundary(grid, constant);
    CHECK(higher_integrability_check(uc, constant, 2.5).skipped);
}

TEST_CASE("holder exponent of synthetic profiles") {
    auto grid = fine_grid();
    const Eigen::Vector2d x0(0.5, 0.5);

    // affine: Lipschitz, slope 1
    const auto pairs = default_holder_pairs(*grid, x0, 11);
    const HolderFit lip = holder_exponent(affine_map(grid), pairs);
    CHECK_FALSE(lip.degenerate);
    CHECK(lip.beta == doctest::Approx(1.0).epsilon(0.01));

    // |x - x0|^{0.7} radial profile
    const DiscreteMap radial = DiscreteMap::from_function(
        grid,
        [&x0](const Eigen::Vector2d& x) {
            return vec2(std::pow((x - x0).norm(), 0.7), 0.0);
        },
        2);
    const HolderFit frac = holder_exponent(radial, pairs);
    CHECK(std::abs(frac.beta - 0.7) < 0.05);

    // too few pairs violate the contract
    std::vector<std::pair<int, int>> few = {{0, 1}, {0, 2}};
    CHECK_THROWS_AS(holder_exponent(affine_map(grid), few), ContractViolation);

    // a coarse grid cannot span two decades
    const DomainGrid coarse(33);
    CHECK_THROWS_AS(default_holder_pairs(coarse, {0.5, 0.5}, 1), ContractViolation);
}

TEST_CASE("frozen comparison decay on the Euclidean target degenerates") {
    auto grid = std::make_shared<DomainGrid>(65);
    const EuclideanMetric euclid(2);
    const SourceMetric g = SourceMetric::euclidean();
    const CircleQuadrature quad(32);
    const BoundaryData phi = BoundaryData::affine(Eigen::Matrix2d::Identity(), {0, 0});

    SolveConfig cfg;
    const SolveResult solve = minimize(euclid, grid, g, phi, quad, cfg);
    REQUIRE(solve.converged);

    const auto radii = nested_radii(*grid, {0.5, 0.5}, 3);
    const FrozenComparison cmp =
        frozen_comparison_decay(solve.map, euclid, g, {0.5, 0.5}, radii, quad, cfg, 2.5);
    CHECK(cmp.fit.degenerate);
    for (const auto& rec : cmp.records) {
        CHECK_FALSE(rec.failed);
        CHECK(rec.dw_sq_integral < 1e-12);
    }
}

TEST_CASE("frozen comparison decay on a conformal target has exponent above two") {
    auto grid = fine_grid();
    const ConformalInUMetric conf(2, 0.4, ConformalInUMetric::Profile::SmoothSin);
    const SourceMetric g = SourceMetric::euclidean();
    const CircleQuadrature quad(32);
    const BoundaryData phi = BoundaryData::sine_warp(0.3, 0.2);

    SolveConfig cfg;
    cfg.max_iterations = 4000;
    const SolveResult solve = minimize(conf, grid, g, phi, quad, cfg);
    REQUIRE(solve.converged);

    const auto radii = nested_radii(*grid, {0.5, 0.5}, 4);
    const FrozenComparison cmp =
        frozen_comparison_decay(solve.map, conf, g, {0.5, 0.5}, radii, quad, cfg, 2.5);
    REQUIRE_FALSE(cmp.fit.degenerate);
    CHECK(cmp.fit.exponent > 2.0);
    REQUIRE(cmp.coarsest_v.has_value());
    for (const auto& rec : cmp.records) CHECK(rec.lq_ratio <= 1.05);
}
