#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "centore/errors.hpp"
#include "centore/finsler.hpp"

using namespace centore;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

std::vector<std::unique_ptr<FinslerStructure>> builtin_roster() {
    std::vector<std::unique_ptr<FinslerStructure>> metrics;
    metrics.push_back(std::make_unique<EuclideanMetric>(2));
    metrics.push_back(std::make_unique<ConformalInUMetric>(
        2, 0.1, ConformalInUMetric::Profile::SmoothSin));
    metrics.push_back(std::make_unique<ConformalInUMetric>(
        2, 0.3, ConformalInUMetric::Profile::RootAbsSin));
    metrics.push_back(std::make_unique<RandersMetric>(2, vec2(0.3, 0.0)));
    metrics.push_back(std::make_unique<MinkowskiQuarticMetric>(2, 0.1));
    return metrics;
}

} // namespace

TEST_CASE("eval_norm basics") {
    const EuclideanMetric euclid(2);
    CHECK(eval_norm(euclid, {vec2(0, 0), vec2(3, 4)}) == doctest::Approx(5.0));
    CHECK(eval_norm(euclid, {vec2(1, -2), vec2(0, 0)}) == 0.0);

    const RandersMetric randers(2, vec2(0.5, 0.0));
    CHECK(eval_norm(randers, {vec2(7, -3), vec2(1, 0)}) == doctest::Approx(1.5));
    CHECK(eval_norm(randers, {vec2(0, 0), vec2(0, 0)}) == 0.0);

    Eigen::VectorXd bad(3);
    bad << 1, 2, 3;
    CHECK_THROWS_AS(eval_norm(euclid, {bad, bad}), ContractViolation);
}

TEST_CASE("fundamental tensor of the flat and conformal metrics") {
    const EuclideanMetric euclid(2);
    const auto t = fundamental_tensor(euclid, {vec2(0, 0), vec2(1, 2)});
    CHECK((t.entries - Eigen::Matrix2d::Identity()).norm() == doctest::Approx(0.0));

    // factor 1 + eps sin(u1) at u1 = pi/2 gives 1.1 * identity for any X != 0
    const ConformalInUMetric conf(2, 0.1, ConformalInUMetric::Profile::SmoothSin);
    const auto tc = fundamental_tensor(conf, {vec2(M_PI / 2, 0), vec2(0.3, -2)});
    CHECK((tc.entries - 1.1 * Eigen::Matrix2d::Identity()).norm() < 1e-12);

    CHECK_THROWS_AS(fundamental_tensor(euclid, {vec2(0, 0), vec2(0, 0)}), SlitBundleError);
}

TEST_CASE("finite differences cross-validate the analytic Randers tensor") {
    const RandersMetric randers(2, vec2(0.3, 0.0));
    const TangentSample s{vec2(0, 0), vec2(1, 1)};
    const auto analytic = fundamental_tensor(randers, s, TensorMode::Analytic);
    const auto fd = fundamental_tensor(randers, s, TensorMode::FiniteDifference);
    CHECK((analytic.entries - fd.entries).norm() / analytic.entries.norm() < 1e-6);
}

TEST_CASE("analytic and finite-difference tensors agree on the whole roster") {
    const auto samples = random_slit_samples(2, 64, 101);
    for (const auto& metric : builtin_roster()) {
        for (const auto& s : samples) {
            const auto a = fundamental_tensor(*metric, s, TensorMode::Analytic);
            const auto fd = fundamental_tensor(*metric, s, TensorMode::FiniteDifference);
            CAPTURE(metric->name());
            CHECK((a.entries - fd.entries).norm() / a.entries.norm() < 1e-5);
        }
    }
}

TEST_CASE("finite-difference tensors are exactly symmetric") {
    const RandersMetric randers(2, vec2(0.4, 0.2));
    const auto samples = random_slit_samples(2, 16, 7);
    for (const auto& s : samples) {
        const auto fd = fundamental_tensor(randers, s, TensorMode::FiniteDifference);
        CHECK(fd.entries(0, 1) == fd.entries(1, 0));
    }
}

TEST_CASE("homogeneity of F and degree-0 homogeneity of the tensor") {
    const std::vector<double> scales = {0.5, 2.0, 10.0};
    const auto samples = random_slit_samples(2, 128, 33);

    for (const auto& metric : builtin_roster()) {
        CAPTURE(metric->name());
        CHECK(verify_homogeneity(*metric, samples, scales, TensorMode::Analytic) < 1e-10);
        CHECK(verify_homogeneity(*metric, samples, scales, TensorMode::FiniteDifference) < 1e-5);
    }

    const EuclideanMetric euclid(2);
    CHECK(verify_homogeneity(euclid, {{vec2(0, 0), vec2(1, 2)}}, {2.0}) == 0.0);
}

TEST_CASE("Euler identity: tensor contraction reproduces F^2") {
    const EuclideanMetric euclid(2);
    const TangentSample s{vec2(0, 0), vec2(3, 4)};
    const auto t = fundamental_tensor(euclid, s);
    CHECK(s.X.dot(t.entries * s.X) == doctest::Approx(25.0));

    const RandersMetric randers(2, vec2(0.5, 0.0));
    const TangentSample sr{vec2(0, 0), vec2(1, 0)};
    const auto tr = fundamental_tensor(randers, sr);
    CHECK(sr.X.dot(tr.entries * sr.X) == doctest::Approx(2.25));

    const auto samples = random_slit_samples(2, 128, 55);
    for (const auto& metric : builtin_roster()) {
        CAPTURE(metric->name());
        CHECK(verify_euler_identity(*metric, samples, TensorMode::Analytic) < 1e-8);
        CHECK(verify_euler_identity(*metric, samples, TensorMode::FiniteDifference) < 1e-5);
    }
}

TEST_CASE("convexity bounds of the roster") {
    const EuclideanMetric euclid(2);
    const auto be = estimate_convexity_bounds(euclid, {vec2(0, 0)}, 16);
    CHECK(be.lambda_min == doctest::Approx(1.0));
    CHECK(be.lambda_max == doctest::Approx(1.0));

    // eigenvalues of the conformal tensor are 1 + eps sin(u1)
    const ConformalInUMetric conf(2, 0.1, ConformalInUMetric::Profile::SmoothSin);
    std::vector<Eigen::VectorXd> us;
    for (int k = 0; k < 64; ++k) us.push_back(vec2(-2.0 + 4.0 * k / 63.0, 0.0));
    const auto bc = estimate_convexity_bounds(conf, us, 16);
    CHECK(bc.lambda_min == doctest::Approx(0.9).epsilon(1e-3));
    CHECK(bc.lambda_max == doctest::Approx(1.1).epsilon(1e-3));

    CHECK_THROWS_AS(estimate_convexity_bounds(euclid, {vec2(0, 0)}, 4), ContractViolation);
}

TEST_CASE("Randers convexity: positive for |b| < 1, violated beyond") {
    const RandersMetric good(2, vec2(0.5, 0.0));
    // dense-direction oracle: 10^4 directions at a handful of points
    const auto bounds = estimate_convexity_bounds(good, {vec2(0, 0), vec2(1, -1)}, 10000);
    CHECK(bounds.lambda_min > 0.0);
    // the sharp range for |b| = 0.5 is [(1-|b|)^2, (1+|b|)^2]
    CHECK(bounds.lambda_min == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(bounds.lambda_max == doctest::Approx(2.25).epsilon(1e-6));

    const RandersMetric bad(2, vec2(1.1, 0.0));
    CHECK_THROWS_AS(estimate_convexity_bounds(bad, {vec2(0, 0)}, 64), ConvexityViolation);
}

TEST_CASE("modulus fit: u-independent metrics report zero") {
    const EuclideanMetric euclid(2);
    const auto fit = estimate_modulus(euclid, default_modulus_pairs(2, 3),
                                      {vec2(1, 0), vec2(0.3, -0.7)});
    CHECK(fit.c_omega == 0.0);
    CHECK_FALSE(fit.sigma_defined);
}

TEST_CASE("modulus fit: smooth conformal metric has sigma one half") {
    const ConformalInUMetric conf(2, 0.1, ConformalInUMetric::Profile::SmoothSin);
    const auto fit = estimate_modulus(conf, default_modulus_pairs(2, 3),
                                      {vec2(1, 0), vec2(-0.5, 2.0)});
    REQUIRE(fit.sigma_defined);
    CHECK(fit.sigma == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(fit.sigma - 0.5) < 0.05);
    CHECK(fit.c_omega <= 0.1 + 1e-9);
}

TEST_CASE("modulus fit: rough conformal metric has sigma one quarter") {
    const ConformalInUMetric rough(2, 0.3, ConformalInUMetric::Profile::RootAbsSin);
    const auto fit = estimate_modulus(rough, default_modulus_pairs(2, 3),
                                      {vec2(1, 0), vec2(0.2, 0.9)});
    REQUIRE(fit.sigma_defined);
    CHECK(std::abs(fit.sigma - 0.25) < 0.05);
}

TEST_CASE("modulus fit: identical pairs are skipped, all-skipped raises") {
    const ConformalInUMetric conf(2, 0.1, ConformalInUMetric::Profile::SmoothSin);
    const Eigen::VectorXd u = vec2(0.3, 0.4);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs = {{u, u}};
    CHECK_THROWS_AS(estimate_modulus(conf, pairs, {vec2(1, 0)}), EmptySampleError);
}

TEST_CASE("grad_sq_x matches finite differences of F^2") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const auto& metric : builtin_roster()) {
        for (int k = 0; k < 24; ++k) {
            const Eigen::VectorXd u = vec2(dist(rng), dist(rng));
            Eigen::VectorXd X = vec2(dist(rng), dist(rng));
            if (X.norm() < 0.1) X = vec2(1.0, 0.5);
            const Eigen::VectorXd g = metric->grad_sq_x(u, X);
            const double h = 1e-6;
            for (int i = 0; i < 2; ++i) {
                Eigen::VectorXd xp = X, xm = X;
                xp(i) += h;
                xm(i) -= h;
                const double fd = (metric->eval_sq(u, xp) - metric->eval_sq(u, xm)) / (2 * h);
                CAPTURE(metric->name());
                CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("degree-1 homogeneity of grad_sq_x and the zero-section convention") {
    const MinkowskiQuarticMetric mink(2, 0.1);
    const Eigen::VectorXd u = vec2(0, 0);
    const Eigen::VectorXd X = vec2(0.7, -0.2);
    CHECK((mink.grad_sq_x(u, 3.0 * X) - 3.0 * mink.grad_sq_x(u, X)).norm() < 1e-12);
    CHECK(mink.grad_sq_x(u, vec2(0, 0)).norm() == 0.0);
}
