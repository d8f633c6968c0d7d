#include <benchmark/benchmark.h>

#include <memory>

#include "centore/energy.hpp"
#include "centore/minimizer.hpp"

using namespace centore;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

DiscreteMap warped_map(std::shared_ptr<const DomainGrid> grid) {
    return DiscreteMap::interpolate_boundary(grid, BoundaryData::sine_warp(0.3, 0.2));
}

} // namespace

static void BM_FundamentalTensorRanders(benchmark::State& state) {
    const RandersMetric randers(2, vec2(0.3, 0.1));
    const TangentSample s{vec2(0.4, -0.2), vec2(0.8, 0.6)};
    for (auto _ : state) {
        auto t = fundamental_tensor(randers, s);
        benchmark::DoNotOptimize(t.entries.data());
    }
}
BENCHMARK(BM_FundamentalTensorRanders);

static void BM_CoefficientsRanders(benchmark::State& state) {
    const RandersMetric randers(2, vec2(0.3, 0.1));
    const CircleQuadrature quad(static_cast<int>(state.range(0)));
    const OrthonormalFrame frame{Eigen::Matrix2d::Identity()};
    Eigen::MatrixXd p(2, 2);
    p << 0.8, -0.3, 0.2, 1.1;
    const Eigen::VectorXd u = vec2(0.4, -0.2);
    for (auto _ : state) {
        auto e = coefficients({0.5, 0.5}, u, p, randers, quad, frame, 1.0);
        benchmark::DoNotOptimize(e.blocks[0].data());
    }
}
BENCHMARK(BM_CoefficientsRanders)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

static void BM_TotalEnergy(benchmark::State& state) {
    auto grid = std::make_shared<DomainGrid>(static_cast<int>(state.range(0)));
    const RandersMetric randers(2, vec2(0.3, 0.1));
    const CircleQuadrature quad(32);
    const SourceMetric g = SourceMetric::euclidean();
    const DiscreteMap m = warped_map(grid);
    for (auto _ : state) {
        benchmark::DoNotOptimize(total_energy(m, randers, quad, g));
    }
    state.SetComplexityN(grid->triangle_count());
}
BENCHMARK(BM_TotalEnergy)->Arg(33)->Arg(65)->Arg(129)->Complexity();

static void BM_EnergyGradient(benchmark::State& state) {
    auto grid = std::make_shared<DomainGrid>(65);
    const RandersMetric randers(2, vec2(0.3, 0.1));
    const CircleQuadrature quad(32);
    const SourceMetric g = SourceMetric::euclidean();
    const DiscreteMap m = warped_map(grid);
    const AssemblyOptions opts{static_cast<int>(state.range(0))};
    for (auto _ : state) {
        auto grad = energy_gradient(m, randers, quad, g, opts);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(BM_EnergyGradient)->Arg(1)->Arg(2);

static void BM_HarmonicExtension(benchmark::State& state) {
    auto grid = std::make_shared<DomainGrid>(static_cast<int>(state.range(0)));
    const BoundaryData phi = BoundaryData::sine_warp(0.3, 0.2);
    for (auto _ : state) {
        auto m = harmonic_extension(grid, phi);
        benchmark::DoNotOptimize(m.values().data());
    }
}
BENCHMARK(BM_HarmonicExtension)->Arg(33)->Arg(65);

BENCHMARK_MAIN();
