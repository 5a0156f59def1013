#include <benchmark/benchmark.h>

#include "stableheat/heat_kernel.hpp"
#include "stableheat/noise.hpp"
#include "stableheat/operators.hpp"
#include "stableheat/simulate.hpp"
#include "stableheat/volterra.hpp"

namespace {

using namespace stableheat;

void BM_BuildFractionalOperator(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, static_cast<int>(state.range(0)));
  const GeneratorSpec spec = GeneratorSpec::fractional(1.5, 1.0);
  for (auto _ : state) {
    DiscreteOperator op = build_operator(spec, grid);
    benchmark::DoNotOptimize(op.matrix.data());
  }
}
BENCHMARK(BM_BuildFractionalOperator)->Arg(128)->Arg(256)->Arg(512);

void BM_Eigendecompose(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, static_cast<int>(state.range(0)));
  const DiscreteOperator op = build_operator(GeneratorSpec::fractional(1.5, 1.0), grid);
  for (auto _ : state) {
    SpectralDecomposition sd = eigendecompose(op);
    benchmark::DoNotOptimize(sd.mu1);
  }
}
BENCHMARK(BM_Eigendecompose)->Arg(128)->Arg(255)->Arg(511)->Unit(benchmark::kMillisecond);

void BM_PropagatorApply(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, static_cast<int>(state.range(0)));
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(1.5, 1.0), grid)));
  Eigen::VectorXd v = Eigen::VectorXd::Ones(grid.n);
  for (auto _ : state) {
    v = eval.apply_semigroup(0.01, v);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_PropagatorApply)->Arg(64)->Arg(256);

void BM_ColoredIncrement(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, static_cast<int>(state.range(0)));
  const NoiseIncrementSampler sampler =
      build_covariance(CorrelationModel::riesz(0.5), grid, 42);
  std::uint64_t step = 0;
  for (auto _ : state) {
    Eigen::VectorXd z = sampler.sample_increment(1e-3, 0, step++);
    benchmark::DoNotOptimize(z.data());
  }
}
BENCHMARK(BM_ColoredIncrement)->Arg(64)->Arg(256);

void BM_EnsembleStep(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, 64);
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(1.5, 1.0), grid)));
  const NoiseIncrementSampler sampler = white_noise_sampler(grid, 42);
  const SigmaFunction sigma = SigmaFunction::linear(1.0);
  const auto prop = eval.propagator(1e-3);
  const auto noise_prop = eval.noise_propagator(1e-3);
  Eigen::VectorXd u = InitialCondition::bump(1.0, 0.5).evaluate(grid);
  std::uint64_t step = 0;
  for (auto _ : state) {
    const Eigen::VectorXd dF = sampler.sample_increment(1e-3, 0, step++);
    u = mild_euler_step(u, 1.0, sigma, *prop, *noise_prop, grid.h, dF);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_EnsembleStep);

void BM_VolterraWhite(benchmark::State& state) {
  const DomainGrid grid = DomainGrid::make(1.0, static_cast<int>(state.range(0)));
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(1.5, 1.0), grid)));
  const Eigen::VectorXd u0 = InitialCondition::bump(1.0, 0.5).evaluate(grid);
  const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
  for (auto _ : state) {
    MomentCurve c = solve_volterra_white(eval, u0, 1.0, 1.0, 1.0 / 64.0, 1.0, times);
    benchmark::DoNotOptimize(c.values.data());
  }
}
BENCHMARK(BM_VolterraWhite)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
