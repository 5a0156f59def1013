#include <doctest.h>

#include <cmath>

#include "stableheat/errors.hpp"
#include "stableheat/simulate.hpp"

using namespace stableheat;

namespace {

SimulationConfig base_config(int n = 48) {
  SimulationConfig cfg;
  cfg.operator_spec = GeneratorSpec::fractional(1.5, 1.0);
  cfg.grid = DomainGrid::make(1.0, n);
  cfg.noise = CorrelationModel::white();
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);
  cfg.xi = 1.0;
  cfg.dt = 2e-3;
  cfg.horizon = 0.5;
  cfg.paths = 4000;
  cfg.seed = 42;
  cfg.record_times = {0.1, 0.25, 0.5};
  cfg.moment_orders = {2, 4};
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("sigma validation: bounds and witnesses") {
  const ValidationReport lin = validate_sigma(SigmaFunction::linear(1.0));
  CHECK(lin.all_pass());

  const ValidationReport sat = validate_sigma(SigmaFunction::saturating(1.0, 0.5));
  CHECK(sat.all_pass());
  for (const CheckResult& c : sat.checks) {
    if (c.name == "ratio_lower_bound") CHECK(c.measured >= 1.0 - 1e-12);
    if (c.name == "ratio_upper_bound") CHECK(c.measured <= 1.5 + 1e-12);
  }

  const ValidationReport zero = validate_sigma(SigmaFunction::linear(0.0));
  CHECK_FALSE(zero.all_pass());
  CHECK_THROWS_AS(require_valid_sigma(SigmaFunction::linear(0.0)), ValidationError);

  CHECK_THROWS_AS(SigmaFunction::saturating(-1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(SigmaFunction::saturating(1.0, 1.0), ValidationError);
}

TEST_CASE("noiseless step reduces to the semigroup and zero is absorbing") {
  const DomainGrid g = DomainGrid::make(1.0, 48);
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(1.5, 1.0), g)));
  const auto prop = eval.propagator(0.01);
  const auto nprop = eval.noise_propagator(0.01);
  const SigmaFunction sigma = SigmaFunction::linear(1.0);
  const Eigen::VectorXd u0 = InitialCondition::bump(1.0, 0.5).evaluate(g);
  const Eigen::VectorXd dF = Eigen::VectorXd::Constant(g.n, 0.37);

  const Eigen::VectorXd stepped = mild_euler_step(u0, 0.0, sigma, *prop, *nprop, g.h, dF);
  const Eigen::VectorXd semigroup = eval.apply_semigroup(0.01, u0);
  CHECK((stepped - semigroup).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.n);
  const Eigen::VectorXd z = mild_euler_step(zero, 2.0, sigma, *prop, *nprop, g.h, dF);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);  // sigma(0) = 0
}

TEST_CASE("xi=0 ensemble equals the deterministic semigroup with zero variance") {
  SimulationConfig cfg = base_config();
  cfg.xi = 0.0;
  cfg.paths = 13;
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(cfg.operator_spec, cfg.grid)));
  const EnsembleSummary s = simulate_ensemble(cfg, eval, white_noise_sampler(cfg.grid, cfg.seed));
  const Eigen::VectorXd u0 = cfg.u0.evaluate(cfg.grid);
  for (size_t r = 0; r < s.record_times.size(); ++r) {
    const Eigen::VectorXd g = eval.apply_semigroup(s.record_times[r], u0);
    for (int i = 0; i < cfg.grid.n; ++i) {
      CHECK(s.moment(static_cast<int>(r), i, 2) ==
            doctest::Approx(g[i] * g[i]).epsilon(1e-12));
      CHECK(s.moment_stderr(static_cast<int>(r), i, 2) <= 1e-13);
    }
  }
}

TEST_CASE("ensemble mean obeys the Ito identity within 4 standard errors") {
  SimulationConfig cfg = base_config();
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(cfg.operator_spec, cfg.grid)));
  const EnsembleSummary s = simulate_ensemble(cfg, eval, white_noise_sampler(cfg.grid, cfg.seed));
  const Eigen::VectorXd u0 = cfg.u0.evaluate(cfg.grid);
  for (size_t r = 0; r < s.record_times.size(); ++r) {
    const Eigen::VectorXd g = eval.apply_semigroup(s.record_times[r], u0);
    const double m = static_cast<double>(s.m_effective[r]);
    for (int i = 0; i < cfg.grid.n; ++i) {
      const double mean = s.mean(static_cast<int>(r), i);
      const double var = std::max(s.moment(static_cast<int>(r), i, 2) - mean * mean, 0.0);
      const double se = std::sqrt(var / m) + 1e-15;
      CHECK(std::abs(mean - g[i]) <= 4.0 * se);
    }
  }
}

TEST_CASE("results are bit-identical for any worker count") {
  SimulationConfig cfg = base_config();
  cfg.paths = 600;
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(cfg.operator_spec, cfg.grid)));
  const NoiseIncrementSampler sampler = white_noise_sampler(cfg.grid, cfg.seed);

  cfg.threads = 1;
  const EnsembleSummary s1 = simulate_ensemble(cfg, eval, sampler);
  cfg.threads = 4;
  const EnsembleSummary s4 = simulate_ensemble(cfg, eval, sampler);
  cfg.threads = 8;
  const EnsembleSummary s8 = simulate_ensemble(cfg, eval, sampler);

  CHECK((s1.sum_u - s4.sum_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.sum_u - s8.sum_u).cwiseAbs().maxCoeff() == 0.0);
  for (size_t q = 0; q < s1.sum_pow.size(); ++q) {
    CHECK((s1.sum_pow[q] - s4.sum_pow[q]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1.sum_pow[q] - s8.sum_pow[q]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1.sum_pow2[q] - s8.sum_pow2[q]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("weak step-size self-consistency: dt vs dt/2 within 3 stderr") {
  SimulationConfig cfg = base_config();
  cfg.paths = 6000;
  cfg.record_times = {0.25, 0.5};
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(cfg.operator_spec, cfg.grid)));
  const NoiseIncrementSampler sampler = white_noise_sampler(cfg.grid, cfg.seed);
  const EnsembleSummary coarse = simulate_ensemble(cfg, eval, sampler);
  cfg.dt /= 2.0;
  cfg.seed = 43;  // independent draws for an honest comparison
  const EnsembleSummary fine = simulate_ensemble(cfg, eval, white_noise_sampler(cfg.grid, 43));
  for (size_t r = 0; r < coarse.record_times.size(); ++r)
    for (int i = 0; i < cfg.grid.n; i += 5) {
      const double a = coarse.moment(static_cast<int>(r), i, 2);
      const double b = fine.moment(static_cast<int>(r), i, 2);
      const double se = std::hypot(coarse.moment_stderr(static_cast<int>(r), i, 2),
                                   fine.moment_stderr(static_cast<int>(r), i, 2));
      CHECK(std::abs(a - b) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("sample Cauchy-Schwarz holds exactly on streamed sums") {
  SimulationConfig cfg = base_config();
  cfg.paths = 2000;
  const EnsembleSummary s = simulate_ensemble(cfg);
  const int q2 = s.order_slot(2), q4 = s.order_slot(4);
  for (size_t r = 0; r < s.record_times.size(); ++r)
    for (int i = 0; i < cfg.grid.n; ++i) {
      const double m = static_cast<double>(s.m_effective[r]);
      CHECK(s.sum_pow[static_cast<size_t>(q4)](static_cast<int>(r), i) >=
            s.sum_pow[static_cast<size_t>(q2)](static_cast<int>(r), i) *
                s.sum_pow[static_cast<size_t>(q2)](static_cast<int>(r), i) / m);
    }
}

TEST_CASE("config validation guards") {
  SimulationConfig cfg = base_config();
  const double mu1 = 1.6;
  cfg.dt = 0.2;  // violates dt <= 0.1/mu1
  CHECK_THROWS_AS(cfg.validate(mu1), ValidationError);
  cfg = base_config();
  cfg.record_times = {0.2, 0.1};
  CHECK_THROWS_AS(cfg.validate(mu1), ValidationError);
  cfg = base_config();
  cfg.moment_orders = {1};
  CHECK_THROWS_AS(cfg.validate(mu1), ValidationError);
  cfg = base_config();
  cfg.xi = -1.0;
  CHECK_THROWS_AS(cfg.validate(mu1), ValidationError);

  // Dalang failure surfaces as an assumption violation
  SimulationConfig bad = base_config();
  bad.operator_spec = GeneratorSpec::fractional(0.9, 1.0);
  bad.dt = 1e-3;
  CHECK_THROWS_AS(simulate_ensemble(bad), AssumptionViolation);
}

TEST_CASE("zero-mass initial condition is rejected") {
  SimulationConfig cfg = base_config();
  cfg.u0 = InitialCondition::constant(0.0);
  CHECK_THROWS_AS(simulate_ensemble(cfg), ValidationError);
}
