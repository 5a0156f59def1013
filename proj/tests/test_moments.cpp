#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "stableheat/errors.hpp"
#include "stableheat/simulate.hpp"
#include "stableheat/volterra.hpp"

using namespace stableheat;

namespace {

struct Lab {
  DomainGrid grid;
  HeatKernelEvaluator eval;
  Eigen::VectorXd u0;

  explicit Lab(double alpha, int n)
      : grid(DomainGrid::make(1.0, n)),
        eval(eigendecompose(build_operator(GeneratorSpec::fractional(alpha, 1.0), grid))),
        u0(InitialCondition::bump(1.0, 0.5).evaluate(grid)) {}
};

}  // namespace

TEST_CASE("xi=0 white oracle reduces to the squared semigroup") {
  Lab lab(1.5, 48);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const MomentCurve c = solve_volterra_white(lab.eval, lab.u0, 0.0, 1.0, 1.0 / 64.0, 1.0, times);
  for (size_t r = 0; r < times.size(); ++r) {
    const Eigen::VectorXd g = lab.eval.apply_semigroup(c.times[r], lab.u0);
    for (int i = 0; i < lab.grid.n; ++i)
      CHECK(c.values(static_cast<int>(r), i) == doctest::Approx(g[i] * g[i]).epsilon(1e-10));
  }
}

TEST_CASE("white oracle requires alpha > 1") {
  const DomainGrid g = DomainGrid::make(1.0, 32);
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(0.9, 1.0), g)));
  const Eigen::VectorXd u0 = InitialCondition::bump(1.0, 0.5).evaluate(g);
  CHECK_THROWS_AS(solve_volterra_white(eval, u0, 1.0, 1.0, 0.01, 1.0, {0.5}), ValidationError);
}

TEST_CASE("oracle second moments are pointwise nondecreasing in xi") {
  Lab lab(1.5, 48);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const MomentCurve c1 = solve_volterra_white(lab.eval, lab.u0, 1.0, 1.0, 1.0 / 64.0, 1.0, times);
  const MomentCurve c2 = solve_volterra_white(lab.eval, lab.u0, 2.0, 1.0, 1.0 / 64.0, 1.0, times);
  for (int r = 0; r < c1.values.rows(); ++r)
    for (int i = 0; i < c1.values.cols(); ++i)
      CHECK(c2.values(r, i) >= c1.values(r, i) * (1.0 - 1e-9));
}

TEST_CASE("white oracle agrees with Monte Carlo within 3 stderr at 95% of points") {
  Lab lab(1.5, 32);
  const std::vector<double> times{0.15, 0.3, 0.45, 0.6};
  const MomentCurve oracle =
      solve_volterra_white(lab.eval, lab.u0, 1.0, 1.0, 1.0 / 128.0, 0.6, times);

  SimulationConfig cfg;
  cfg.operator_spec = GeneratorSpec::fractional(1.5, 1.0);
  cfg.grid = lab.grid;
  cfg.noise = CorrelationModel::white();
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);
  cfg.xi = 1.0;
  cfg.dt = 1e-3;
  cfg.horizon = 0.6;
  cfg.paths = 6000;
  cfg.seed = 7;
  cfg.record_times = times;
  cfg.moment_orders = {2};
  cfg.threads = 2;
  const EnsembleSummary s = simulate_ensemble(cfg, lab.eval, white_noise_sampler(lab.grid, 7));

  int total = 0, agree = 0;
  for (size_t r = 0; r < times.size(); ++r)
    for (int i = 0; i < lab.grid.n; ++i) {
      const double se = s.moment_stderr(static_cast<int>(r), i, 2);
      if (se <= 0.0) continue;
      ++total;
      if (std::abs(s.moment(static_cast<int>(r), i, 2) -
                   oracle.values(static_cast<int>(r), i)) <= 3.0 * se)
        ++agree;
    }
  CHECK(static_cast<double>(agree) / total >= 0.95);
}

TEST_CASE("xi=0 colored oracle is the semigroup outer product") {
  Lab lab(1.5, 32);
  const NoiseIncrementSampler sampler =
      build_covariance(CorrelationModel::constant_floor(1.0), lab.grid, 1);
  const ColoredVolterraResult res = solve_volterra_colored(
      lab.eval, lab.u0, 0.0, 1.0, sampler.covariance(), 1.0 / 64.0, 0.5, {0.25, 0.5});
  for (size_t r = 0; r < res.diagonal.times.size(); ++r) {
    const Eigen::VectorXd g = lab.eval.apply_semigroup(res.diagonal.times[r], lab.u0);
    const Eigen::MatrixXd outer = g * g.transpose();
    CHECK((res.covariance[r] - outer).cwiseAbs().maxCoeff() <=
          1e-10 * outer.cwiseAbs().maxCoeff() + 1e-14);
  }
}

TEST_CASE("colored oracle covariances stay positive semidefinite") {
  Lab lab(1.5, 32);
  const NoiseIncrementSampler sampler =
      build_covariance(CorrelationModel::riesz(0.5), lab.grid, 1);
  const ColoredVolterraResult res = solve_volterra_colored(
      lab.eval, lab.u0, 1.5, 1.0, sampler.covariance(), 1.0 / 64.0, 1.0, {0.5, 1.0});
  for (const Eigen::MatrixXd& m : res.covariance) {
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * m.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * m.trace());
  }
}

TEST_CASE("colored oracle agrees with Monte Carlo under a constant floor") {
  Lab lab(1.5, 32);
  const NoiseIncrementSampler sampler =
      build_covariance(CorrelationModel::constant_floor(1.0), lab.grid, 21);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const ColoredVolterraResult oracle = solve_volterra_colored(
      lab.eval, lab.u0, 1.0, 1.0, sampler.covariance(), 1.0 / 64.0, 1.0, times);

  SimulationConfig cfg;
  cfg.operator_spec = GeneratorSpec::fractional(1.5, 1.0);
  cfg.grid = lab.grid;
  cfg.noise = CorrelationModel::constant_floor(1.0);
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);
  cfg.xi = 1.0;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.paths = 6000;
  cfg.seed = 21;
  cfg.record_times = times;
  cfg.moment_orders = {2};
  cfg.threads = 2;
  const EnsembleSummary s = simulate_ensemble(cfg, lab.eval, sampler);

  int total = 0, agree = 0;
  for (size_t r = 0; r < times.size(); ++r)
    for (int i = 0; i < lab.grid.n; ++i) {
      const double se = s.moment_stderr(static_cast<int>(r), i, 2);
      if (se <= 0.0) continue;
      ++total;
      if (std::abs(s.moment(static_cast<int>(r), i, 2) -
                   oracle.diagonal.values(static_cast<int>(r), i)) <= 3.0 * se)
        ++agree;
    }
  CHECK(static_cast<double>(agree) / total >= 0.95);
}

TEST_CASE("full covariance system is guarded at N=256") {
  const DomainGrid g = DomainGrid::make(1.0, 300);
  const HeatKernelEvaluator eval(
      eigendecompose(build_operator(GeneratorSpec::fractional(1.5, 1.0), g)));
  const Eigen::VectorXd u0 = InitialCondition::bump(1.0, 0.5).evaluate(g);
  const Eigen::MatrixXd c = Eigen::MatrixXd::Ones(g.n, g.n);
  CHECK_THROWS_AS(solve_volterra_colored(eval, u0, 1.0, 1.0, c, 0.01, 0.5, {0.5}),
                  ConfigurationError);
}

TEST_CASE("jensen floor: moments dominate the squared semigroup") {
  Lab lab(1.5, 48);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const MomentCurve c = solve_volterra_white(lab.eval, lab.u0, 1.0, 1.0, 1.0 / 64.0, 1.0, times);
  for (size_t r = 0; r < times.size(); ++r) {
    const Eigen::VectorXd g = lab.eval.apply_semigroup(c.times[r], lab.u0);
    for (int i = 0; i < lab.grid.n; ++i)
      CHECK(c.values(static_cast<int>(r), i) >= g[i] * g[i] * (1.0 - 1e-9));
  }
}

TEST_CASE("estimate_moments: energy identity and sandwich") {
  SimulationConfig cfg;
  cfg.operator_spec = GeneratorSpec::fractional(1.5, 1.0);
  cfg.grid = DomainGrid::make(1.0, 48);
  cfg.noise = CorrelationModel::white();
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);
  cfg.xi = 1.0;
  cfg.dt = 2e-3;
  cfg.horizon = 0.5;
  cfg.paths = 2000;
  cfg.seed = 5;
  cfg.record_times = {0.1, 0.3, 0.5};
  cfg.moment_orders = {2, 4};
  cfg.threads = 2;
  const EnsembleSummary s = simulate_ensemble(cfg);

  const MomentEstimate est = estimate_moments(s, 2, 0.2);
  CHECK(est.sandwich_ok);
  for (size_t r = 0; r < est.energy.times.size(); ++r) {
    // energy^2 = h * sum_i E|u|^2 by definition
    double e2 = 0.0;
    for (int i = 0; i < cfg.grid.n; ++i) e2 += est.curve.values(static_cast<int>(r), i);
    e2 *= cfg.grid.h;
    CHECK(est.energy.values[static_cast<int>(r)] * est.energy.values[static_cast<int>(r)] ==
          doctest::Approx(e2).epsilon(1e-12));
  }

  // p=4 curve dominates the squared p=2 curve on sample moments
  const MomentEstimate e4 = estimate_moments(s, 4, 0.2);
  for (int r = 0; r < e4.curve.values.rows(); ++r)
    for (int i = 0; i < e4.curve.values.cols(); ++i)
      CHECK(e4.curve.values(r, i) >=
            est.curve.values(r, i) * est.curve.values(r, i) * (1.0 - 1e-12));

  CHECK_THROWS_AS(estimate_moments(s, 6, 0.2), QueryError);
}

TEST_CASE("xi=0 energy curve matches the deterministic decay exactly") {
  SimulationConfig cfg;
  cfg.operator_spec = GeneratorSpec::fractional(1.5, 1.0);
  cfg.grid = DomainGrid::make(1.0, 48);
  cfg.noise = CorrelationModel::white();
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);
  cfg.xi = 0.0;
  cfg.dt = 2e-3;
  cfg.horizon = 0.5;
  cfg.paths = 3;
  cfg.seed = 5;
  cfg.record_times = {0.25, 0.5};
  cfg.moment_orders = {2};
  cfg.threads = 1;
  const HeatKernelEvaluator eval(eigendecompose(build_operator(cfg.operator_spec, cfg.grid)));
  const EnsembleSummary s = simulate_ensemble(cfg, eval, white_noise_sampler(cfg.grid, 5));
  const MomentEstimate est = estimate_moments(s, 2, 0.2);
  const Eigen::VectorXd u0 = cfg.u0.evaluate(cfg.grid);
  for (size_t r = 0; r < est.energy.times.size(); ++r) {
    const Eigen::VectorXd g = eval.apply_semigroup(est.energy.times[r], u0);
    CHECK(est.energy.values[static_cast<int>(r)] ==
          doctest::Approx(std::sqrt(cfg.grid.h * g.squaredNorm())).epsilon(1e-12));
  }
}
