#include <doctest.h>

#include <cmath>

#include "stableheat/errors.hpp"
#include "stableheat/noise.hpp"

using namespace stableheat;

TEST_CASE("dalang verdicts in d=1") {
  const DalangResult a = dalang_check(CorrelationModel::riesz(0.5), 1.5);
  CHECK(a.pass);
  CHECK(*a.margin == doctest::Approx(1.0));

  CHECK_FALSE(dalang_check(CorrelationModel::riesz(0.5), 0.4).pass);

  const DalangResult w = dalang_check(CorrelationModel::white(), 2.0);
  CHECK(w.pass);
  CHECK(*w.margin == doctest::Approx(1.0));
  CHECK_FALSE(dalang_check(CorrelationModel::white(), 0.9).pass);

  CHECK(dalang_check(CorrelationModel::cauchy(1.0), 0.3).pass);
  CHECK(dalang_check(CorrelationModel::constant_floor(1.0), 0.3).pass);
}

TEST_CASE("model parameter validation") {
  CHECK_THROWS_AS(CorrelationModel::riesz(1.2), ValidationError);
  CHECK_THROWS_AS(CorrelationModel::riesz(0.0), ValidationError);
  CHECK_THROWS_AS(CorrelationModel::cauchy(-1.0), ValidationError);
  CHECK_THROWS_AS(CorrelationModel::constant_floor(0.0), ValidationError);
}

TEST_CASE("correlation symmetry and diagonal dominance") {
  const DomainGrid g = DomainGrid::make(1.0, 64);
  for (const CorrelationModel& m :
       {CorrelationModel::riesz(0.5), CorrelationModel::cauchy(0.7),
        CorrelationModel::constant_floor(2.0)}) {
    for (int i = 0; i < g.n; i += 7)
      for (int j = 0; j < g.n; j += 11) {
        const double fij = m.evaluate(g.nodes[i], g.nodes[j], g.h);
        CHECK(fij == m.evaluate(g.nodes[j], g.nodes[i], g.h));
        CHECK(m.evaluate(g.nodes[i], g.nodes[i], g.h) >= fij);
      }
  }
}

TEST_CASE("constant floor covariance is the rank-1 all-ones matrix") {
  const DomainGrid g = DomainGrid::make(1.0, 32);
  const NoiseIncrementSampler s = build_covariance(CorrelationModel::constant_floor(2.0), g, 1);
  CHECK((s.covariance().array() - 2.0).abs().maxCoeff() == 0.0);
  CHECK(*s.measured_floor() == 2.0);
  CHECK(s.jitter_used() > 0.0);  // rank-1 needs the jitter path

  // every increment vector is constant across nodes
  const Eigen::VectorXd inc = s.sample_increment(0.01, 3, 5);
  CHECK((inc.array() - inc[0]).abs().maxCoeff() <= 1e-12 * std::abs(inc[0]));
}

TEST_CASE("riesz floor sits at the extreme corner pair") {
  const DomainGrid g = DomainGrid::make(1.0, 255);
  const NoiseIncrementSampler s = build_covariance(CorrelationModel::riesz(0.5), g, 1);
  const double span = g.nodes[g.n - 1] - g.nodes[0];
  CHECK(*s.measured_floor() == doctest::Approx(std::pow(span, -0.5)).epsilon(1e-12));
  CHECK(*s.measured_floor() == doctest::Approx(std::pow(2.0, -0.5)).epsilon(0.01));
  CHECK_FALSE(s.floor_warning());
}

TEST_CASE("build_covariance is undefined for white noise") {
  const DomainGrid g = DomainGrid::make(1.0, 32);
  CHECK_THROWS_AS(build_covariance(CorrelationModel::white(), g, 1), ValidationError);
  const NoiseIncrementSampler s = white_noise_sampler(g, 1);
  CHECK_FALSE(s.measured_floor().has_value());
}

TEST_CASE("increments are pure functions of (seed, path, step)") {
  const DomainGrid g = DomainGrid::make(1.0, 48);
  const NoiseIncrementSampler s = build_covariance(CorrelationModel::riesz(0.5), g, 99);
  const Eigen::VectorXd a = s.sample_increment(0.01, 5, 7);
  const Eigen::VectorXd b = s.sample_increment(0.01, 5, 7);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - s.sample_increment(0.01, 5, 8)).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a - s.sample_increment(0.01, 6, 7)).cwiseAbs().maxCoeff() > 0.0);

  const NoiseIncrementSampler s2 = build_covariance(CorrelationModel::riesz(0.5), g, 100);
  CHECK((a - s2.sample_increment(0.01, 5, 7)).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(s.sample_increment(0.0, 0, 0), ValidationError);
}

TEST_CASE("white increment variance is dt/h") {
  const DomainGrid g = DomainGrid::make(1.0, 16);
  const NoiseIncrementSampler s = white_noise_sampler(g, 7);
  const double dt = 0.01;
  const int m = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int p = 0; p < m; ++p) {
    const double v = s.sample_increment(dt, static_cast<std::uint64_t>(p), 0)[5];
    sum += v;
    sum2 += v * v;
  }
  const double var = sum2 / m - (sum / m) * (sum / m);
  CHECK(var == doctest::Approx(dt / g.h).epsilon(0.03));
}

TEST_CASE("riesz sample covariance matches dt*C") {
  const DomainGrid g = DomainGrid::make(1.0, 16);
  const NoiseIncrementSampler s = build_covariance(CorrelationModel::riesz(0.5), g, 11);
  const double dt = 0.01;
  const int m = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.n, g.n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(g.n);
  for (int p = 0; p < m; ++p) {
    const Eigen::VectorXd z = s.sample_increment(dt, static_cast<std::uint64_t>(p), 3);
    acc.noalias() += z * z.transpose();
    mean += z;
  }
  acc /= static_cast<double>(m);
  mean /= static_cast<double>(m);
  const Eigen::MatrixXd target = dt * s.covariance();
  CHECK((acc - target).norm() / target.norm() <= 0.05);

  // zero empirical mean within 4 standard errors
  for (int i = 0; i < g.n; ++i) {
    const double se = std::sqrt(target(i, i) / static_cast<double>(m));
    CHECK(std::abs(mean[i]) <= 4.0 * se);
  }
}
