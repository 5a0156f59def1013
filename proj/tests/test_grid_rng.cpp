#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "stableheat/errors.hpp"
#include "stableheat/grid.hpp"
#include "stableheat/parallel.hpp"
#include "stableheat/rng.hpp"

using namespace stableheat;

TEST_CASE("grid geometry") {
  const DomainGrid g = DomainGrid::make(1.0, 255);
  CHECK(g.h == doctest::Approx(2.0 / 256.0).epsilon(1e-15));
  CHECK(g.h * (g.n + 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.nodes[0] > -1.0);
  CHECK(g.nodes[g.n - 1] < 1.0);
  // symmetric about the origin
  for (int i = 0; i < g.n; ++i)
    CHECK(g.nodes[i] == doctest::Approx(-g.nodes[g.n - 1 - i]).epsilon(1e-13));

  CHECK_THROWS_AS(DomainGrid::make(1.0, 4), ValidationError);
  CHECK_THROWS_AS(DomainGrid::make(-1.0, 64), ValidationError);
}

TEST_CASE("interior measure never exceeds the sub-ball") {
  const DomainGrid g = DomainGrid::make(1.0, 127);
  const double m = g.interior_measure(0.2);
  CHECK(m <= 2.0 * (1.0 - 0.2) + 1e-12);
  CHECK(m > 2.0 * (1.0 - 0.2) - 3.0 * g.h);
}

TEST_CASE("gaussian stream is a pure function of (seed, path, step)") {
  Eigen::VectorXd a(9), b(9);
  GaussianStream(42, 7, 11).fill_normals(a);
  GaussianStream(42, 7, 11).fill_normals(b);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  GaussianStream(42, 7, 12).fill_normals(b);
  CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
  GaussianStream(43, 7, 11).fill_normals(b);
  CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gaussian stream moments") {
  const int m = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < m; i += 2) {
    double z0, z1;
    GaussianStream(123, static_cast<std::uint64_t>(i), 0).normal_pair(0, z0, z1);
    sum += z0 + z1;
    sum2 += z0 * z0 + z1 * z1;
    sum4 += z0 * z0 * z0 * z0 + z1 * z1 * z1 * z1;
  }
  CHECK(std::abs(sum / m) < 4.0 / std::sqrt(static_cast<double>(m)));
  CHECK(sum2 / m == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sum4 / m == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("parallel_for covers every job exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, 4, [&](int i) { hits[static_cast<size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("kahan merge is order-deterministic") {
  // Sum the same numbers as one stream and as merged chunks.
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(std::sin(i) * std::pow(10.0, i % 7));
  KahanSum whole;
  for (double x : xs) whole.add(x);

  KahanSum c1, c2, merged;
  for (size_t i = 0; i < 500; ++i) c1.add(xs[i]);
  for (size_t i = 500; i < xs.size(); ++i) c2.add(xs[i]);
  merged.merge(c1);
  merged.merge(c2);
  CHECK(merged.value() == doctest::Approx(whole.value()).epsilon(1e-14));
}
