#include <doctest.h>

#include <cmath>
#include <thread>

#include "stableheat/errors.hpp"
#include "stableheat/heat_kernel.hpp"
#include "stableheat/noise.hpp"
#include "stableheat/operators.hpp"

using namespace stableheat;

namespace {

HeatKernelEvaluator make_eval(double alpha, int n = 127) {
  const DomainGrid g = DomainGrid::make(1.0, n);
  return HeatKernelEvaluator(eigendecompose(build_operator(GeneratorSpec::fractional(alpha, 1.0), g)));
}

}  // namespace

TEST_CASE("kernel symmetry and positivity on the diagonal") {
  const HeatKernelEvaluator eval = make_eval(1.5);
  for (double t : {0.01, 0.3, 2.0}) {
    CHECK(eval.evaluate(t, 10, 40) == eval.evaluate(t, 40, 10));
    CHECK(eval.evaluate(t, 30, 30) >= 0.0);
  }
  CHECK_THROWS_AS(eval.evaluate(0.0, 0, 0), ValidationError);
  CHECK_THROWS_AS(eval.evaluate(-1.0, 0, 0), ValidationError);
}

TEST_CASE("classical kernel decays at pi^2/4") {
  const HeatKernelEvaluator eval = make_eval(2.0, 255);
  const int c = eval.grid().nearest_index(0.0);
  const double t = 5.0;
  const double rate = -std::log(eval.evaluate(t, c, c)) / t;
  CHECK(rate == doctest::Approx(M_PI * M_PI / 4.0).epsilon(0.02));
}

TEST_CASE("semigroup identity, positivity, composition") {
  const HeatKernelEvaluator eval = make_eval(1.5);
  const DomainGrid& g = eval.grid();
  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(g.n);
  for (int i = 0; i < g.n; ++i) u0[i] = std::max(0.0, 1.0 - std::abs(g.nodes[i]) * 2.0);

  CHECK((eval.apply_semigroup(0.0, u0) - u0).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd v = eval.apply_semigroup(0.7, u0);
  CHECK(v.minCoeff() >= -1e-10);
  const Eigen::VectorXd two_step = eval.apply_semigroup(0.4, eval.apply_semigroup(0.3, u0));
  CHECK((two_step - v).norm() <= 1e-9 * v.norm());

  Eigen::VectorXd bad = u0;
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(eval.apply_semigroup(0.1, bad), DataError);
}

TEST_CASE("sub-Markov mass stays below one and is nonincreasing") {
  const HeatKernelEvaluator eval = make_eval(1.5);
  const int c = eval.grid().nearest_index(0.0);
  double prev = 1.0 + 1e-8;
  for (double t : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0}) {
    double mass_max = 0.0;
    for (int i = 0; i < eval.grid().n; i += 9) mass_max = std::max(mass_max, eval.mass(t, i));
    CHECK(mass_max <= 1.0 + 1e-8);
    CHECK(eval.mass(t, c) <= prev + 1e-9);
    prev = eval.mass(t, c);
  }
}

TEST_CASE("discrete Chapman-Kolmogorov is a spectral identity") {
  const HeatKernelEvaluator eval = make_eval(1.2);
  for (double t : {0.05, 0.4}) {
    const auto p2 = eval.propagator(2.0 * t);
    const auto p1 = eval.propagator(t);
    const Eigen::MatrixXd composed = eval.grid().h * (*p1) * (*p1);
    CHECK(((*p2) - composed).norm() <= 1e-9 * p2->norm());
  }
}

TEST_CASE("propagator cache is shared and thread-safe") {
  const HeatKernelEvaluator eval = make_eval(1.5, 64);
  std::vector<std::thread> pool;
  std::vector<const Eigen::MatrixXd*> seen(8);
  for (int w = 0; w < 8; ++w)
    pool.emplace_back([&eval, &seen, w] { seen[static_cast<size_t>(w)] = eval.propagator(0.125).get(); });
  for (auto& th : pool) th.join();
  for (int w = 1; w < 8; ++w) CHECK(seen[static_cast<size_t>(w)] == seen[0]);
}

TEST_CASE("kernel bound report: classical rate and fractional band") {
  const HeatKernelEvaluator e2 = make_eval(2.0, 255);
  const KernelBoundReport r2 = verify_kernel_bounds(e2, 0.2);
  CHECK(r2.mu1_fit == doctest::Approx(M_PI * M_PI / 4.0).epsilon(0.02));
  CHECK(r2.mu1_fit == doctest::Approx(e2.mu1()).epsilon(0.02));
  CHECK(r2.t0 > 0.0);

  const HeatKernelEvaluator e15 = make_eval(1.5, 255);
  const KernelBoundReport r15 = verify_kernel_bounds(e15, 0.2);
  CHECK(r15.band_reached);
  CHECK(r15.c1_long > 0.0);
  CHECK(r15.c1_long <= r15.c2_long);
  CHECK(r15.mu1_fit == doctest::Approx(e15.mu1()).epsilon(0.02));

  // short-time on-diagonal power law within 10% of -1/alpha
  CHECK(r15.small_t_exponent == doctest::Approx(-1.0 / 1.5).epsilon(0.10));

  // boundary-adjacent lower constant degrades as eps -> 0
  const KernelBoundReport tight = verify_kernel_bounds(e15, 0.02);
  CHECK(tight.c1_long < r15.c1_long);

  CHECK_THROWS_AS(verify_kernel_bounds(e15, 0.0), ValidationError);
  CHECK_THROWS_AS(verify_kernel_bounds(e15, 1.5), ValidationError);
}

TEST_CASE("long-time rate uniform over interior pairs") {
  const HeatKernelEvaluator eval = make_eval(1.5, 127);
  const double mu1 = eval.mu1();
  const std::vector<int> interior = eval.grid().interior_indices(0.2);
  // slope of log p over [5,10]/mu1 per pair
  std::vector<double> ts;
  for (int q = 0; q < 8; ++q) ts.push_back((5.0 + 5.0 * q / 7.0) / mu1);
  for (size_t a = 0; a < interior.size(); a += 17)
    for (size_t b = a; b < interior.size(); b += 23) {
      double st = 0, sy = 0, sxx = 0, sxy = 0;
      for (double t : ts) {
        const double y = std::log(eval.evaluate(t, interior[a], interior[b]));
        st += t;
        sy += y;
      }
      const double tbar = st / ts.size(), ybar = sy / ts.size();
      for (double t : ts) {
        const double y = std::log(eval.evaluate(t, interior[a], interior[b]));
        sxx += (t - tbar) * (t - tbar);
        sxy += (t - tbar) * (y - ybar);
      }
      CHECK(-sxy / sxx == doctest::Approx(mu1).epsilon(0.02));
    }
}

TEST_CASE("lemma L21: finiteness, monotonicity in beta, tail ratio") {
  const HeatKernelEvaluator eval = make_eval(1.5, 127);
  const double mu1 = eval.mu1();
  const int c = eval.grid().nearest_index(0.0);
  const KernelBoundReport bounds = verify_kernel_bounds(eval, 0.2);

  const LemmaReport half = lemma_integral(eval, LemmaId::L21, 0.5 * mu1, {c}, nullptr, bounds.t0);
  CHECK(half.verdict == "finite");
  CHECK(half.value > 0.0);

  const LemmaReport nine = lemma_integral(eval, LemmaId::L21, 0.9 * mu1, {c}, nullptr, bounds.t0);
  CHECK(nine.value > half.value);  // integrand monotone in beta

  const LemmaReport edge = lemma_integral(eval, LemmaId::L21, 0.99 * mu1, {c}, nullptr, bounds.t0);
  CHECK(edge.tail_value / half.tail_value >= 10.0);  // tail ~ 1/(mu1 - beta)

  const LemmaReport bad = lemma_integral(eval, LemmaId::L21, 1.5 * mu1, {c});
  CHECK(bad.verdict == "hypothesis-violated");

  // alpha <= 1 rejected: the t^{-1/alpha} singularity is not integrable
  const DomainGrid g = DomainGrid::make(1.0, 64);
  const HeatKernelEvaluator e08(
      eigendecompose(build_operator(GeneratorSpec::fractional(0.8, 1.0), g)));
  CHECK_THROWS_AS(lemma_integral(e08, LemmaId::L21, 0.1, {32}), ConfigurationError);
}

TEST_CASE("lemma L22 supremum is bounded below mu1") {
  const HeatKernelEvaluator eval = make_eval(1.5, 127);
  const double mu1 = eval.mu1();
  const int c = eval.grid().nearest_index(0.0);
  const LemmaReport rep = lemma_integral(eval, LemmaId::L22, 0.5 * mu1, {c});
  CHECK(rep.verdict == "finite");
  CHECK(rep.value >= 1.0);  // t -> 0 limit of the mass
  CHECK(rep.value < 20.0);
  const LemmaReport bad = lemma_integral(eval, LemmaId::L22, 1.5 * mu1, {c});
  CHECK(bad.verdict == "hypothesis-violated");
}

TEST_CASE("lemma L23 needs colored noise and beta < 2 mu1") {
  const HeatKernelEvaluator eval = make_eval(1.5, 64);
  const double mu1 = eval.mu1();
  const DomainGrid& g = eval.grid();
  const int a = g.nearest_index(-0.3), b = g.nearest_index(0.3);
  const CorrelationModel riesz = CorrelationModel::riesz(0.5);

  const LemmaReport rep = lemma_integral(eval, LemmaId::L23, 1.5 * mu1, {a, b}, &riesz);
  CHECK(rep.verdict == "finite");
  CHECK(rep.value > 0.0);

  const LemmaReport bad = lemma_integral(eval, LemmaId::L23, 2.5 * mu1, {a, b}, &riesz);
  CHECK(bad.verdict == "hypothesis-violated");

  const CorrelationModel white = CorrelationModel::white();
  CHECK_THROWS_AS(lemma_integral(eval, LemmaId::L23, mu1, {a, b}, &white), ValidationError);
  CHECK_THROWS_AS(lemma_integral(eval, LemmaId::L23, mu1, {a, b}, nullptr), ValidationError);
}

TEST_CASE("lemma L24 dominates its closed-form lower bound") {
  const HeatKernelEvaluator eval = make_eval(1.5, 127);
  const DomainGrid& g = eval.grid();
  const KernelBoundReport bounds = verify_kernel_bounds(eval, 0.2);
  const int a = g.nearest_index(-0.3), b = g.nearest_index(0.3);
  const double beta = 1.0;

  const LemmaReport rep = lemma_integral(eval, LemmaId::L24, beta, {a, a, b, b});
  CHECK(rep.verdict == "finite");
  const double mu = bounds.mu1_fit;
  const double lower = bounds.c1_long * bounds.c1_long *
                       std::exp(-(beta + 2.0 * mu) * bounds.t0) / (beta + 2.0 * mu);
  CHECK(rep.value >= lower);

  const LemmaReport bad = lemma_integral(eval, LemmaId::L24, -1.0, {a, a, b, b});
  CHECK(bad.verdict == "hypothesis-violated");
}
