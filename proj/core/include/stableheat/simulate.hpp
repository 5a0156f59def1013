#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableheat/heat_kernel.hpp"
#include "stableheat/noise.hpp"
#include "stableheat/operators.hpp"
#include "stableheat/sigma.hpp"

namespace stableheat {

/// Nonnegative bounded initial data with strictly positive mass.
struct InitialCondition {
  enum class Kind { Constant, Bump, Indicator };

  Kind kind = Kind::Bump;
  double amplitude = 1.0;
  double width = 0.5;  // bump support half-width
  double a = -0.5, b = 0.5;  // indicator interval

  static InitialCondition constant(double amplitude);
  static InitialCondition bump(double amplitude, double width);
  static InitialCondition indicator(double amplitude, double a, double b);

  Eigen::VectorXd evaluate(const DomainGrid& grid) const;
  std::string kind_name() const;
  std::string label() const;
};

struct SimulationConfig {
  GeneratorSpec operator_spec;
  DomainGrid grid;
  CorrelationModel noise;
  SigmaFunction sigma;
  InitialCondition u0;
  double xi = 1.0;
  double dt = 1e-3;
  double horizon = 1.0;
  int paths = 1000;
  std::uint64_t seed = 0;
  std::vector<double> record_times;  // snapped to step multiples
  std::vector<int> moment_orders;    // p >= 2; orders 2 and 4 are always kept
  int threads = 0;                   // 0 = hardware concurrency

  /// Re-checks module invariants; needs mu1 for the dt accuracy guard
  /// dt <= 0.1 / mu1.
  void validate(double mu1) const;
};

/// Streaming Monte Carlo moments with compensated summation. Paths are
/// reduced in fixed 64-path chunks, so results are bit-identical for any
/// worker count. A path that overflows is counted as diverged from that step
/// on; its contributions to earlier record times remain valid.
struct EnsembleSummary {
  std::vector<double> record_times;
  std::vector<int> moment_orders;  // sorted, includes 2 and 4
  DomainGrid grid;
  double xi = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int paths_total = 0;

  // Indexed [record][node]; per-order matrices align with moment_orders.
  Eigen::MatrixXd sum_u;
  std::vector<Eigen::MatrixXd> sum_pow;   // sum |u|^p
  std::vector<Eigen::MatrixXd> sum_pow2;  // sum |u|^{2p} (for standard errors)
  std::vector<int> m_effective;           // usable paths per record time
  std::vector<double> negative_mass;      // mean ratio |u_-| / |u| per record time
  int diverged_paths = 0;
  std::string status;  // ok | warning | unusable

  int order_slot(int p) const;  // throws QueryError when p was not recorded
  double mean(int r, int i) const;
  double moment(int r, int i, int p) const;
  double moment_stderr(int r, int i, int p) const;
};

/// One exponential-Euler step of the mild formulation:
///   u' = h P(dt) u + xi h Pn (sigma(u) .* dF)
/// sigma is evaluated at the left endpoint (Ito/Walsh convention). For white
/// noise Pn is the variance-exact noise smoother (noise_propagator); for
/// colored noise the kernel is bounded in time and Pn = P(dt).
Eigen::VectorXd mild_euler_step(const Eigen::VectorXd& u, double xi, const SigmaFunction& sigma,
                                const Eigen::MatrixXd& propagator,
                                const Eigen::MatrixXd& noise_propagator, double h,
                                const Eigen::VectorXd& dF);

EnsembleSummary simulate_ensemble(const SimulationConfig& cfg, const HeatKernelEvaluator& eval,
                                  const NoiseIncrementSampler& sampler);

/// Convenience overload: builds operator, spectrum and sampler from cfg.
EnsembleSummary simulate_ensemble(const SimulationConfig& cfg);

}  // namespace stableheat
