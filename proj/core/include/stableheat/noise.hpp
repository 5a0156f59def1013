#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "stableheat/grid.hpp"

namespace stableheat {

/// Spatial correlation f(x, y) of the driving noise, white in time.
///   White          delta correlation (no pointwise f)
///   Riesz          f(x,y) = |x-y|^{-gamma}, 0 < gamma < 1
///   Cauchy         f(x,y) = 1 / (1 + ((x-y)/theta)^2)
///   ConstantFloor  f(x,y) = K
/// Riesz on-diagonal values are cell averages of |.|^{-gamma} over one grid
/// cell, which keeps the covariance finite and grid-consistent.
struct CorrelationModel {
  enum class Kind { White, Riesz, Cauchy, ConstantFloor };

  Kind kind = Kind::White;
  double gamma = 0.5;  // Riesz exponent
  double theta = 1.0;  // Cauchy scale
  double floor_k = 1.0;

  static CorrelationModel white();
  static CorrelationModel riesz(double gamma);
  static CorrelationModel cauchy(double theta);
  static CorrelationModel constant_floor(double k);

  void validate() const;
  bool is_white() const { return kind == Kind::White; }

  /// Pointwise f(x, y); throws for White. Coincident points use the
  /// cell-averaged value for Riesz.
  double evaluate(double x, double y, double cell_h) const;

  /// Dominating kernel f-tilde(r), r = |x - y| > 0.
  double dominating(double r) const;

  std::string kind_name() const;
  std::string label() const;
};

struct DalangResult {
  bool pass = false;
  std::optional<double> margin;  // absent where the condition holds with room to spare
  std::string criterion;
};

/// Analytic Dalang-condition verdict in d = 1: White passes iff alpha > 1,
/// Riesz(gamma) iff gamma < alpha, Cauchy and ConstantFloor always.
DalangResult dalang_check(const CorrelationModel& model, double alpha);

/// Reproducible Gaussian increment source. Increments are pure functions of
/// (seed, path, step): safe for concurrent use and bit-identical for any
/// evaluation order or worker count.
///   White increment:   iid per node, variance dt / h
///   Colored increment: covariance dt * C with C_{ij} = f(x_i, x_j)
class NoiseIncrementSampler {
 public:
  const CorrelationModel& model() const { return model_; }
  const DomainGrid& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }

  /// Measured grid floor K_R = min_{ij} C_{ij}; absent for White.
  std::optional<double> measured_floor() const { return measured_floor_; }

  /// Diagonal jitter added to make the Cholesky succeed (0 when none needed).
  double jitter_used() const { return jitter_; }

  /// Set when the measured floor is <= 0 for a kind that must satisfy the
  /// noise floor assumption.
  bool floor_warning() const { return floor_warning_; }

  const Eigen::MatrixXd& covariance() const { return covariance_; }

  Eigen::VectorXd sample_increment(double dt, std::uint64_t path_id, std::uint64_t step_id) const;

 private:
  friend NoiseIncrementSampler build_covariance(const CorrelationModel&, const DomainGrid&,
                                                std::uint64_t);
  friend NoiseIncrementSampler white_noise_sampler(const DomainGrid&, std::uint64_t);

  CorrelationModel model_;
  DomainGrid grid_;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd covariance_;  // empty for White
  Eigen::MatrixXd factor_;      // lower-triangular L with L L^T = C + jitter I
  std::optional<double> measured_floor_;
  double jitter_ = 0.0;
  bool floor_warning_ = false;
};

/// Assembles C, measures the floor, and factorizes with escalating diagonal
/// jitter (multiples of 1e-12 * trace / N). Throws for White (delta
/// correlation has no covariance matrix; use white_noise_sampler).
NoiseIncrementSampler build_covariance(const CorrelationModel& model, const DomainGrid& grid,
                                       std::uint64_t seed);

NoiseIncrementSampler white_noise_sampler(const DomainGrid& grid, std::uint64_t seed);

}  // namespace stableheat
