#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableheat/grid.hpp"

namespace stableheat {

/// Nonlocal generator L with zero exterior condition on (-R, R).
/// Variants:
///   Fractional            L = -nu (-Delta)^{alpha/2}
///   FractionalWithDrift   L = -nu (-Delta)^{alpha/2} + drift * Id
///   DoubleFractional      L = -nu (-Delta)^{alpha/2} - a^beta (-Delta)^{beta/2}
///   RelativisticSurrogate L = mass * Id - (mass^{2/alpha} - Delta)^{alpha/2},
///                         realized as a spectral function of the classical
///                         Dirichlet Laplacian (surrogate, not the killed
///                         relativistic kernel; labeled as such in reports).
struct GeneratorSpec {
  enum class Kind { Fractional, FractionalWithDrift, DoubleFractional, RelativisticSurrogate };

  Kind kind = Kind::Fractional;
  double alpha = 1.5;
  double nu = 1.0;        // diffusivity (fractional family)
  double drift = 0.0;     // drift rate lambda (FractionalWithDrift)
  double beta_exp = 0.0;  // second stability index (DoubleFractional)
  double a = 0.0;         // second coefficient; term carries a^beta_exp
  double mass = 0.0;      // relativistic mass parameter

  static GeneratorSpec fractional(double alpha, double nu);
  static GeneratorSpec fractional_with_drift(double alpha, double nu, double drift);
  static GeneratorSpec double_fractional(double alpha, double nu, double beta_exp, double a);
  static GeneratorSpec relativistic_surrogate(double alpha, double mass);

  /// Throws ValidationError naming the violated bound.
  void validate() const;

  std::string kind_name() const;
  std::string label() const;
};

/// Dense symmetric matrix of -L restricted to interior nodes (zero exterior
/// extension). For the driftless fractional variant all off-diagonal entries
/// are <= 0 and the diagonal is > 0.
struct DiscreteOperator {
  Eigen::MatrixXd matrix;
  GeneratorSpec spec;
  DomainGrid grid;
};

/// Eigenpairs of -L, ascending. Eigenvectors are orthonormal under the grid
/// inner product <f,g> = h sum_i f_i g_i and sign-fixed (first nonzero
/// component positive). mu1 is the principal eigenvalue; the extrapolated
/// value comes from a nested coarse grid (Richardson, assumed order
/// `richardson_order`) and is a convergence diagnostic only.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // columns, h-orthonormal
  double mu1 = 0.0;
  double mu1_coarse = 0.0;
  double mu1_extrapolated = 0.0;
  int richardson_order = 1;
  GeneratorSpec spec;
  DomainGrid grid;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Normalization constant of the 1-d fractional Laplacian
/// c_{1,alpha} = 2^{alpha-1} alpha Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1-alpha/2)).
double fractional_constant_1d(double alpha);

DiscreteOperator build_operator(const GeneratorSpec& spec, const DomainGrid& grid);

SpectralDecomposition eigendecompose(const DiscreteOperator& op);

ValidationReport validate_operator(const DiscreteOperator& op);

}  // namespace stableheat
