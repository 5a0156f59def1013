#include "stableheat/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stableheat/errors.hpp"

namespace stableheat {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

GeneratorSpec GeneratorSpec::fractional(double alpha, double nu) {
  GeneratorSpec s;
  s.kind = Kind::Fractional;
  s.alpha = alpha;
  s.nu = nu;
  s.validate();
  return s;
}

GeneratorSpec GeneratorSpec::fractional_with_drift(double alpha, double nu, double drift) {
  GeneratorSpec s;
  s.kind = Kind::FractionalWithDrift;
  s.alpha = alpha;
  s.nu = nu;
  s.drift = drift;
  s.validate();
  return s;
}

GeneratorSpec GeneratorSpec::double_fractional(double alpha, double nu, double beta_exp, double a) {
  GeneratorSpec s;
  s.kind = Kind::DoubleFractional;
  s.alpha = alpha;
  s.nu = nu;
  s.beta_exp = beta_exp;
  s.a = a;
  s.validate();
  return s;
}

GeneratorSpec GeneratorSpec::relativistic_surrogate(double alpha, double mass) {
  GeneratorSpec s;
  s.kind = Kind::RelativisticSurrogate;
  s.alpha = alpha;
  s.mass = mass;
  s.validate();
  return s;
}

void GeneratorSpec::validate() const {
  switch (kind) {
    case Kind::Fractional:
    case Kind::FractionalWithDrift:
      if (!(alpha > 0.0 && alpha <= 2.0))
        throw ValidationError("fractional variant requires 0 < alpha <= 2, got alpha=" + fmt(alpha));
      if (!(nu > 0.0)) throw ValidationError("fractional variant requires nu > 0, got nu=" + fmt(nu));
      break;
    case Kind::DoubleFractional:
      if (!(alpha > 1.0 && alpha < 2.0))
        throw ValidationError("double-fractional requires 1 < alpha < 2, got alpha=" + fmt(alpha));
      if (!(beta_exp > 1.0 && beta_exp < alpha))
        throw ValidationError("double-fractional requires 1 < beta < alpha, got beta=" + fmt(beta_exp) +
                              ", alpha=" + fmt(alpha));
      if (!(nu > 0.0)) throw ValidationError("double-fractional requires nu > 0, got nu=" + fmt(nu));
      if (!(a > 0.0)) throw ValidationError("double-fractional requires a > 0, got a=" + fmt(a));
      break;
    case Kind::RelativisticSurrogate:
      if (!(alpha > 0.0 && alpha < 2.0))
        throw ValidationError("relativistic surrogate requires 0 < alpha < 2, got alpha=" + fmt(alpha));
      if (!(mass > 0.0))
        throw ValidationError("relativistic surrogate requires m > 0, got m=" + fmt(mass));
      break;
  }
}

std::string GeneratorSpec::kind_name() const {
  switch (kind) {
    case Kind::Fractional: return "fractional";
    case Kind::FractionalWithDrift: return "fractional_drift";
    case Kind::DoubleFractional: return "double_fractional";
    case Kind::RelativisticSurrogate: return "relativistic_surrogate";
  }
  return "?";
}

std::string GeneratorSpec::label() const {
  std::ostringstream os;
  os << kind_name() << "(alpha=" << alpha;
  switch (kind) {
    case Kind::Fractional: os << ", nu=" << nu; break;
    case Kind::FractionalWithDrift: os << ", nu=" << nu << ", lambda=" << drift; break;
    case Kind::DoubleFractional: os << ", nu=" << nu << ", beta=" << beta_exp << ", a=" << a; break;
    case Kind::RelativisticSurrogate: os << ", m=" << mass; break;
  }
  os << ")";
  return os.str();
}

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

double fractional_constant_1d(double alpha) {
  return std::pow(2.0, alpha - 1.0) * alpha * std::tgamma((1.0 + alpha) / 2.0) /
         (std::sqrt(M_PI) * std::tgamma(1.0 - alpha / 2.0));
}

namespace {

// Classical 3-point Dirichlet Laplacian of -nu*Delta on the interior grid.
Eigen::MatrixXd classical_laplacian(const DomainGrid& grid, double nu) {
  const int n = grid.n;
  const double c = nu / (grid.h * grid.h);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 2.0 * c;
    if (i > 0) m(i, i - 1) = -c;
    if (i + 1 < n) m(i, i + 1) = -c;
  }
  return m;
}

// Quadrature of the hypersingular integral with zero exterior extension.
// Jump cells C_k = ((k-1/2)h, (k+1/2)h) carry exact integrals of s^{-1-alpha};
// the singular cell (0, h/2) uses the symmetric second difference, which
// cancels the singularity; the infinite tail has a closed form and lands on
// the diagonal (killing term).
Eigen::MatrixXd fractional_matrix(const DomainGrid& grid, double alpha, double nu) {
  const int n = grid.n;
  const double h = grid.h;
  if (alpha == 2.0) return classical_laplacian(grid, nu);

  const double c = fractional_constant_1d(alpha);
  std::vector<double> w(static_cast<size_t>(n), 0.0);  // w[k] for lag k >= 1
  for (int k = 1; k < n; ++k) {
    const double lo = (static_cast<double>(k) - 0.5) * h;
    const double hi = (static_cast<double>(k) + 0.5) * h;
    w[static_cast<size_t>(k)] = c / alpha * (std::pow(lo, -alpha) - std::pow(hi, -alpha));
  }
  const double w_all = c / alpha * std::pow(h / 2.0, -alpha);  // sum over all k >= 1 plus tail
  const double w_sing = c * std::pow(2.0, alpha - 2.0) * std::pow(h, -alpha) / (2.0 - alpha);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const double diag = nu * 2.0 * (w_sing + w_all);
  for (int i = 0; i < n; ++i) {
    m(i, i) = diag;
    for (int k = 1; k < n - i; ++k)
      m(i, i + k) = -nu * (w[static_cast<size_t>(k)] + (k == 1 ? w_sing : 0.0));
  }
  return m.selfadjointView<Eigen::Upper>();
}

Eigen::MatrixXd relativistic_matrix(const DomainGrid& grid, double alpha, double mass) {
  // g(lambda) = (m^{2/alpha} + lambda)^{alpha/2} - m applied to the spectrum
  // of the classical Dirichlet Laplacian.
  const Eigen::MatrixXd base = classical_laplacian(grid, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigensolver failed on the classical Laplacian (relativistic surrogate)");
  const double m2a = std::pow(mass, 2.0 / alpha);
  Eigen::VectorXd g = es.eigenvalues();
  for (int k = 0; k < g.size(); ++k) g[k] = std::pow(m2a + g[k], alpha / 2.0) - mass;
  return es.eigenvectors() * g.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

DiscreteOperator build_operator(const GeneratorSpec& spec, const DomainGrid& grid) {
  spec.validate();
  if (grid.n < 8)
    throw ConfigurationError("quadrature stencil needs N >= 8 interior nodes, got N=" +
                             std::to_string(grid.n));

  DiscreteOperator op;
  op.spec = spec;
  op.grid = grid;
  switch (spec.kind) {
    case GeneratorSpec::Kind::Fractional:
      op.matrix = fractional_matrix(grid, spec.alpha, spec.nu);
      break;
    case GeneratorSpec::Kind::FractionalWithDrift:
      op.matrix = fractional_matrix(grid, spec.alpha, spec.nu);
      op.matrix.diagonal().array() -= spec.drift;
      break;
    case GeneratorSpec::Kind::DoubleFractional:
      op.matrix = fractional_matrix(grid, spec.alpha, spec.nu) +
                  fractional_matrix(grid, spec.beta_exp, std::pow(spec.a, spec.beta_exp));
      break;
    case GeneratorSpec::Kind::RelativisticSurrogate:
      op.matrix = relativistic_matrix(grid, spec.alpha, spec.mass);
      break;
  }
  return op;
}

namespace {

// Ascending eigenpairs, h-orthonormal columns, first nonzero component positive.
void solve_spectrum(const Eigen::MatrixXd& m, double h, Eigen::VectorXd& values,
                    Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    const double diag_min = m.diagonal().minCoeff();
    const double diag_max = m.diagonal().maxCoeff();
    throw NumericalError("symmetric eigensolver did not converge (n=" + std::to_string(m.rows()) +
                         ", diag range [" + fmt(diag_min) + ", " + fmt(diag_max) + "])");
  }
  values = es.eigenvalues();
  vectors = es.eigenvectors() / std::sqrt(h);
  for (int k = 0; k < vectors.cols(); ++k) {
    const double scale = vectors.col(k).cwiseAbs().maxCoeff();
    for (int i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, k)) > 1e-14 * scale) {
        if (vectors(i, k) < 0.0) vectors.col(k) = -vectors.col(k);
        break;
      }
    }
  }
}

}  // namespace

SpectralDecomposition eigendecompose(const DiscreteOperator& op) {
  SpectralDecomposition sd;
  sd.spec = op.spec;
  sd.grid = op.grid;
  solve_spectrum(op.matrix, op.grid.h, sd.eigenvalues, sd.eigenvectors);
  sd.mu1 = sd.eigenvalues[0];

  const bool classical_rate = op.spec.kind == GeneratorSpec::Kind::RelativisticSurrogate ||
                              ((op.spec.kind == GeneratorSpec::Kind::Fractional ||
                                op.spec.kind == GeneratorSpec::Kind::FractionalWithDrift) &&
                               op.spec.alpha == 2.0);
  sd.richardson_order = classical_rate ? 2 : 1;

  // Nested coarse grid (every other node) for the convergence estimate.
  const int nc = (op.grid.n - 1) / 2;
  if (op.grid.n % 2 == 1 && nc >= 8) {
    const DomainGrid coarse = DomainGrid::make(op.grid.radius, nc);
    const DiscreteOperator cop = build_operator(op.spec, coarse);
    Eigen::VectorXd cvals;
    Eigen::MatrixXd cvecs;
    solve_spectrum(cop.matrix, coarse.h, cvals, cvecs);
    sd.mu1_coarse = cvals[0];
    const double denom = std::pow(2.0, sd.richardson_order) - 1.0;
    sd.mu1_extrapolated = sd.mu1 + (sd.mu1 - sd.mu1_coarse) / denom;
  } else {
    sd.mu1_coarse = sd.mu1;
    sd.mu1_extrapolated = sd.mu1;
  }
  return sd;
}

ValidationReport validate_operator(const DiscreteOperator& op) {
  ValidationReport rep;
  const Eigen::MatrixXd& m = op.matrix;
  const int n = static_cast<int>(m.rows());

  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = m.cwiseAbs().maxCoeff();
  rep.checks.push_back({"symmetry", asym <= 1e-12 * scale, asym / scale, 1e-12, ""});

  const bool fractional_family = op.spec.kind == GeneratorSpec::Kind::Fractional;
  if (fractional_family) {
    double max_offdiag = 0.0;
    double min_diag = m.diagonal().minCoeff();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) max_offdiag = std::max(max_offdiag, m(i, j));
    rep.checks.push_back({"offdiagonal_nonpositive", max_offdiag <= 0.0, max_offdiag, 0.0, ""});
    rep.checks.push_back({"diagonal_positive", min_diag > 0.0, min_diag, 0.0, ""});
  }

  const bool driftless = op.spec.kind != GeneratorSpec::Kind::FractionalWithDrift;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  const bool pd = llt.info() == Eigen::Success;
  CheckResult pdc{"positive_definite", pd, pd ? 1.0 : 0.0, 0.0, ""};
  if (!pd && !driftless) pdc.note = "supercritical drift";
  if (driftless && !pd) pdc.note = "driftless operator must be positive definite";
  rep.checks.push_back(pdc);
  return rep;
}

}  // namespace stableheat
