#include "stableheat/noise.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "stableheat/errors.hpp"
#include "stableheat/rng.hpp"

namespace stableheat {

CorrelationModel CorrelationModel::white() {
  CorrelationModel m;
  m.kind = Kind::White;
  return m;
}

CorrelationModel CorrelationModel::riesz(double gamma) {
  CorrelationModel m;
  m.kind = Kind::Riesz;
  m.gamma = gamma;
  m.validate();
  return m;
}

CorrelationModel CorrelationModel::cauchy(double theta) {
  CorrelationModel m;
  m.kind = Kind::Cauchy;
  m.theta = theta;
  m.validate();
  return m;
}

CorrelationModel CorrelationModel::constant_floor(double k) {
  CorrelationModel m;
  m.kind = Kind::ConstantFloor;
  m.floor_k = k;
  m.validate();
  return m;
}

void CorrelationModel::validate() const {
  switch (kind) {
    case Kind::White:
      break;
    case Kind::Riesz:
      if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("Riesz kernel needs 0 < gamma < 1 (local integrability in d=1), got gamma=" +
                              std::to_string(gamma));
      break;
    case Kind::Cauchy:
      if (!(theta > 0.0))
        throw ValidationError("Cauchy kernel needs theta > 0, got theta=" + std::to_string(theta));
      break;
    case Kind::ConstantFloor:
      if (!(floor_k > 0.0))
        throw ValidationError("constant-floor kernel needs K > 0, got K=" + std::to_string(floor_k));
      break;
  }
}

double CorrelationModel::evaluate(double x, double y, double cell_h) const {
  const double r = std::abs(x - y);
  switch (kind) {
    case Kind::White:
      throw ValidationError("white noise has no pointwise correlation f(x,y)");
    case Kind::Riesz:
      if (r < 0.5 * cell_h) {
        // Cell average of |s|^{-gamma} over [-h/2, h/2].
        return std::pow(0.5 * cell_h, -gamma) / (1.0 - gamma);
      }
      return std::pow(r, -gamma);
    case Kind::Cauchy:
      return 1.0 / (1.0 + (r / theta) * (r / theta));
    case Kind::ConstantFloor:
      return floor_k;
  }
  return 0.0;
}

double CorrelationModel::dominating(double r) const {
  switch (kind) {
    case Kind::White:
      throw ValidationError("white noise has no dominating kernel");
    case Kind::Riesz:
      return std::pow(r, -gamma);
    case Kind::Cauchy:
      return 1.0 / (1.0 + (r / theta) * (r / theta));
    case Kind::ConstantFloor:
      return floor_k;
  }
  return 0.0;
}

std::string CorrelationModel::kind_name() const {
  switch (kind) {
    case Kind::White: return "white";
    case Kind::Riesz: return "riesz";
    case Kind::Cauchy: return "cauchy";
    case Kind::ConstantFloor: return "constant_floor";
  }
  return "?";
}

std::string CorrelationModel::label() const {
  std::ostringstream os;
  os << kind_name();
  switch (kind) {
    case Kind::White: break;
    case Kind::Riesz: os << "(gamma=" << gamma << ")"; break;
    case Kind::Cauchy: os << "(theta=" << theta << ")"; break;
    case Kind::ConstantFloor: os << "(K=" << floor_k << ")"; break;
  }
  return os.str();
}

DalangResult dalang_check(const CorrelationModel& model, double alpha) {
  model.validate();
  DalangResult r;
  switch (model.kind) {
    case CorrelationModel::Kind::White:
      r.pass = alpha > 1.0;
      r.margin = alpha - 1.0;
      r.criterion = "white noise in d=1 requires alpha > 1";
      break;
    case CorrelationModel::Kind::Riesz:
      r.pass = model.gamma < alpha;
      r.margin = alpha - model.gamma;
      r.criterion = "Riesz spectral tail |xi|^{gamma-1} integrable against (1+|xi|^alpha)^{-1} iff gamma < alpha";
      break;
    case CorrelationModel::Kind::Cauchy:
      r.pass = true;
      r.criterion = "Cauchy spectral density decays exponentially";
      break;
    case CorrelationModel::Kind::ConstantFloor:
      r.pass = true;
      r.criterion = "constant kernel has an atomic spectral measure at 0";
      break;
  }
  return r;
}

NoiseIncrementSampler build_covariance(const CorrelationModel& model, const DomainGrid& grid,
                                       std::uint64_t seed) {
  model.validate();
  if (model.is_white())
    throw ValidationError(
        "build_covariance is undefined for white noise (delta correlation); "
        "use the white-noise rule");

  const int n = grid.n;
  NoiseIncrementSampler s;
  s.model_ = model;
  s.grid_ = grid;
  s.seed_ = seed;
  s.covariance_.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = model.evaluate(grid.nodes[i], grid.nodes[j], grid.h);
      s.covariance_(i, j) = v;
      s.covariance_(j, i) = v;
    }

  s.measured_floor_ = s.covariance_.minCoeff();
  s.floor_warning_ = *s.measured_floor_ <= 0.0;

  // Discretized kernels can lose positive semidefiniteness at machine
  // precision; escalate diagonal jitter until the factorization succeeds.
  const double unit = 1e-12 * s.covariance_.trace() / static_cast<double>(n);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Eigen::MatrixXd c = s.covariance_;
    c.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
      s.factor_ = llt.matrixL();
      s.jitter_ = jitter;
      return s;
    }
    jitter = (jitter == 0.0) ? unit : jitter * 10.0;
  }
  throw ValidationError("correlation model " + model.label() +
                        " is not positive semidefinite on this grid (jitter escalation exhausted)");
}

NoiseIncrementSampler white_noise_sampler(const DomainGrid& grid, std::uint64_t seed) {
  NoiseIncrementSampler s;
  s.model_ = CorrelationModel::white();
  s.grid_ = grid;
  s.seed_ = seed;
  return s;
}

Eigen::VectorXd NoiseIncrementSampler::sample_increment(double dt, std::uint64_t path_id,
                                                        std::uint64_t step_id) const {
  if (!(dt > 0.0)) throw ValidationError("time step must be > 0");
  Eigen::VectorXd z(grid_.n);
  GaussianStream(seed_, path_id, step_id).fill_normals(z);
  if (model_.is_white()) return std::sqrt(dt / grid_.h) * z;
  Eigen::VectorXd colored = factor_.triangularView<Eigen::Lower>() * z;
  colored *= std::sqrt(dt);
  return colored;
}

}  // namespace stableheat
