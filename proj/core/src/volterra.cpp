#include "stableheat/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "stableheat/errors.hpp"

namespace stableheat {

namespace {

// (1 - e^{-z}) / z, stable near 0.
double phi1(double z) {
  if (std::abs(z) < 1e-6) return 1.0 - z / 2.0 + z * z / 6.0;
  return -std::expm1(-z) / z;
}

struct SpectralTables {
  Eigen::MatrixXd rate;      // lambda_k + lambda_l
  Eigen::MatrixXd decay_dt;  // exp(-rate * dt)
  Eigen::MatrixXd panel;     // int_0^dt exp(-rate tau) dtau
};

SpectralTables make_tables(const Eigen::VectorXd& lam, double dt) {
  const int n = static_cast<int>(lam.size());
  SpectralTables t;
  t.rate = lam.replicate(1, n) + lam.transpose().replicate(n, 1);
  t.decay_dt = (-t.rate.array() * dt).exp();
  t.panel.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) t.panel(k, l) = dt * phi1(t.rate(k, l) * dt);
  return t;
}

// diag(Phi (panel o Z) Phi^T)
Eigen::VectorXd readout_diag(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& panel,
                             const Eigen::MatrixXd& z) {
  const Eigen::MatrixXd y = panel.cwiseProduct(z);
  return ((phi * y).cwiseProduct(phi)).rowwise().sum();
}

// Per-panel kernel gain c * max |int_0^dt B_tau(F o J) dtau| for J = ones;
// used both for step control and the implicit-solve conditioning.
double panel_gain(const Eigen::MatrixXd& phi, double h, const Eigen::MatrixXd& panel,
                  const Eigen::MatrixXd* f, double c) {
  const int n = static_cast<int>(phi.rows());
  Eigen::MatrixXd z;
  if (f == nullptr) {
    // white: T((1/h) diag(1)) = I
    z = Eigen::MatrixXd::Identity(n, n);
  } else {
    z = h * h * phi.transpose() * (*f) * phi;
  }
  const Eigen::MatrixXd out = phi * panel.cwiseProduct(z) * phi.transpose();
  return c * out.cwiseAbs().maxCoeff();
}

std::vector<int> snap_records(const std::vector<double>& record_times, double dt, int n_steps) {
  std::vector<int> steps;
  for (double t : record_times) {
    int k = static_cast<int>(std::llround(t / dt));
    k = std::max(1, std::min(k, n_steps));
    if (!steps.empty() && k <= steps.back())
      throw ValidationError("oracle record times collapse onto the same step; use a finer dt");
    steps.push_back(k);
  }
  return steps;
}

// One pass of the white (diagonal) solve at fixed dt. The implicit newest
// panel is solved exactly through a prefactored N x N system.
Eigen::MatrixXd solve_white_once(const SpectralDecomposition& sd, const Eigen::VectorXd& u0,
                                 double c, double dt, const std::vector<int>& record_steps) {
  const int n = sd.grid.n;
  const double h = sd.grid.h;
  const Eigen::MatrixXd& phi = sd.eigenvectors;
  const SpectralTables tab = make_tables(sd.eigenvalues, dt);

  // Q_{xy} = h * diag(Phi diag(a_y) panel diag(a_y) Phi^T)_x, the response of
  // node x to a unit second moment at node y through one panel.
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n);
  if (c > 0.0) {
    Eigen::MatrixXd q(n, n);
    for (int y = 0; y < n; ++y) {
      const Eigen::VectorXd ay = phi.row(y).transpose();
      const Eigen::MatrixXd g = phi * ay.asDiagonal();
      q.col(y) = h * ((g * tab.panel).cwiseProduct(g)).rowwise().sum();
    }
    lhs -= 0.5 * c * q;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);

  Eigen::VectorXd gcoef = h * (phi.transpose() * u0);
  const Eigen::VectorXd step_decay = (-sd.eigenvalues.array() * dt).exp();

  Eigen::VectorXd m = u0.cwiseProduct(u0);
  Eigen::MatrixXd w_prev = h * phi.transpose() * m.asDiagonal() * phi;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);

  const int n_steps = record_steps.back();
  Eigen::MatrixXd out(static_cast<int>(record_steps.size()), n);
  size_t rec = 0;
  for (int step = 1; step <= n_steps; ++step) {
    gcoef.array() *= step_decay.array();
    const Eigen::VectorXd g = phi * gcoef;
    s = tab.decay_dt.cwiseProduct(s);  // aged history
    Eigen::VectorXd rhs = g.cwiseProduct(g);
    if (c > 0.0)
      rhs += c * readout_diag(phi, tab.panel, s + 0.5 * w_prev);
    m = lu.solve(rhs);
    if (!m.allFinite()) throw NumericalError("white Volterra solve produced non-finite moments");
    if (c > 0.0) {
      const Eigen::MatrixXd w = h * phi.transpose() * m.asDiagonal() * phi;
      s += 0.5 * (w + w_prev);
      w_prev = w;
    }
    while (rec < record_steps.size() && record_steps[rec] == step) {
      out.row(static_cast<int>(rec)) = m.cwiseMax(0.0).transpose();
      ++rec;
    }
  }
  return out;
}

struct ColoredPass {
  Eigen::MatrixXd diag;
  std::vector<Eigen::MatrixXd> covs;
};

ColoredPass solve_colored_once(const SpectralDecomposition& sd, const Eigen::VectorXd& u0,
                               double c, const Eigen::MatrixXd& f, double dt,
                               const std::vector<int>& record_steps, bool keep_cov) {
  const int n = sd.grid.n;
  const double h = sd.grid.h;
  const Eigen::MatrixXd& phi = sd.eigenvectors;
  const SpectralTables tab = make_tables(sd.eigenvalues, dt);

  auto transform = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return h * h * phi.transpose() * x * phi;
  };
  auto readout = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
    return phi * tab.panel.cwiseProduct(z) * phi.transpose();
  };

  Eigen::VectorXd gcoef = h * (phi.transpose() * u0);
  const Eigen::VectorXd step_decay = (-sd.eigenvalues.array() * dt).exp();

  Eigen::MatrixXd m_prev = u0 * u0.transpose();
  Eigen::MatrixXd m_prev2 = m_prev;
  Eigen::MatrixXd w_prev = transform(f.cwiseProduct(m_prev));
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);

  const int n_steps = record_steps.back();
  ColoredPass out;
  out.diag.resize(static_cast<int>(record_steps.size()), n);
  size_t rec = 0;
  const double scale0 = m_prev.cwiseAbs().maxCoeff() + 1e-300;

  for (int step = 1; step <= n_steps; ++step) {
    gcoef.array() *= step_decay.array();
    const Eigen::VectorXd g = phi * gcoef;
    const Eigen::MatrixXd g_outer = g * g.transpose();
    s = tab.decay_dt.cwiseProduct(s);

    // Predictor: extrapolated panel midpoint; corrector: fixed point on the
    // implicit panel average. The per-panel gain is kept <= gain_target by
    // the caller's step control, so the iteration contracts.
    Eigen::MatrixXd m_est = 1.5 * m_prev - 0.5 * m_prev2;
    if (step == 1) m_est = m_prev;
    Eigen::MatrixXd m_new;
    bool converged = (c == 0.0);
    if (c == 0.0) {
      m_new = g_outer;
    } else {
      for (int it = 0; it < 80; ++it) {
        const Eigen::MatrixXd w_half = transform(f.cwiseProduct(0.5 * (m_est + m_prev)));
        m_new = g_outer + c * readout(s + w_half);
        const double change = (m_new - m_est).cwiseAbs().maxCoeff();
        const double scale = m_new.cwiseAbs().maxCoeff() + scale0;
        m_est = m_new;
        if (change <= 1e-12 * scale) {
          converged = true;
          break;
        }
      }
    }
    if (!converged)
      throw NumericalError("colored Volterra corrector did not converge; reduce dt");
    if (!m_new.allFinite())
      throw NumericalError("colored Volterra solve produced non-finite covariances");

    if (c > 0.0) {
      const Eigen::MatrixXd w = transform(f.cwiseProduct(m_new));
      s += 0.5 * (w + w_prev);
      w_prev = w;
    }
    m_prev2 = m_prev;
    m_prev = m_new;

    while (rec < record_steps.size() && record_steps[rec] == step) {
      out.diag.row(static_cast<int>(rec)) = m_new.diagonal().cwiseMax(0.0).transpose();
      if (keep_cov) out.covs.push_back(m_new);
      ++rec;
    }
  }
  return out;
}

double curve_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int i = 0; i < a.cols(); ++i) {
      const double denom = std::max(std::abs(b(r, i)), 1e-9 * scale);
      worst = std::max(worst, std::abs(a(r, i) - b(r, i)) / denom);
    }
  return worst;
}

// Step control: halve dt until the per-panel gain meets the target.
double controlled_dt(const SpectralDecomposition& sd, double c, const Eigen::MatrixXd* f,
                     double dt, double gain_target) {
  const double h = sd.grid.h;
  double d = dt;
  for (int j = 0; j < 14; ++j) {
    const SpectralTables tab = make_tables(sd.eigenvalues, d);
    if (c == 0.0 || panel_gain(sd.eigenvectors, h, tab.panel, f, c) <= gain_target) return d;
    d /= 2.0;
  }
  throw NumericalError("Volterra step control could not reach the gain target; xi too large?");
}

}  // namespace

MomentCurve solve_volterra_white(const HeatKernelEvaluator& eval, const Eigen::VectorXd& u0,
                                 double xi, double sigma_slope, double dt, double horizon,
                                 const std::vector<double>& record_times,
                                 const VolterraOptions& opts) {
  const SpectralDecomposition& sd = eval.spectrum();
  if (!(sd.spec.alpha > 1.0))
    throw ValidationError("white-noise Volterra oracle requires alpha > 1");
  if (u0.size() != sd.grid.n) throw DataError("u0 has wrong size");
  if (record_times.empty()) throw ValidationError("need at least one record time");
  if (!(dt > 0.0 && horizon > 0.0)) throw ValidationError("dt and horizon must be > 0");

  const double c = xi * xi * sigma_slope * sigma_slope;
  double d = controlled_dt(eval.spectrum(), c, nullptr, dt, opts.gain_target);

  int n_steps = std::max<int>(1, static_cast<int>(std::llround(horizon / d)));
  d = horizon / n_steps;
  std::vector<int> rec_steps = snap_records(record_times, d, n_steps);

  Eigen::MatrixXd prev = solve_white_once(sd, u0, c, d, rec_steps);
  double diff = 0.0;
  bool accepted = false;
  for (int r = 0; r < opts.max_refinements; ++r) {
    std::vector<int> rec2(rec_steps.size());
    for (size_t i = 0; i < rec_steps.size(); ++i) rec2[i] = rec_steps[i] * 2;
    n_steps *= 2;
    d /= 2.0;
    rec_steps = rec2;
    const Eigen::MatrixXd fine = solve_white_once(sd, u0, c, d, rec_steps);
    diff = curve_difference(prev, fine);
    prev = fine;
    if (diff <= opts.refine_gate) {
      accepted = true;
      break;
    }
  }
  if (!accepted)
    throw NumericalError("white Volterra refinement did not meet the acceptance gate");

  MomentCurve out;
  for (int k : rec_steps) out.times.push_back(k * d);
  out.values = prev;
  out.order = 2;
  out.provenance = "volterra-oracle";
  out.grid = sd.grid;
  out.quadrature_error = diff;
  return out;
}

ColoredVolterraResult solve_volterra_colored(const HeatKernelEvaluator& eval,
                                             const Eigen::VectorXd& u0, double xi,
                                             double sigma_slope,
                                             const Eigen::MatrixXd& correlation_matrix, double dt,
                                             double horizon,
                                             const std::vector<double>& record_times,
                                             const VolterraOptions& opts) {
  const SpectralDecomposition& sd = eval.spectrum();
  const int n = sd.grid.n;
  if (n > 256)
    throw ConfigurationError(
        "full covariance Volterra system is limited to N <= 256; use a coarser grid");
  if (correlation_matrix.rows() != n || correlation_matrix.cols() != n)
    throw DataError("correlation matrix has wrong shape");
  if (u0.size() != n) throw DataError("u0 has wrong size");
  if (record_times.empty()) throw ValidationError("need at least one record time");
  if (!(dt > 0.0 && horizon > 0.0)) throw ValidationError("dt and horizon must be > 0");

  const double c = xi * xi * sigma_slope * sigma_slope;
  double d = controlled_dt(sd, c, &correlation_matrix, dt, opts.gain_target);
  int n_steps = std::max<int>(1, static_cast<int>(std::llround(horizon / d)));
  d = horizon / n_steps;
  std::vector<int> rec_steps = snap_records(record_times, d, n_steps);

  ColoredPass prev = solve_colored_once(sd, u0, c, correlation_matrix, d, rec_steps, true);
  double diff = 0.0;
  bool accepted = false;
  for (int r = 0; r < opts.max_refinements; ++r) {
    std::vector<int> rec2(rec_steps.size());
    for (size_t i = 0; i < rec_steps.size(); ++i) rec2[i] = rec_steps[i] * 2;
    n_steps *= 2;
    d /= 2.0;
    rec_steps = rec2;
    ColoredPass fine = solve_colored_once(sd, u0, c, correlation_matrix, d, rec_steps, true);
    diff = curve_difference(prev.diag, fine.diag);
    prev = std::move(fine);
    if (diff <= opts.refine_gate) {
      accepted = true;
      break;
    }
  }
  if (!accepted)
    throw NumericalError("colored Volterra refinement did not meet the acceptance gate");

  ColoredVolterraResult out;
  for (int k : rec_steps) out.diagonal.times.push_back(k * d);
  out.diagonal.values = prev.diag;
  out.diagonal.order = 2;
  out.diagonal.provenance = "volterra-oracle";
  out.diagonal.grid = sd.grid;
  out.diagonal.quadrature_error = diff;
  out.covariance = std::move(prev.covs);
  return out;
}

MomentEstimate estimate_moments(const EnsembleSummary& summary, int p, double epsilon) {
  const int slot = summary.order_slot(p);  // throws QueryError when absent
  (void)slot;
  const int n_rec = static_cast<int>(summary.record_times.size());
  const int n = summary.grid.n;

  MomentEstimate est;
  est.epsilon = epsilon;
  est.curve.times = summary.record_times;
  est.curve.order = p;
  est.curve.provenance = "monte-carlo";
  est.curve.grid = summary.grid;
  est.curve.values.resize(n_rec, n);
  est.curve.stderrs.resize(n_rec, n);
  for (int r = 0; r < n_rec; ++r)
    for (int i = 0; i < n; ++i) {
      est.curve.values(r, i) = summary.moment(r, i, p);
      est.curve.stderrs(r, i) = summary.moment_stderr(r, i, p);
    }

  // Energy and sandwich from the always-present second-moment slots.
  Eigen::MatrixXd m2(n_rec, n);
  for (int r = 0; r < n_rec; ++r)
    for (int i = 0; i < n; ++i) m2(r, i) = summary.moment(r, i, 2);

  est.energy.times = summary.record_times;
  est.energy.provenance = "monte-carlo";
  est.energy.grid = summary.grid;
  est.energy.values.resize(n_rec);
  const std::vector<int> interior = summary.grid.interior_indices(epsilon);
  const double measure_interior = summary.grid.interior_measure(epsilon);
  const double measure_full = summary.grid.h * static_cast<double>(n);
  for (int r = 0; r < n_rec; ++r) {
    const double e2 = summary.grid.h * m2.row(r).sum();
    est.energy.values[r] = std::sqrt(std::max(e2, 0.0));
    double min_int = std::numeric_limits<double>::infinity();
    for (int i : interior) min_int = std::min(min_int, m2(r, i));
    const double lo = measure_interior * min_int;
    const double hi = measure_full * m2.row(r).maxCoeff();
    if (!(lo <= e2 && e2 <= hi)) {
      est.sandwich_ok = false;
      ++est.sandwich_violations;
    }
  }
  return est;
}

EnergyCurve energy_from_curve(const MomentCurve& second_moments) {
  if (second_moments.order != 2)
    throw QueryError("energy needs a second-moment curve (p=2)");
  EnergyCurve e;
  e.times = second_moments.times;
  e.provenance = second_moments.provenance;
  e.grid = second_moments.grid;
  e.values.resize(static_cast<int>(e.times.size()));
  for (int r = 0; r < second_moments.values.rows(); ++r)
    e.values[r] =
        std::sqrt(std::max(second_moments.grid.h * second_moments.values.row(r).sum(), 0.0));
  return e;
}

}  // namespace stableheat
