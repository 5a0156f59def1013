#include "stableheat/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stableheat/errors.hpp"
#include "stableheat/quadrature.hpp"

namespace stableheat {

HeatKernelEvaluator::HeatKernelEvaluator(SpectralDecomposition spectrum) : sd_(std::move(spectrum)) {
  mode_mass_ = sd_.grid.h * (sd_.eigenvectors.transpose() * Eigen::VectorXd::Ones(sd_.grid.n));
}

double HeatKernelEvaluator::evaluate(double t, int i, int j) const {
  if (!(t > 0.0)) throw ValidationError("heat kernel requires t > 0");
  const int n = sd_.grid.n;
  if (i < 0 || i >= n || j < 0 || j >= n) throw QueryError("node index out of range");
  double acc = 0.0;
  for (int k = 0; k < n; ++k)
    acc += std::exp(-sd_.eigenvalues[k] * t) * sd_.eigenvectors(i, k) * sd_.eigenvectors(j, k);
  return acc;
}

std::shared_ptr<const Eigen::MatrixXd> HeatKernelEvaluator::propagator(double t) const {
  if (!(t > 0.0)) throw ValidationError("heat kernel requires t > 0");
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
  }
  Eigen::VectorXd decay = (-sd_.eigenvalues.array() * t).exp();
  auto p = std::make_shared<Eigen::MatrixXd>(
      sd_.eigenvectors * decay.asDiagonal() * sd_.eigenvectors.transpose());
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto [it, inserted] = cache_.emplace(t, std::move(p));
  return it->second;
}

std::shared_ptr<const Eigen::MatrixXd> HeatKernelEvaluator::noise_propagator(double dt) const {
  if (!(dt > 0.0)) throw ValidationError("noise propagator requires dt > 0");
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = noise_cache_.find(dt);
    if (it != noise_cache_.end()) return it->second;
  }
  const int n = sd_.grid.n;
  const Eigen::VectorXd& lam = sd_.eigenvalues;
  const Eigen::MatrixXd& phi = sd_.eigenvectors;
  // panel_{kl} = int_0^dt exp(-(lam_k + lam_l) r) dr
  Eigen::MatrixXd panel(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double z = (lam[k] + lam[l]) * dt;
      const double p = std::abs(z) < 1e-6 ? 1.0 - z / 2.0 + z * z / 6.0 : -std::expm1(-z) / z;
      panel(k, l) = dt * p;
    }
  // avg_{xy} = (1/dt) sum_{kl} panel_{kl} phi_k(x) phi_l(x) phi_k(y) phi_l(y),
  // assembled one column at a time.
  auto out = std::make_shared<Eigen::MatrixXd>(n, n);
  for (int y = 0; y < n; ++y) {
    const Eigen::MatrixXd g = phi * phi.row(y).asDiagonal();
    out->col(y) = (((g * panel).cwiseProduct(g)).rowwise().sum() / dt).cwiseMax(0.0).cwiseSqrt();
  }
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto [it, inserted] = noise_cache_.emplace(dt, std::move(out));
  return it->second;
}

Eigen::VectorXd HeatKernelEvaluator::apply_semigroup(double t, const Eigen::VectorXd& v) const {
  if (!(t >= 0.0)) throw ValidationError("semigroup requires t >= 0");
  if (!v.allFinite()) throw DataError("semigroup input has non-finite entries");
  if (v.size() != sd_.grid.n) throw DataError("semigroup input has wrong size");
  if (t == 0.0) return v;
  Eigen::VectorXd coeffs = sd_.eigenvectors.transpose() * v;
  coeffs.array() *= (-sd_.eigenvalues.array() * t).exp();
  return sd_.grid.h * (sd_.eigenvectors * coeffs);
}

double HeatKernelEvaluator::mass(double t, int i) const {
  if (!(t > 0.0)) throw ValidationError("heat kernel requires t > 0");
  double acc = 0.0;
  for (int k = 0; k < sd_.grid.n; ++k)
    acc += std::exp(-sd_.eigenvalues[k] * t) * sd_.eigenvectors(i, k) * mode_mass_[k];
  return acc;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  return LineFit{(n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom};
}

// Interior block of P(t) with modes truncated once they are negligible
// relative to the ground mode.
Eigen::MatrixXd interior_propagator(const SpectralDecomposition& sd, const std::vector<int>& idx,
                                    double t) {
  const int m = static_cast<int>(idx.size());
  int kmax = static_cast<int>(sd.eigenvalues.size());
  while (kmax > 1 && (sd.eigenvalues[kmax - 1] - sd.eigenvalues[0]) * t > 46.0) --kmax;
  Eigen::MatrixXd sub(m, kmax);
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < kmax; ++k) sub(r, k) = sd.eigenvectors(idx[static_cast<size_t>(r)], k);
  Eigen::VectorXd decay = (-sd.eigenvalues.head(kmax).array() * t).exp();
  return sub * decay.asDiagonal() * sub.transpose();
}

}  // namespace

KernelBoundReport verify_kernel_bounds(const HeatKernelEvaluator& eval, double epsilon,
                                       const KernelBoundOptions& opts) {
  const DomainGrid& grid = eval.grid();
  if (!(epsilon > 0.0 && epsilon < grid.radius))
    throw ValidationError("interior margin must satisfy 0 < eps < R");
  const SpectralDecomposition& sd = eval.spectrum();
  const double mu1 = sd.mu1;
  if (opts.horizon_over_mu1 < 10.5 || opts.band_points < 5)
    throw AnalysisError("kernel-bound fit window too short; extend the horizon past 10/mu1");

  const std::vector<int> interior = grid.interior_indices(epsilon);
  if (interior.size() < 2) throw AnalysisError("interior margin leaves fewer than 2 nodes");

  KernelBoundReport rep;
  rep.epsilon = epsilon;
  rep.band_factor = opts.band_factor;

  // Short-time on-diagonal power law, p(t,x,x) ~ c t^{-1/alpha}.
  const double alpha = sd.spec.alpha;
  const int center = grid.nearest_index(0.0);
  {
    std::vector<double> lt, lp;
    double c_lo = std::numeric_limits<double>::infinity();
    double c_hi = 0.0;
    for (int q = 0; q < opts.small_t_points; ++q) {
      const double t = opts.small_t_lo * std::pow(opts.small_t_hi / opts.small_t_lo,
                                                  static_cast<double>(q) /
                                                      (opts.small_t_points - 1));
      const double pc = eval.evaluate(t, center, center);
      lt.push_back(std::log(t));
      lp.push_back(std::log(pc));
      for (int i : interior) {
        const double v = eval.evaluate(t, i, i) * std::pow(t, 1.0 / alpha);
        c_lo = std::min(c_lo, v);
        c_hi = std::max(c_hi, v);
      }
    }
    rep.small_t_exponent = ols(lt, lp).slope;
    rep.c1_small_t = c_lo;
    rep.c2_small_t = c_hi;
  }

  // Long-time rate from the slope of log p(t, 0, 0) over [5, 10] / mu1.
  {
    std::vector<double> ts, lp;
    for (int q = 0; q < 12; ++q) {
      const double t = (5.0 + 5.0 * q / 11.0) / mu1;
      ts.push_back(t);
      lp.push_back(std::log(eval.evaluate(t, center, center)));
    }
    rep.mu1_fit = -ols(ts, lp).slope;
  }

  // Factor band: first t where max/min of e^{mu1_fit t} p over interior pairs
  // is within band_factor. Negative truncation noise counts as "not in band".
  {
    const double t_hi = opts.horizon_over_mu1 / mu1;
    const double t_lo = 0.01 / mu1;
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_t = t_hi;
    double first_in_band = -1.0;
    std::vector<double> band_times;
    for (int q = 0; q < opts.band_points; ++q)
      band_times.push_back(t_lo * std::pow(t_hi / t_lo, static_cast<double>(q) /
                                                            (opts.band_points - 1)));
    for (double t : band_times) {
      const Eigen::MatrixXd sub = interior_propagator(sd, interior, t);
      const double scale = std::exp(rep.mu1_fit * t);
      const double lo = sub.minCoeff() * scale;
      const double hi = sub.maxCoeff() * scale;
      const double ratio = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best_t = t;
      }
      if (first_in_band < 0.0 && ratio <= opts.band_factor) first_in_band = t;
    }
    rep.band_reached = first_in_band > 0.0;
    rep.t0 = rep.band_reached ? first_in_band : best_t;
    rep.band_achieved = best_ratio;

    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    for (double t : band_times) {
      if (t < rep.t0) continue;
      const Eigen::MatrixXd sub = interior_propagator(sd, interior, t);
      const double scale = std::exp(rep.mu1_fit * t);
      c1 = std::min(c1, std::max(sub.minCoeff(), 0.0) * scale);
      c2 = std::max(c2, sub.maxCoeff() * scale);
    }
    rep.c1_long = c1;
    rep.c2_long = c2;
  }
  return rep;
}

std::string lemma_name(LemmaId id) {
  switch (id) {
    case LemmaId::L21: return "L21";
    case LemmaId::L22: return "L22";
    case LemmaId::L23: return "L23";
    case LemmaId::L24: return "L24";
  }
  return "?";
}

namespace {

std::vector<double> lemma_breakpoints(double t_max) {
  return graded_breakpoints(t_max / 16.0, t_max, 44, 15);
}

double quad_from(const std::function<double(double)>& f, double a, double b, double& err) {
  if (a >= b) return 0.0;
  QuadratureResult q = a <= 0.0
                           ? integrate_adaptive_graded(f, lemma_breakpoints(b), 1e-10, 1e-13)
                           : integrate_adaptive(f, a, b, 1e-10, 1e-13);
  err += q.error_estimate;
  return q.value;
}

}  // namespace

LemmaReport lemma_integral(const HeatKernelEvaluator& eval, LemmaId id, double beta,
                           const std::vector<int>& point_indices,
                           const CorrelationModel* correlation, double t_split) {
  const SpectralDecomposition& sd = eval.spectrum();
  const DomainGrid& grid = eval.grid();
  const int n = grid.n;
  const double mu1 = sd.mu1;
  const double t_max = 20.0 / mu1;

  const size_t need = (id == LemmaId::L21 || id == LemmaId::L22) ? 1u
                      : (id == LemmaId::L23)                     ? 2u
                                                                 : 4u;
  if (point_indices.size() != need)
    throw ValidationError(lemma_name(id) + " needs " + std::to_string(need) + " grid point(s)");
  for (int i : point_indices)
    if (i < 0 || i >= n) throw QueryError("lemma point index out of range");

  LemmaReport rep;
  rep.id = id;
  rep.beta = beta;
  for (int i : point_indices) rep.points.push_back(grid.nodes[i]);
  rep.correlation = correlation ? correlation->label() : "none";
  rep.t_max = t_max;
  rep.t_split = std::max(t_split, 0.0);

  switch (id) {
    case LemmaId::L21: {
      if (!(sd.spec.alpha > 1.0))
        throw ConfigurationError(
            "Lemma 2.1 has an integrable t^{-1/alpha} singularity only for alpha > 1");
      const int x = point_indices[0];
      rep.verdict = (beta > 0.0 && beta < mu1) ? "finite" : "hypothesis-violated";
      auto f = [&](double t) { return std::exp(beta * t) * eval.evaluate(t, x, x); };
      double err = 0.0;
      const double full = quad_from(f, 0.0, t_max, err);
      double tail_beyond = 0.0;
      if (beta < mu1) {
        for (int k = 0; k < n; ++k) {
          const double rate = sd.eigenvalues[k] - beta;
          tail_beyond += sd.eigenvectors(x, k) * sd.eigenvectors(x, k) *
                         std::exp(-rate * t_max) / rate;
        }
      }
      rep.value = full + tail_beyond;
      rep.quadrature_error = err;
      if (rep.t_split > 0.0) {
        double err2 = 0.0;
        rep.tail_value = quad_from(f, rep.t_split, t_max, err2) + tail_beyond;
      } else {
        rep.tail_value = rep.value;
      }
      break;
    }
    case LemmaId::L22: {
      const int x = point_indices[0];
      rep.verdict = (beta > 0.0 && beta < mu1) ? "finite" : "hypothesis-violated";
      // Supremum of e^{beta t} * (sub-Markov mass) over (0, t_max].
      auto g = [&](double t) { return std::exp(beta * t) * eval.mass(t, x); };
      const int pts = 800;
      const double t_lo = 1e-6 / mu1;
      double sup = 0.0, sup_split = 0.0, prev = 0.0, res = 0.0;
      for (int q = 0; q < pts; ++q) {
        const double t =
            t_lo * std::pow(t_max / t_lo, static_cast<double>(q) / (pts - 1));
        const double v = g(t);
        if (q > 0) res = std::max(res, std::abs(v - prev));
        prev = v;
        sup = std::max(sup, v);
        if (t >= rep.t_split) sup_split = std::max(sup_split, v);
      }
      sup = std::max(sup, 1.0);  // t -> 0 limit of the mass
      rep.value = sup;
      rep.tail_value = rep.t_split > 0.0 ? sup_split : sup;
      rep.quadrature_error = res;
      break;
    }
    case LemmaId::L23: {
      if (correlation == nullptr || correlation->is_white())
        throw ValidationError("Lemma 2.3 needs a colored correlation model");
      const int x1 = point_indices[0], x2 = point_indices[1];
      rep.verdict = (beta > 0.0 && beta < 2.0 * mu1) ? "finite" : "hypothesis-violated";
      Eigen::MatrixXd f_mat(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          const double v = correlation->evaluate(grid.nodes[i], grid.nodes[j], grid.h);
          f_mat(i, j) = v;
          f_mat(j, i) = v;
        }
      const double h = grid.h;
      auto integrand = [&](double t) {
        Eigen::VectorXd decay = (-sd.eigenvalues.array() * t).exp();
        Eigen::VectorXd row1 =
            sd.eigenvectors * (decay.cwiseProduct(sd.eigenvectors.row(x1).transpose()));
        Eigen::VectorXd row2 =
            sd.eigenvectors * (decay.cwiseProduct(sd.eigenvectors.row(x2).transpose()));
        return std::exp(beta * t) * h * h * row1.dot(f_mat * row2);
      };
      double err = 0.0;
      const double full = quad_from(integrand, 0.0, t_max, err);
      double tail_beyond = 0.0;
      if (beta < 2.0 * mu1) {
        const Eigen::MatrixXd g_spec =
            h * h * sd.eigenvectors.transpose() * f_mat * sd.eigenvectors;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double rate = sd.eigenvalues[k] + sd.eigenvalues[l] - beta;
            tail_beyond += sd.eigenvectors(x1, k) * g_spec(k, l) * sd.eigenvectors(x2, l) *
                           std::exp(-rate * t_max) / rate;
          }
      }
      rep.value = full + tail_beyond;
      rep.quadrature_error = err;
      if (rep.t_split > 0.0) {
        double err2 = 0.0;
        rep.tail_value = quad_from(integrand, rep.t_split, t_max, err2) + tail_beyond;
      } else {
        rep.tail_value = rep.value;
      }
      break;
    }
    case LemmaId::L24: {
      const int x1 = point_indices[0], y1 = point_indices[1];
      const int x2 = point_indices[2], y2 = point_indices[3];
      rep.verdict = beta > 0.0 ? "finite" : "hypothesis-violated";
      auto integrand = [&](double t) {
        return std::exp(-beta * t) * eval.evaluate(t, x1, y1) * eval.evaluate(t, x2, y2);
      };
      double err = 0.0;
      const double full = quad_from(integrand, 0.0, t_max, err);
      double tail_beyond = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double rate = sd.eigenvalues[k] + sd.eigenvalues[l] + beta;
          tail_beyond += sd.eigenvectors(x1, k) * sd.eigenvectors(y1, k) *
                         sd.eigenvectors(x2, l) * sd.eigenvectors(y2, l) *
                         std::exp(-rate * t_max) / rate;
        }
      rep.value = full + tail_beyond;
      rep.quadrature_error = err;
      if (rep.t_split > 0.0) {
        double err2 = 0.0;
        rep.tail_value = quad_from(integrand, rep.t_split, t_max, err2) + tail_beyond;
      } else {
        rep.tail_value = rep.value;
      }
      break;
    }
  }
  return rep;
}

}  // namespace stableheat
