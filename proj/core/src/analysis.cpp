#include "stableheat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stableheat/errors.hpp"
#include "stableheat/parallel.hpp"

namespace stableheat {

namespace {

struct FitInput {
  std::vector<double> t;
  std::vector<double> logv;
  std::vector<double> sigma_log;  // propagated; empty when unavailable
  int excluded = 0;
};

ExponentEstimate fit(const FitInput& in, double t_lo, double t_hi) {
  const size_t n = in.t.size();
  if (n < 5)
    throw AnalysisError("exponent fit window has " + std::to_string(n) +
                        " usable points; need at least 5 (extend the horizon or records)");
  double st = 0.0, sy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    st += in.t[i];
    sy += in.logv[i];
  }
  const double tbar = st / static_cast<double>(n);
  const double ybar = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (in.t[i] - tbar) * (in.t[i] - tbar);
    sxy += (in.t[i] - tbar) * (in.logv[i] - ybar);
  }
  if (!(sxx > 0.0)) throw AnalysisError("exponent fit window has no time spread");
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * tbar;

  double ssr = 0.0, sst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = in.logv[i] - (intercept + slope * in.t[i]);
    ssr += r * r;
    sst += (in.logv[i] - ybar) * (in.logv[i] - ybar);
  }

  ExponentEstimate est;
  est.rate = slope;
  est.t_lo = t_lo;
  est.t_hi = t_hi;
  est.points_used = static_cast<int>(n);
  est.points_excluded = in.excluded;
  est.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  if (!in.sigma_log.empty()) {
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double c = (in.t[i] - tbar) / sxx;
      var += c * c * in.sigma_log[i] * in.sigma_log[i];
    }
    est.stderr_ = std::sqrt(var);
  } else {
    est.stderr_ = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
  }
  est.resolved = est.r_squared >= 0.9;
  return est;
}

}  // namespace

ExponentEstimate fit_exponent(const MomentCurve& curve, int node, double t_lo, double t_hi) {
  if (node < 0 || node >= curve.grid.n) throw QueryError("fit node index out of range");
  FitInput in;
  for (size_t r = 0; r < curve.times.size(); ++r) {
    const double t = curve.times[r];
    if (t < t_lo || t > t_hi) continue;
    const double v = curve.values(static_cast<int>(r), node);
    if (!(v > 0.0) || !std::isfinite(v)) {
      ++in.excluded;
      continue;
    }
    in.t.push_back(t);
    in.logv.push_back(std::log(v));
    if (curve.is_monte_carlo()) in.sigma_log.push_back(curve.stderrs(static_cast<int>(r), node) / v);
  }
  ExponentEstimate est = fit(in, t_lo, t_hi);
  est.order = curve.order;
  std::ostringstream os;
  os << "x=" << curve.grid.nodes[node];
  est.location = os.str();
  return est;
}

ExponentEstimate fit_exponent(const EnergyCurve& curve, double t_lo, double t_hi) {
  FitInput in;
  for (size_t r = 0; r < curve.times.size(); ++r) {
    const double t = curve.times[r];
    if (t < t_lo || t > t_hi) continue;
    const double v = curve.values[static_cast<int>(r)];
    if (!(v > 0.0) || !std::isfinite(v)) {
      ++in.excluded;
      continue;
    }
    in.t.push_back(t);
    in.logv.push_back(std::log(v));
  }
  ExponentEstimate est = fit(in, t_lo, t_hi);
  est.order = 2;
  est.location = "energy";
  return est;
}

PhaseDiagram xi_sweep(const std::vector<double>& xi_values,
                      const std::function<ExponentEstimate(double)>& rate_of_xi,
                      const SweepOptions& opts) {
  if (xi_values.size() < 2) throw ValidationError("xi sweep needs at least two values");
  for (size_t i = 0; i + 1 < xi_values.size(); ++i)
    if (!(xi_values[i] < xi_values[i + 1]))
      throw ValidationError("xi sweep values must be strictly ascending");

  PhaseDiagram diagram;
  diagram.method = opts.method;
  diagram.order = opts.order;
  diagram.points.resize(xi_values.size());
  parallel_for(static_cast<int>(xi_values.size()), opts.threads, [&](int i) {
    diagram.points[static_cast<size_t>(i)] = {xi_values[static_cast<size_t>(i)],
                                              rate_of_xi(xi_values[static_cast<size_t>(i)])};
  });

  // First adjacent sign change in the scanned range.
  auto sign_change = [&]() -> std::optional<size_t> {
    for (size_t i = 0; i + 1 < diagram.points.size(); ++i)
      if (diagram.points[i].estimate.rate < 0.0 && diagram.points[i + 1].estimate.rate > 0.0)
        return i;
    return std::nullopt;
  };

  auto lo_idx = sign_change();
  if (!lo_idx) {
    diagram.status = "no crossover in range";
    return diagram;
  }

  double lo = diagram.points[*lo_idx].xi;
  double hi = diagram.points[*lo_idx + 1].xi;
  if (opts.bisect) {
    const bool mc = opts.method == "monte-carlo";
    for (int round = 0; round < opts.max_bisections && hi - lo > opts.bracket_width; ++round) {
      const double mid = 0.5 * (lo + hi);
      const ExponentEstimate est = rate_of_xi(mid);
      // Keep every evaluated point in the diagram, in xi order.
      auto pos = std::lower_bound(diagram.points.begin(), diagram.points.end(), mid,
                                  [](const PhasePoint& p, double x) { return p.xi < x; });
      diagram.points.insert(pos, {mid, est});
      if (mc && std::abs(est.rate) < 2.0 * est.stderr_) break;
      (est.rate < 0.0 ? lo : hi) = mid;
    }
  }
  diagram.bracket = std::make_pair(lo, hi);
  diagram.status = "bracketed";
  return diagram;
}

LaplaceProbe laplace_probe(const MomentCurve& curve, double beta, double epsilon) {
  if (!(beta > 0.0)) throw ValidationError("Laplace probe needs beta > 0");
  const std::vector<int> interior = curve.grid.interior_indices(epsilon);
  const size_t n_rec = curve.times.size();
  if (n_rec < 5) throw AnalysisError("Laplace probe needs at least 5 record times");

  std::vector<double> inf_curve(n_rec);
  for (size_t r = 0; r < n_rec; ++r) {
    double lo = std::numeric_limits<double>::infinity();
    for (int i : interior) lo = std::min(lo, curve.values(static_cast<int>(r), i));
    inf_curve[r] = lo;
  }

  LaplaceProbe probe;
  probe.beta = beta;

  // Tail rate from the last half of the horizon.
  {
    const double t_lo = curve.times.front() + 0.5 * (curve.times.back() - curve.times.front());
    FitInput in;
    for (size_t r = 0; r < n_rec; ++r) {
      if (curve.times[r] < t_lo) continue;
      if (!(inf_curve[r] > 0.0) || !std::isfinite(inf_curve[r])) {
        ++in.excluded;
        continue;
      }
      in.t.push_back(curve.times[r]);
      in.logv.push_back(std::log(inf_curve[r]));
    }
    const ExponentEstimate est = fit(in, t_lo, curve.times.back());
    probe.tail_rate = est.rate;
    probe.tail_r_squared = est.r_squared;
  }

  // Quadrature: constant extension on [0, t_1], trapezoid across records.
  double value = inf_curve[0] * -std::expm1(-beta * curve.times[0]) / beta;
  for (size_t r = 0; r + 1 < n_rec; ++r) {
    const double f0 = std::exp(-beta * curve.times[r]) * inf_curve[r];
    const double f1 = std::exp(-beta * curve.times[r + 1]) * inf_curve[r + 1];
    value += 0.5 * (f0 + f1) * (curve.times[r + 1] - curve.times[r]);
  }

  if (probe.tail_r_squared < 0.9) {
    probe.verdict = "inconclusive";
    probe.value = value;
    return probe;
  }
  if (probe.tail_rate > beta) {
    probe.verdict = "divergent";
    probe.value = value;  // partial; the true integral diverges
    return probe;
  }
  const double t_end = curve.times.back();
  value += inf_curve[n_rec - 1] * std::exp(-beta * t_end) / (beta - probe.tail_rate);
  probe.value = value;
  probe.verdict = "convergent";
  return probe;
}

}  // namespace stableheat
