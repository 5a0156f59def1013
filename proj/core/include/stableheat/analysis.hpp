#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stableheat/volterra.hpp"

namespace stableheat {

/// Fitted slope of log(moment) versus t. Estimates with r_squared < 0.9 are
/// flagged unresolved and must not be consumed silently.
struct ExponentEstimate {
  double rate = 0.0;
  double stderr_ = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  int order = 2;
  std::string location;  // node position or "energy"
  int points_used = 0;
  int points_excluded = 0;  // nonpositive / non-finite values in the window
  bool resolved = false;
};

/// OLS on (t, log value) over [t_lo, t_hi]. Monte Carlo curves propagate the
/// moment standard errors through the regression; oracle curves use the
/// residual estimate. Throws AnalysisError with fewer than 5 usable points.
ExponentEstimate fit_exponent(const MomentCurve& curve, int node, double t_lo, double t_hi);
ExponentEstimate fit_exponent(const EnergyCurve& curve, double t_lo, double t_hi);

struct PhasePoint {
  double xi = 0.0;
  ExponentEstimate estimate;
};

/// Rates across xi with the decay/growth crossover bracketed when a sign
/// change exists in the scanned range.
struct PhaseDiagram {
  std::vector<PhasePoint> points;  // ascending xi
  std::optional<std::pair<double, double>> bracket;
  std::string status;  // "bracketed" | "no crossover in range"
  std::string method;  // "oracle" | "monte-carlo"
  int order = 2;
};

struct SweepOptions {
  std::string method = "oracle";
  double bracket_width = 0.1;     // oracle bisection stops at this width
  int max_bisections = 24;
  int order = 2;
  bool bisect = true;
  int threads = 1;  // initial grid points are independent jobs
};

/// Evaluates rate(xi) over the given values via the supplied evaluator and
/// bisects any sign change. Oracle method bisects to bracket_width; the
/// Monte Carlo method also stops once |rate| < 2 stderr at the midpoint.
PhaseDiagram xi_sweep(const std::vector<double>& xi_values,
                      const std::function<ExponentEstimate(double)>& rate_of_xi,
                      const SweepOptions& opts);

struct LaplaceProbe {
  double beta = 0.0;
  double value = 0.0;      // quadrature over the horizon plus fitted tail
  double tail_rate = 0.0;  // fitted exponential rate of the interior infimum
  double tail_r_squared = 0.0;
  std::string verdict;  // "convergent" | "divergent" | "inconclusive"
};

/// int_0^inf e^{-beta t} inf_{interior} curve dt: trapezoid over the recorded
/// horizon plus an exponential tail fitted on the last half. Divergent when
/// the fitted tail rate exceeds beta.
LaplaceProbe laplace_probe(const MomentCurve& curve, double beta, double epsilon);

}  // namespace stableheat
