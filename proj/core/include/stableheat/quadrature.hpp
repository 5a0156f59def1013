#pragma once

#include <functional>
#include <vector>

namespace stableheat {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
};

/// Adaptive Gauss-Kronrod 15(7) on [a, b]. Panels with the largest error are
/// bisected until the summed estimate meets abs_tol + rel_tol * |value| or the
/// panel budget is exhausted. Nodes are interior, so integrable endpoint
/// singularities are tolerated.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-9, double abs_tol = 1e-12,
                                    int max_panels = 2000);

/// Same, but seeded with the given initial breakpoints (ascending, spanning
/// [a, b]). Use a geometric grading toward an endpoint boundary layer.
QuadratureResult integrate_adaptive_graded(const std::function<double(double)>& f,
                                           const std::vector<double>& breakpoints,
                                           double rel_tol = 1e-9, double abs_tol = 1e-12,
                                           int max_panels = 2000);

/// Breakpoints 0 < a*r^m < ... < a*r < a = first, then uniform up to b.
std::vector<double> graded_breakpoints(double first, double b, int geometric_levels,
                                       int uniform_panels);

}  // namespace stableheat
