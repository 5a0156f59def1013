#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableheat/heat_kernel.hpp"
#include "stableheat/simulate.hpp"

namespace stableheat {

/// Trajectory of E|u_t(x)|^p on the grid. Oracle curves carry the Richardson
/// refinement change as quadrature_error; Monte Carlo curves carry pointwise
/// standard errors.
struct MomentCurve {
  std::vector<double> times;
  Eigen::MatrixXd values;   // times x nodes
  Eigen::MatrixXd stderrs;  // empty for oracle curves
  int order = 2;
  std::string provenance;  // "volterra-oracle" | "monte-carlo"
  DomainGrid grid;
  double quadrature_error = 0.0;

  bool is_monte_carlo() const { return provenance == "monte-carlo"; }
};

struct EnergyCurve {
  std::vector<double> times;
  Eigen::VectorXd values;  // sqrt(h sum_i E|u_t(x_i)|^2)
  std::string provenance;
  DomainGrid grid;
};

struct VolterraOptions {
  double refine_gate = 0.02;  // accept when curves at dt and dt/2 agree to this
  int max_refinements = 6;
  double gain_target = 0.4;  // per-panel kernel gain kept below this
};

/// Second moments under white noise and linear sigma (slope L): solves
///   m_t(x) = |(G u0)_t(x)|^2
///          + xi^2 L^2 int_0^t h sum_y p^2(t-s, x, y) m_s(y) ds
/// with panel integrals of the spectral kernel taken in closed form and the
/// newest panel treated implicitly. Requires alpha > 1 (integrable kernel).
MomentCurve solve_volterra_white(const HeatKernelEvaluator& eval, const Eigen::VectorXd& u0,
                                 double xi, double sigma_slope, double dt, double horizon,
                                 const std::vector<double>& record_times,
                                 const VolterraOptions& opts = {});

struct ColoredVolterraResult {
  MomentCurve diagonal;
  std::vector<Eigen::MatrixXd> covariance;  // E(u_t(x1) u_t(x2)) per record time
};

/// Full covariance system under colored noise, kernel
///   h^2 sum p(t-s,x1,y1) p(t-s,x2,y2) f(y1,y2) M_s(y1,y2).
/// Memory guard: N <= 256.
ColoredVolterraResult solve_volterra_colored(const HeatKernelEvaluator& eval,
                                             const Eigen::VectorXd& u0, double xi,
                                             double sigma_slope,
                                             const Eigen::MatrixXd& correlation_matrix, double dt,
                                             double horizon,
                                             const std::vector<double>& record_times,
                                             const VolterraOptions& opts = {});

struct MomentEstimate {
  MomentCurve curve;
  EnergyCurve energy;  // from the second-moment slots
  double epsilon = 0.0;
  bool sandwich_ok = true;
  int sandwich_violations = 0;
};

/// Converts streaming sums into moment/energy curves with standard errors and
/// checks the grid energy sandwich
///   |B_{R-eps}|_grid min_int E|u|^2 <= energy^2 <= |B_R|_grid max E|u|^2.
MomentEstimate estimate_moments(const EnsembleSummary& summary, int p, double epsilon);

EnergyCurve energy_from_curve(const MomentCurve& second_moments);

}  // namespace stableheat
