#include "stableheat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "stableheat/errors.hpp"

namespace stableheat {

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1, 1]; odd-index nodes form the
// embedded 7-point Gauss rule.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double gk = 0.0, g = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double x = hw * kNodes[i];
    const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
    gk += kWeightsK[i] * fv;
    if (i % 2 == 1) g += kWeightsG[i / 2] * fv;
  }
  gk *= hw;
  g *= hw;
  return Panel{a, b, gk, std::abs(gk - g)};
}

QuadratureResult run(const std::function<double(double)>& f, std::vector<Panel> panels,
                     double rel_tol, double abs_tol, int max_panels) {
  double total_value = 0.0, total_error = 0.0;
  for (const Panel& p : panels) {
    total_value += p.value;
    total_error += p.error;
  }
  std::priority_queue<Panel> heap(std::less<Panel>(), std::move(panels));
  int count = static_cast<int>(heap.size());

  while (total_error > abs_tol + rel_tol * std::abs(total_value) && count < max_panels) {
    Panel worst = heap.top();
    heap.pop();
    total_value -= worst.value;
    total_error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Panel at floating-point resolution; keep its estimate as is.
      total_value += worst.value;
      total_error += worst.error;
      heap.push(worst);
      break;
    }
    const Panel left = evaluate_panel(f, worst.a, mid);
    const Panel right = evaluate_panel(f, mid, worst.b);
    total_value += left.value + right.value;
    total_error += left.error + right.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }

  if (!std::isfinite(total_value))
    throw NumericalError("quadrature produced a non-finite value");
  return QuadratureResult{total_value, total_error, count};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol, int max_panels) {
  if (!(b > a)) throw ValidationError("quadrature interval must satisfy b > a");
  return run(f, {evaluate_panel(f, a, b)}, rel_tol, abs_tol, max_panels);
}

QuadratureResult integrate_adaptive_graded(const std::function<double(double)>& f,
                                           const std::vector<double>& breakpoints, double rel_tol,
                                           double abs_tol, int max_panels) {
  if (breakpoints.size() < 2) throw ValidationError("need at least two breakpoints");
  std::vector<Panel> panels;
  for (size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i]))
      throw ValidationError("breakpoints must be strictly ascending");
    panels.push_back(evaluate_panel(f, breakpoints[i], breakpoints[i + 1]));
  }
  return run(f, std::move(panels), rel_tol, abs_tol, max_panels);
}

std::vector<double> graded_breakpoints(double first, double b, int geometric_levels,
                                       int uniform_panels) {
  std::vector<double> pts;
  pts.push_back(0.0);
  double x = first * std::pow(2.0, -geometric_levels);
  for (int i = 0; i <= geometric_levels && x < b; ++i, x *= 2.0) pts.push_back(x);
  const double start = pts.back();
  for (int i = 1; i <= uniform_panels; ++i)
    pts.push_back(start + (b - start) * static_cast<double>(i) / uniform_panels);
  pts.back() = b;
  return pts;
}

}  // namespace stableheat
