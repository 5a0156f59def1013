#include "stableheat/grid.hpp"

#include <cmath>
#include <string>

#include "stableheat/errors.hpp"

namespace stableheat {

DomainGrid DomainGrid::make(double radius, int n) {
  if (!(radius > 0.0))
    throw ValidationError("grid radius must be > 0, got " + std::to_string(radius));
  if (n < 8)
    throw ValidationError("grid needs N >= 8 interior nodes, got " + std::to_string(n));

  DomainGrid g;
  g.radius = radius;
  g.n = n;
  g.h = 2.0 * radius / static_cast<double>(n + 1);
  g.nodes.resize(n);
  for (int i = 0; i < n; ++i)
    g.nodes[i] = -radius + g.h * static_cast<double>(i + 1);
  return g;
}

double DomainGrid::interior_measure(double eps) const {
  return h * static_cast<double>(interior_indices(eps).size());
}

std::vector<int> DomainGrid::interior_indices(double eps) const {
  if (!(eps >= 0.0 && eps < radius))
    throw ValidationError("interior margin must satisfy 0 <= eps < R");
  std::vector<int> idx;
  const double cut = radius - eps;
  for (int i = 0; i < n; ++i)
    if (std::abs(nodes[i]) <= cut + 1e-14) idx.push_back(i);
  return idx;
}

int DomainGrid::nearest_index(double x) const {
  int best = 0;
  double d = std::abs(nodes[0] - x);
  for (int i = 1; i < n; ++i) {
    const double di = std::abs(nodes[i] - x);
    if (di < d) {
      d = di;
      best = i;
    }
  }
  return best;
}

}  // namespace stableheat
