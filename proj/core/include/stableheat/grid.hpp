#pragma once

#include <vector>

#include <Eigen/Core>

namespace stableheat {

/// Uniform grid of N interior nodes on (-R, R), spacing h = 2R/(N+1).
/// The exterior (|x| >= R) carries the zero condition; no boundary nodes
/// are stored. Dimension is fixed at d = 1.
struct DomainGrid {
  double radius = 1.0;
  int n = 0;
  double h = 0.0;
  Eigen::VectorXd nodes;

  static DomainGrid make(double radius, int n);

  /// Grid measure of the sub-ball B_{radius-eps}(0): h times the number of
  /// nodes with |x_i| <= radius - eps.
  double interior_measure(double eps) const;

  /// Indices i with |x_i| <= radius - eps.
  std::vector<int> interior_indices(double eps) const;

  /// Index of the node closest to x.
  int nearest_index(double x) const;
};

}  // namespace stableheat
