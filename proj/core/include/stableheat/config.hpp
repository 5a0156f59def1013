#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stableheat/noise.hpp"
#include "stableheat/operators.hpp"
#include "stableheat/sigma.hpp"
#include "stableheat/simulate.hpp"

namespace stableheat {

/// One sectioned text config drives every subcommand; sections are optional
/// per subcommand. The hash covers the canonicalized semantic fields only
/// (whitespace, ordering, the output section and thread caps do not change
/// it), so chained experiments can assert they share exact parameters.
struct RunConfig {
  GeneratorSpec op;
  double radius = 1.0;
  int n = 127;

  CorrelationModel noise;
  SigmaFunction sigma;
  InitialCondition u0;

  double xi = 1.0;
  double dt = 1e-3;
  double horizon = 1.0;
  int paths = 1000;
  std::uint64_t seed = 42;
  std::vector<double> record_times;       // default: 10 even times over the horizon
  std::vector<int> moment_orders{2, 4};

  double epsilon = 0.2;
  std::string method = "oracle";  // oracle | monte-carlo
  std::vector<double> xi_values;
  bool bisect = true;
  double bracket_width = 0.1;
  int sweep_order = 2;
  std::string lemma = "L21";
  std::vector<double> lemma_betas;           // absolute rates
  std::vector<double> lemma_betas_over_mu1;  // resolved against mu1 at run time
  std::vector<double> points{0.0};           // positions for lemma checks
  double laplace_beta = 1.0;

  std::string out_dir = "out";
  bool write_eigenvectors = false;
  int threads = 0;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);

  DomainGrid make_grid() const;
  SimulationConfig simulation() const;

  /// Record times, defaulting to 10 evenly spaced times over the horizon.
  std::vector<double> effective_record_times() const;

  /// Canonical key=value dump of the semantic fields, fixed order.
  std::string canonical_text() const;

  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace stableheat
