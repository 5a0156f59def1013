#pragma once

#include <string>

#include "stableheat/operators.hpp"  // ValidationReport

namespace stableheat {

/// Multiplicative nonlinearity with declared bounds l |x| <= |sigma(x)| <= L |x|.
///   Linear             sigma(x) = c x,                       l = L = |c|
///   SaturatingLinear   sigma(x) = c x (1 + s x^2 / (1+x^2)), l = c, L = c (1+s)
struct SigmaFunction {
  enum class Kind { Linear, SaturatingLinear };

  Kind kind = Kind::Linear;
  double c = 1.0;
  double s = 0.0;

  static SigmaFunction linear(double c);                    // any c; c = 0 fails validation
  static SigmaFunction saturating(double c, double s);      // c > 0, 0 <= s < 1

  double operator()(double x) const;
  double lower() const;  // declared l
  double upper() const;  // declared L

  std::string kind_name() const;
  std::string label() const;
};

/// Checks the two-sided ratio bound on a log-spaced grid x in +-[1e-6, 1e6]
/// and a difference-quotient (Lipschitz) bound on adjacent pairs. Failing
/// checks carry the witness x in the note.
ValidationReport validate_sigma(const SigmaFunction& sigma);

/// validate_sigma, throwing ValidationError with the witness on failure.
void require_valid_sigma(const SigmaFunction& sigma);

}  // namespace stableheat
