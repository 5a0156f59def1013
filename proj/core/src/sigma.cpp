#include "stableheat/sigma.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "stableheat/errors.hpp"

namespace stableheat {

SigmaFunction SigmaFunction::linear(double c) {
  SigmaFunction f;
  f.kind = Kind::Linear;
  f.c = c;
  return f;
}

SigmaFunction SigmaFunction::saturating(double c, double s) {
  if (!(c > 0.0))
    throw ValidationError("saturating sigma needs c > 0, got c=" + std::to_string(c));
  if (!(s >= 0.0 && s < 1.0))
    throw ValidationError("saturating sigma needs 0 <= s < 1, got s=" + std::to_string(s));
  SigmaFunction f;
  f.kind = Kind::SaturatingLinear;
  f.c = c;
  f.s = s;
  return f;
}

double SigmaFunction::operator()(double x) const {
  if (kind == Kind::Linear) return c * x;
  return c * x * (1.0 + s * x * x / (1.0 + x * x));
}

double SigmaFunction::lower() const { return kind == Kind::Linear ? std::abs(c) : c; }

double SigmaFunction::upper() const { return kind == Kind::Linear ? std::abs(c) : c * (1.0 + s); }

std::string SigmaFunction::kind_name() const {
  return kind == Kind::Linear ? "linear" : "saturating";
}

std::string SigmaFunction::label() const {
  std::ostringstream os;
  os << kind_name() << "(c=" << c;
  if (kind == Kind::SaturatingLinear) os << ", s=" << s;
  os << ")";
  return os.str();
}

ValidationReport validate_sigma(const SigmaFunction& sigma) {
  ValidationReport rep;
  const double l = sigma.lower();
  const double u = sigma.upper();

  CheckResult strict{"lower_constant_positive", l > 0.0, l, 0.0, ""};
  if (!strict.pass) strict.note = "l_sigma = 0 violates the strict lower bound";
  rep.checks.push_back(strict);

  // Log-spaced probe grid, both signs.
  std::vector<double> xs;
  for (int d = -60; d <= 60; ++d) xs.push_back(std::pow(10.0, d / 10.0));

  const double slack = 1e-12;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double max_quotient = 0.0;
  double lower_witness = 0.0, upper_witness = 0.0;
  bool lower_ok = true, upper_ok = true;

  for (double mag : xs) {
    for (double sign : {-1.0, 1.0}) {
      const double x = sign * mag;
      const double ratio = std::abs(sigma(x)) / std::abs(x);
      if (ratio < min_ratio) min_ratio = ratio;
      if (ratio > max_ratio) max_ratio = ratio;
      if (ratio < l * (1.0 - slack) && lower_ok) {
        lower_ok = false;
        lower_witness = x;
      }
      if (ratio > u * (1.0 + slack) && upper_ok) {
        upper_ok = false;
        upper_witness = x;
      }
    }
  }
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    const double q = std::abs(sigma(xs[i + 1]) - sigma(xs[i])) / (xs[i + 1] - xs[i]);
    max_quotient = std::max(max_quotient, q);
  }

  std::ostringstream lw, uw;
  lw << "witness x=" << lower_witness;
  uw << "witness x=" << upper_witness;
  rep.checks.push_back({"ratio_lower_bound", lower_ok, min_ratio, l, lower_ok ? "" : lw.str()});
  rep.checks.push_back({"ratio_upper_bound", upper_ok, max_ratio, u, upper_ok ? "" : uw.str()});

  // Lipschitz difference quotients stay bounded; for the saturating form the
  // sharp constant is c (1 + 9 s / 8).
  const double lip = sigma.kind == SigmaFunction::Kind::Linear
                         ? std::abs(sigma.c)
                         : sigma.c * (1.0 + 9.0 * sigma.s / 8.0);
  rep.checks.push_back({"lipschitz_quotient", max_quotient <= lip * (1.0 + 1e-9), max_quotient,
                        lip, ""});
  return rep;
}

void require_valid_sigma(const SigmaFunction& sigma) {
  const ValidationReport rep = validate_sigma(sigma);
  for (const CheckResult& c : rep.checks)
    if (!c.pass)
      throw ValidationError("invalid sigma " + sigma.label() + ": " + c.name +
                            (c.note.empty() ? "" : " (" + c.note + ")"));
}

}  // namespace stableheat
