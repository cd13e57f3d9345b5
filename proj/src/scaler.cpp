#include "covf/scaler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace covf {

std::string to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::minmax: return "minmax";
    case ScalerKind::sqrt_minmax: return "sqrt_minmax";
    case ScalerKind::log_minmax: return "log_minmax";
  }
  return "?";
}

ScalerKind scaler_kind_from_string(const std::string& s) {
  if (s == "minmax") return ScalerKind::minmax;
  if (s == "sqrt_minmax") return ScalerKind::sqrt_minmax;
  if (s == "log_minmax") return ScalerKind::log_minmax;
  throw std::invalid_argument("unknown scaler kind: " + s);
}

namespace {

double to_domain(ScalerKind k, double x) {
  switch (k) {
    case ScalerKind::minmax: return x;
    case ScalerKind::sqrt_minmax:
      if (x < 0.0) throw std::invalid_argument("sqrt_minmax scaler requires non-negative values");
      return std::sqrt(x);
    case ScalerKind::log_minmax:
      if (x <= 0.0) throw std::invalid_argument("log_minmax scaler requires positive values");
      return std::log(x);
  }
  throw std::logic_error("unknown scaler kind");
}

double from_domain(ScalerKind k, double z) {
  switch (k) {
    case ScalerKind::minmax: return z;
    case ScalerKind::sqrt_minmax: return z * z;
    case ScalerKind::log_minmax: return std::exp(z);
  }
  throw std::logic_error("unknown scaler kind");
}

}  // namespace

Scaler Scaler::fit(ScalerKind kind, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("scaler: no values to fit");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : values) {
    const double z = to_domain(kind, x);
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  if (lo == hi)
    throw std::invalid_argument("scaler: degenerate feature (min equals max in " +
                                to_string(kind) + " domain)");
  return Scaler{kind, lo, hi};
}

double Scaler::transform(double x) const {
  return (to_domain(kind, x) - min) / (max - min);
}

double Scaler::invert(double y) const {
  return from_domain(kind, min + y * (max - min));
}

}  // namespace covf
