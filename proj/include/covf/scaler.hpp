#pragma once

#include <span>
#include <string>

namespace covf {

enum class ScalerKind { minmax, sqrt_minmax, log_minmax };

std::string to_string(ScalerKind k);
ScalerKind scaler_kind_from_string(const std::string& s);

// Min-max normalization after an optional domain transform (sqrt or log).
// min/max live in the transformed domain; fitted jointly over all cities so
// the mapping is city independent.
struct Scaler {
  ScalerKind kind = ScalerKind::minmax;
  double min = 0.0;
  double max = 1.0;

  static Scaler fit(ScalerKind kind, std::span<const double> values);

  double transform(double x) const;
  double invert(double y) const;
};

}  // namespace covf
