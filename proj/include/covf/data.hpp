#pragma once

#include <map>
#include <string>
#include <vector>

#include "covf/matrix.hpp"
#include "covf/scaler.hpp"

namespace covf {

// One row of timeseries.csv. Counts are cumulative; fips keeps its leading
// zeros. Dates are ISO-8601 YYYY-MM-DD.
struct TimeSeriesRecord {
  std::string fips;
  std::string date;
  long long cases_cum = 0;
  long long deaths_cum = 0;
};

// FIPS -> named risk-factor values, all factors present for every row.
struct CovariateTable {
  std::vector<std::string> factors;
  std::map<std::string, std::vector<double>> by_fips;  // values aligned with `factors`

  std::size_t factor_index(const std::string& name) const;
  double value(const std::string& fips, const std::string& factor) const;
};

struct MetroMember {
  std::string fips;
  double population = 0.0;
};

struct MetroArea {
  std::string id;
  std::string name;
  std::vector<MetroMember> members;

  double total_population() const;
};

enum class FactorClass { extensive, intensive, population };
enum class AggregationPolicy { weighted_mean, sum, weighted_median };

FactorClass factor_class_from_string(const std::string& s);
std::string to_string(FactorClass c);

// Classification of every known factor plus its metro aggregation policy.
// Ships with defaults for the full canonical vocabulary; a registry CSV can
// override or extend them.
class FactorRegistry {
 public:
  struct Entry {
    FactorClass cls = FactorClass::intensive;
    AggregationPolicy agg = AggregationPolicy::weighted_mean;
  };

  static FactorRegistry defaults();

  void set(const std::string& factor, Entry e) { entries_[factor] = e; }
  const Entry& lookup(const std::string& factor) const;  // throws on unclassified names
  bool contains(const std::string& factor) const { return entries_.count(factor) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

// The 33 sweep factors (Nones excluded), in canonical order.
const std::vector<std::string>& sweep_factor_names();
// Analysis-only covariates on top of the sweep vocabulary.
const std::vector<std::string>& analysis_only_factor_names();
// Factors describing health measurements (the health-only correlation subset).
const std::vector<std::string>& health_factor_names();

struct City {
  std::string metro_id;
  std::string name;
  double population = 0.0;
};

// Model-ready, normalized view of the corpus. Immutable once built.
struct Dataset {
  std::vector<City> cities;
  std::vector<std::string> dates;  // shared axis
  std::vector<Matrix> series_norm;   // per city: days × 2, normalized [cases, deaths]
  std::vector<Matrix> series_daily;  // per city: days × 2, raw daily counts
  std::vector<std::string> factor_names;
  Matrix covariates_norm;  // cities × k
  Matrix covariates_raw;   // cities × k
  Scaler cases_scaler;
  Scaler deaths_scaler;
  std::map<std::string, Scaler> covariate_scalers;

  std::size_t city_index(const std::string& metro_id) const;
  std::size_t factor_index(const std::string& name) const;
};

// Covariate fusion: (a) constant per-step features, (b) scaled each step by
// the mean of the two series values.
enum class FusionMode { constant, series_scaled };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode m);

inline constexpr std::size_t kForecastDays = 15;   // next day plus 14 more
inline constexpr std::size_t kTargetWidth = 30;    // kForecastDays × 2, interleaved

// Sliding-window tensors. Targets are interleaved
// [cases_{t+1}, deaths_{t+1}, ..., cases_{t+15}, deaths_{t+15}]; mask false
// where the target day falls beyond the last observed date.
struct WindowedSamples {
  std::size_t input_len = 0;
  std::size_t feature_width = 0;  // 2 + selected covariates
  std::vector<Matrix> inputs;     // per sample: input_len × feature_width
  Matrix targets;                 // samples × 30
  std::vector<std::vector<bool>> mask;  // samples × 30
  struct Provenance {
    std::size_t city = 0;
    std::size_t start = 0;
  };
  std::vector<Provenance> provenance;

  std::size_t size() const { return inputs.size(); }
};

}  // namespace covf
