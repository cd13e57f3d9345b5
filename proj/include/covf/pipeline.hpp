#pragma once

#include <span>

#include "covf/csv.hpp"
#include "covf/data.hpp"

namespace covf {

struct MonotonicViolation {
  std::string fips;
  std::string date;
  std::string field;  // "cases" or "deaths"
  long long value = 0;
  long long previous = 0;
};

struct ValidationReport {
  std::vector<MonotonicViolation> violations;
  bool valid() const { return violations.empty(); }
};

// Flags every cumulative decrease. Records must be sorted by date within each
// fips; throws on unsorted input.
ValidationReport validate_monotonic(std::span<const TimeSeriesRecord> records);

enum class RepairPolicy { reject, clamp };

// Metro covariate vector aligned with table.factors. Weighted mean for
// intensive factors, plain sum for extensive counts, population-weighted
// median where the registry says so.
Vec aggregate_metro(const MetroArea& metro, const CovariateTable& table,
                    const FactorRegistry& registry);

// First element kept as-is, then first differences. Throws on a decrease.
Vec cumulative_to_daily(std::span<const double> cum);

// sqrt-domain min-max over the joint value pool of all cities.
Scaler fit_value_scaler(std::span<const double> daily_values);

struct NormalizedCovariates {
  Matrix values;  // cities × k, all in [0,1]
  std::map<std::string, Scaler> scalers;
};

// extensive -> per-capita then min-max; population -> log then min-max;
// intensive -> min-max.
NormalizedCovariates normalize_covariates(const Matrix& raw,
                                          const std::vector<std::string>& factor_names,
                                          const FactorRegistry& registry,
                                          std::span<const double> populations);

struct IngestOptions {
  RepairPolicy repair = RepairPolicy::reject;
};

struct IngestReport {
  ValidationReport validation;
  std::vector<std::pair<std::string, std::string>> rejected;  // metro id -> reason
  std::vector<std::string> warnings;
};

// Full ingest: validate per-county series, aggregate counties into metros,
// difference to daily values, fit city-independent scalers, normalize
// covariates.
Dataset build_dataset(std::span<const TimeSeriesRecord> records, const CovariateTable& covariates,
                      std::span<const MetroArea> metros, const FactorRegistry& registry,
                      const IngestOptions& options = {}, IngestReport* report = nullptr);

WindowedSamples window_samples(const Dataset& dataset, std::size_t input_len,
                               const std::vector<std::string>& factors, FusionMode mode,
                               std::vector<std::string>* warnings = nullptr);

// CSV front ends for the four input files.
std::vector<TimeSeriesRecord> parse_timeseries_csv(const CsvTable& t);
CovariateTable parse_covariates_csv(const CsvTable& t);
std::vector<MetroArea> parse_metro_csv(const CsvTable& t);
FactorRegistry parse_factor_registry_csv(const CsvTable& t);  // merged over defaults

// Dataset container on disk (JSON).
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

}  // namespace covf
