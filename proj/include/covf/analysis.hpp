#pragma once

#include <array>
#include <span>

#include "covf/model.hpp"

namespace covf {

// Pearson coefficient; returns false (leaving r untouched) when either side
// has zero variance.
bool pearson(std::span<const double> x, std::span<const double> y, double& r);

struct CorrelationMatrix {
  std::vector<std::string> factors;
  Matrix r;                   // factors x factors, symmetric, unit diagonal
  std::vector<bool> defined;  // false when the factor has zero variance

  bool entry_defined(std::size_t i, std::size_t j) const { return defined[i] && defined[j]; }
};

// Pairwise Pearson coefficients of the selected factors across cities.
CorrelationMatrix covariate_correlation(const CovariateTable& table,
                                        const std::vector<std::string>& subset);
CorrelationMatrix covariate_correlation(const Matrix& values,
                                        const std::vector<std::string>& names);

struct BivariatePoint {
  std::string fips;  // metro id
  double covariate = 0.0;
  double peak_cases_pc = 0.0;  // peak daily value per capita
  double peak_deaths_pc = 0.0;
};

// Per-city peak daily values per capita, paired with one covariate.
std::vector<BivariatePoint> max_bivariate(const Dataset& dataset, const std::string& factor);

// Past = all observed days up to the final `now_days`; Now = the final
// observed `now_days`; Future = the next `future_days`, model-predicted.
struct PeriodSpec {
  std::size_t now_days = 14;
  std::size_t future_days = 14;
};

struct PeriodCorrelation {
  // column order matches the CSV export
  static constexpr std::array<const char*, 6> kColumns = {
      "past_case", "now_case", "future_case", "past_death", "now_death", "future_death"};

  std::vector<std::string> factors;
  Matrix r;  // factors x 6
  std::vector<std::array<bool, 6>> defined;
};

// Correlates each covariate's raw values against the per-city period means of
// sqrt(daily value) / sqrt(population). Past/Now use observed data and Future
// uses model predictions; `fitted_everywhere` switches Past/Now to one-step
// model predictions where a full input window exists.
PeriodCorrelation period_correlation(const ForecastModel& model,
                                     const std::vector<std::string>& model_factors,
                                     const Dataset& dataset,
                                     const std::vector<std::string>& corr_factors,
                                     const PeriodSpec& periods = {},
                                     bool fitted_everywhere = false);

// Square matrix, header = factor names, undefined entries written as NA.
void write_correlation_matrix_csv(const std::string& path, const CorrelationMatrix& m);
// Raw per-city factor values, one row per city (scatter/pairplot source data).
void write_pairplot_csv(const std::string& path, const Dataset& dataset,
                        const std::vector<std::string>& factors);
void write_bivariate_csv(const std::string& path, std::span<const BivariatePoint> points);
void write_period_correlation_csv(const std::string& path, const PeriodCorrelation& pc);

}  // namespace covf
