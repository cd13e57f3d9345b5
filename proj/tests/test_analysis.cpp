#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "covf/analysis.hpp"
#include "covf/csv.hpp"
#include "covf/rng.hpp"
#include "oracles.hpp"

using namespace covf;

namespace {

// small dataset with observed raw daily series and a matching normalized view
Dataset analysis_dataset(std::size_t n_cities = 4, std::size_t days = 20) {
  Dataset d;
  d.cases_scaler = {ScalerKind::sqrt_minmax, 0.0, 10.0};
  d.deaths_scaler = {ScalerKind::sqrt_minmax, 0.0, 4.0};
  d.factor_names = {"A", "B", "Flat"};
  d.covariates_raw = Matrix(n_cities, 3);
  d.covariates_norm = Matrix(n_cities, 3);
  for (std::size_t c = 0; c < n_cities; ++c) {
    d.cities.push_back({"m" + std::to_string(c), "", 900.0 + 50.0 * static_cast<double>(c)});
    Matrix daily(days, 2), norm(days, 2);
    for (std::size_t t = 0; t < days; ++t) {
      daily(t, 0) = static_cast<double>((c + 1) * (t % 7));
      daily(t, 1) = static_cast<double>(c + (t % 3));
      norm(t, 0) = d.cases_scaler.transform(daily(t, 0));
      norm(t, 1) = d.deaths_scaler.transform(daily(t, 1));
    }
    d.series_daily.push_back(daily);
    d.series_norm.push_back(norm);
    d.covariates_raw(c, 0) = 1.0 + static_cast<double>(c);
    d.covariates_raw(c, 1) = 10.0 - 2.0 * static_cast<double>(c * c);
    d.covariates_raw(c, 2) = 5.0;  // zero variance
  }
  d.covariates_norm = d.covariates_raw;
  return d;
}

ForecastModel fitted_model(std::size_t n_cov = 0, std::uint64_t seed = 5) {
  ModelConfig cfg;
  cfg.n_covariates = n_cov;
  cfg.input_len = 3;
  cfg.seed = seed;
  ForecastModel m = build_model(cfg);
  m.fitted = true;
  return m;
}

}  // namespace

TEST_CASE("pearson basics") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  double r = 0.0;
  REQUIRE(pearson(x, x, r));
  CHECK(r == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 3.0);
  REQUIRE(pearson(x, y, r));
  CHECK(r == doctest::Approx(1.0).epsilon(1e-15));

  for (std::size_t i = 0; i < y.size(); ++i) y[i] = -x[i];
  REQUIRE(pearson(x, y, r));
  CHECK(r == doctest::Approx(-1.0).epsilon(1e-15));

  std::vector<double> flat(5, 2.0);
  CHECK_FALSE(pearson(x, flat, r));
}

TEST_CASE("pearson agrees with the textbook formula on random samples") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = rng.uniform(-5, 5);
    for (auto& v : y) v = rng.uniform(-5, 5);
    double r = 0.0;
    REQUIRE(pearson(x, y, r));
    CHECK(r == doctest::Approx(oracle::pearson_reference(x, y)).epsilon(1e-12));
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("covariate correlation matrix on a 4-city hand dataset") {
  CovariateTable table;
  table.factors = {"A", "B", "C"};
  table.by_fips["01001"] = {1.0, 2.0, 0.5};
  table.by_fips["01002"] = {2.0, 4.1, 0.4};
  table.by_fips["01003"] = {3.0, 5.9, 0.9};
  table.by_fips["01004"] = {4.0, 8.0, 0.1};

  CorrelationMatrix m = covariate_correlation(table, {});
  REQUIRE(m.factors.size() == 3);
  std::vector<std::vector<double>> cols(3, std::vector<double>(4));
  std::size_t i = 0;
  for (const auto& [fips, row] : table.by_fips) {
    for (std::size_t j = 0; j < 3; ++j) cols[j][i] = row[j];
    ++i;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(m.r(a, a) == 1.0);
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(m.r(a, b) == m.r(b, a));
      CHECK(m.r(a, b) >= -1.0);
      CHECK(m.r(a, b) <= 1.0);
      if (a != b)
        CHECK(m.r(a, b) ==
              doctest::Approx(oracle::pearson_reference(cols[a], cols[b])).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-variance factors are flagged instead of poisoning the matrix") {
  Matrix values(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    values(i, 0) = static_cast<double>(i);
    values(i, 1) = 7.0;
  }
  CorrelationMatrix m = covariate_correlation(values, {"live", "flat"});
  CHECK(m.defined[0]);
  CHECK_FALSE(m.defined[1]);
  CHECK(m.entry_defined(0, 0));
  CHECK_FALSE(m.entry_defined(0, 1));
  CHECK(m.r(0, 0) == 1.0);
  for (const double v : m.r.v) CHECK(std::isfinite(v));
}

TEST_CASE("covariate correlation requires at least 3 cities") {
  Matrix values(2, 2);
  CHECK_THROWS_AS(covariate_correlation(values, {"a", "b"}), std::invalid_argument);
}

TEST_CASE("max_bivariate picks per-capita peaks") {
  Dataset d;
  d.factor_names = {"F"};
  d.covariates_raw = Matrix(3, 1);
  d.covariates_norm = Matrix(3, 1);
  d.cities = {{"x", "", 1000.0}, {"y", "", 500.0}, {"z", "", 100.0}};
  d.series_daily.push_back(Matrix(3, 2));
  d.series_daily[0](0, 0) = 1.0;
  d.series_daily[0](1, 0) = 5.0;
  d.series_daily[0](2, 0) = 3.0;
  d.series_daily.push_back(Matrix(3, 2));  // all zeros
  d.series_daily.push_back(Matrix(3, 2));  // monotone increasing
  for (std::size_t t = 0; t < 3; ++t) {
    d.series_daily[2](t, 0) = static_cast<double>(t + 1);
    d.series_daily[2](t, 1) = 0.5 * static_cast<double>(t);
  }
  d.covariates_raw(0, 0) = 0.25;

  auto pts = max_bivariate(d, "F");
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].peak_cases_pc == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(pts[0].covariate == 0.25);
  CHECK(pts[1].peak_cases_pc == 0.0);
  CHECK(pts[1].peak_deaths_pc == 0.0);
  CHECK(pts[2].peak_cases_pc == doctest::Approx(3.0 / 100.0).epsilon(1e-15));
  CHECK(pts[2].peak_deaths_pc == doctest::Approx(1.0 / 100.0).epsilon(1e-15));

  // brute-force agreement on the hand data
  for (const auto& p : pts) CHECK(p.peak_cases_pc >= 0.0);
}

TEST_CASE("period_correlation validates its inputs") {
  Dataset d = analysis_dataset();
  ForecastModel m = fitted_model();
  ForecastModel unfitted = build_model(m.config);
  CHECK_THROWS_AS(period_correlation(unfitted, {}, d, {"A"}), std::logic_error);
  CHECK_THROWS_AS(period_correlation(m, {"A"}, d, {"A"}), std::invalid_argument);
  PeriodSpec empty;
  empty.now_days = 0;
  CHECK_THROWS_AS(period_correlation(m, {}, d, {"A"}, empty), std::invalid_argument);
  PeriodSpec too_long;
  too_long.future_days = kForecastDays + 1;
  CHECK_THROWS_AS(period_correlation(m, {}, d, {"A"}, too_long), std::invalid_argument);
  PeriodSpec eats_all;
  eats_all.now_days = 20;  // as long as the observed series
  CHECK_THROWS_AS(period_correlation(m, {}, d, {"A"}, eats_all), std::invalid_argument);
}

TEST_CASE("period_correlation recovers an exactly matching covariate") {
  Dataset d = analysis_dataset();
  // overwrite factor A with the hand-computed past-period city vector
  const std::size_t n_days = d.series_daily[0].rows;
  const std::size_t past_end = n_days - 14;
  for (std::size_t c = 0; c < d.cities.size(); ++c) {
    double s = 0.0;
    for (std::size_t t = 0; t < past_end; ++t)
      s += std::sqrt(d.series_daily[c](t, 0)) / std::sqrt(d.cities[c].population);
    d.covariates_raw(c, 0) = s / static_cast<double>(past_end);
  }
  ForecastModel m = fitted_model();
  PeriodCorrelation pc = period_correlation(m, {}, d, {"A", "Flat"});
  REQUIRE(pc.factors.size() == 2);
  REQUIRE(pc.defined[0][0]);
  CHECK(pc.r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  // zero-variance covariate row is undefined everywhere
  for (std::size_t col = 0; col < 6; ++col) CHECK_FALSE(pc.defined[1][col]);
  // every defined coefficient is a valid correlation
  for (std::size_t col = 0; col < 6; ++col)
    if (pc.defined[0][col]) {
      CHECK(pc.r(0, col) >= -1.0);
      CHECK(pc.r(0, col) <= 1.0);
    }
}

TEST_CASE("period_correlation is invariant under positive affine covariate rescaling") {
  Dataset d = analysis_dataset();
  ForecastModel m = fitted_model();
  PeriodCorrelation base = period_correlation(m, {}, d, {"A", "B"});
  for (std::size_t c = 0; c < d.cities.size(); ++c) {
    d.covariates_raw(c, 0) = 3.5 * d.covariates_raw(c, 0) - 11.0;
    d.covariates_raw(c, 1) = 0.25 * d.covariates_raw(c, 1) + 2.0;
  }
  PeriodCorrelation scaled = period_correlation(m, {}, d, {"A", "B"});
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t col = 0; col < 6; ++col) {
      REQUIRE(base.defined[f][col] == scaled.defined[f][col]);
      if (base.defined[f][col])
        CHECK(scaled.r(f, col) == doctest::Approx(base.r(f, col)).epsilon(1e-12));
    }
}

TEST_CASE("near-independent noise covariates correlate weakly") {
  Rng rng(123);
  Dataset d = analysis_dataset(60, 25);
  d.covariates_raw = Matrix(60, 3);
  for (std::size_t c = 0; c < 60; ++c) {
    d.covariates_raw(c, 0) = rng.uniform(-1, 1);
    d.covariates_raw(c, 1) = rng.uniform(-1, 1);
    d.covariates_raw(c, 2) = 5.0;
  }
  d.covariates_norm = d.covariates_raw;
  ForecastModel m = fitted_model();
  PeriodCorrelation pc = period_correlation(m, {}, d, {"A", "B"});
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t col = 0; col < 6; ++col)
      if (pc.defined[f][col]) CHECK(std::fabs(pc.r(f, col)) < 0.35);
}

TEST_CASE("fitted-everywhere mode runs and stays within correlation bounds") {
  Dataset d = analysis_dataset();
  ForecastModel m = fitted_model();
  PeriodCorrelation pc = period_correlation(m, {}, d, {"A", "B"}, {}, true);
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t col = 0; col < 6; ++col)
      if (pc.defined[f][col]) {
        CHECK(pc.r(f, col) >= -1.0);
        CHECK(pc.r(f, col) <= 1.0);
      }
}

TEST_CASE("analysis CSV exports") {
  Dataset d = analysis_dataset();
  ForecastModel m = fitted_model();

  CorrelationMatrix cm = covariate_correlation(d.covariates_raw, d.factor_names);
  write_correlation_matrix_csv("test_corr.csv", cm);
  CsvTable corr = read_csv("test_corr.csv");
  CHECK(corr.header == d.factor_names);
  REQUIRE(corr.rows.size() == 3);
  CHECK(corr.rows[0][0] == "1");
  CHECK(corr.rows[2][2] == "NA");  // zero-variance factor

  auto pts = max_bivariate(d, "A");
  write_bivariate_csv("test_biv.csv", pts);
  CsvTable biv = read_csv("test_biv.csv");
  CHECK(biv.header == std::vector<std::string>{"fips", "covariate", "peak_cases_pc",
                                               "peak_deaths_pc"});
  CHECK(biv.rows.size() == d.cities.size());

  PeriodCorrelation pc = period_correlation(m, {}, d, d.factor_names);
  write_period_correlation_csv("test_period.csv", pc);
  CsvTable per = read_csv("test_period.csv");
  CHECK(per.header ==
        std::vector<std::string>{"factor", "past_case", "now_case", "future_case", "past_death",
                                 "now_death", "future_death"});
  CHECK(per.rows.size() == 3);
  CHECK(per.rows[2][1] == "NA");

  write_pairplot_csv("test_pairs.csv", d, d.factor_names);
  CsvTable pairs = read_csv("test_pairs.csv");
  CHECK(pairs.header.size() == 4);
  CHECK(pairs.rows.size() == d.cities.size());

  for (const char* f : {"test_corr.csv", "test_biv.csv", "test_period.csv", "test_pairs.csv"})
    std::remove(f);
}
