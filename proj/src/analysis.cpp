#include "covf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "covf/csv.hpp"

namespace covf {

bool pearson(std::span<const double> x, std::span<const double> y, double& r) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two equally sized samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return false;
  r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return true;
}

CorrelationMatrix covariate_correlation(const Matrix& values,
                                        const std::vector<std::string>& names) {
  if (values.cols != names.size())
    throw std::invalid_argument("correlation: name/column count mismatch");
  if (values.rows < 3) throw std::invalid_argument("correlation: need at least 3 cities");

  CorrelationMatrix m;
  m.factors = names;
  m.r = Matrix(names.size(), names.size());
  m.defined.assign(names.size(), true);

  std::vector<Vec> cols(names.size(), Vec(values.rows));
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (std::size_t i = 0; i < values.rows; ++i) cols[j][i] = values(i, j);
    double dummy = 0.0;
    m.defined[j] = pearson(cols[j], cols[j], dummy);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    m.r(i, i) = m.defined[i] ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      double r = 0.0;
      if (m.defined[i] && m.defined[j]) pearson(cols[i], cols[j], r);
      m.r(i, j) = r;
      m.r(j, i) = r;
    }
  }
  return m;
}

CorrelationMatrix covariate_correlation(const CovariateTable& table,
                                        const std::vector<std::string>& subset) {
  const std::vector<std::string>& names = subset.empty() ? table.factors : subset;
  Matrix values(table.by_fips.size(), names.size());
  std::size_t i = 0;
  for (const auto& [fips, row] : table.by_fips) {
    for (std::size_t j = 0; j < names.size(); ++j)
      values(i, j) = row[table.factor_index(names[j])];
    ++i;
  }
  return covariate_correlation(values, names);
}

std::vector<BivariatePoint> max_bivariate(const Dataset& dataset, const std::string& factor) {
  const std::size_t j = dataset.factor_index(factor);
  std::vector<BivariatePoint> out;
  for (std::size_t c = 0; c < dataset.cities.size(); ++c) {
    BivariatePoint p;
    p.fips = dataset.cities[c].metro_id;
    p.covariate = dataset.covariates_raw(c, j);
    const Matrix& daily = dataset.series_daily[c];
    double peak_cases = 0.0, peak_deaths = 0.0;
    for (std::size_t t = 0; t < daily.rows; ++t) {
      peak_cases = std::max(peak_cases, daily(t, 0));
      peak_deaths = std::max(peak_deaths, daily(t, 1));
    }
    const double pop = dataset.cities[c].population;
    if (pop <= 0.0) throw std::invalid_argument("bivariate: city with non-positive population");
    p.peak_cases_pc = peak_cases / pop;
    p.peak_deaths_pc = peak_deaths / pop;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double period_mean(std::span<const double> values, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t t = begin; t < end; ++t) s += values[t];
  return s / static_cast<double>(end - begin);
}

}  // namespace

PeriodCorrelation period_correlation(const ForecastModel& model,
                                     const std::vector<std::string>& model_factors,
                                     const Dataset& dataset,
                                     const std::vector<std::string>& corr_factors,
                                     const PeriodSpec& periods, bool fitted_everywhere) {
  if (!model.fitted) throw std::logic_error("period: model is not fitted");
  if (model_factors.size() != model.config.n_covariates)
    throw std::invalid_argument("period: model factor list does not match the model width");
  if (periods.now_days == 0 || periods.future_days == 0)
    throw std::invalid_argument("period: empty period");
  if (periods.future_days > kForecastDays)
    throw std::invalid_argument("period: future period exceeds the forecast horizon");
  const std::size_t n_cities = dataset.cities.size();
  if (n_cities < 3) throw std::invalid_argument("period: need at least 3 cities");
  const std::size_t n_days = dataset.series_daily.front().rows;
  if (n_days <= periods.now_days) throw std::invalid_argument("period: past period is empty");

  const std::size_t L = model.config.input_len;
  // six city vectors: the period means of sqrt(daily)/sqrt(population)
  std::array<Vec, 6> city_vec;
  for (auto& v : city_vec) v.assign(n_cities, 0.0);

  for (std::size_t c = 0; c < n_cities; ++c) {
    const double pop = dataset.cities[c].population;
    if (pop <= 0.0) throw std::invalid_argument("period: city with non-positive population");
    const double pop_sqrt = std::sqrt(pop);

    Vec cov(model_factors.size());
    for (std::size_t j = 0; j < model_factors.size(); ++j)
      cov[j] = dataset.covariates_norm(c, dataset.factor_index(model_factors[j]));

    Matrix obs(n_days, 2);  // sqrt-domain per-capita daily values
    const Matrix& daily = dataset.series_daily[c];
    for (std::size_t t = 0; t < n_days; ++t)
      for (std::size_t col = 0; col < 2; ++col)
        obs(t, col) = std::sqrt(std::max(0.0, daily(t, col))) / pop_sqrt;

    if (fitted_everywhere) {
      // replace observed values with one-step predictions wherever a full
      // input window precedes the day
      const Matrix& norm = dataset.series_norm[c];
      for (std::size_t t = L; t < n_days; ++t) {
        Matrix hist(t, 2);
        for (std::size_t u = 0; u < t; ++u)
          for (std::size_t col = 0; col < 2; ++col) hist(u, col) = norm(u, col);
        Vec out = predict(model, hist, cov, dataset.cases_scaler, dataset.deaths_scaler);
        obs(t, 0) = std::sqrt(std::max(0.0, out[0])) / pop_sqrt;
        obs(t, 1) = std::sqrt(std::max(0.0, out[1])) / pop_sqrt;
      }
    }

    const std::size_t now_begin = n_days - periods.now_days;
    Vec col_cases(n_days), col_deaths(n_days);
    for (std::size_t t = 0; t < n_days; ++t) {
      col_cases[t] = obs(t, 0);
      col_deaths[t] = obs(t, 1);
    }
    city_vec[0][c] = period_mean(col_cases, 0, now_begin);
    city_vec[1][c] = period_mean(col_cases, now_begin, n_days);
    city_vec[3][c] = period_mean(col_deaths, 0, now_begin);
    city_vec[4][c] = period_mean(col_deaths, now_begin, n_days);

    Vec fut = predict(model, dataset.series_norm[c], cov, dataset.cases_scaler,
                      dataset.deaths_scaler);
    double fc = 0.0, fd = 0.0;
    for (std::size_t d = 0; d < periods.future_days; ++d) {
      fc += std::sqrt(std::max(0.0, fut[2 * d])) / pop_sqrt;
      fd += std::sqrt(std::max(0.0, fut[2 * d + 1])) / pop_sqrt;
    }
    city_vec[2][c] = fc / static_cast<double>(periods.future_days);
    city_vec[5][c] = fd / static_cast<double>(periods.future_days);
  }

  PeriodCorrelation pc;
  pc.factors = corr_factors;
  pc.r = Matrix(corr_factors.size(), 6);
  pc.defined.assign(corr_factors.size(), {});
  for (std::size_t f = 0; f < corr_factors.size(); ++f) {
    Vec x(n_cities);
    const std::size_t j = dataset.factor_index(corr_factors[f]);
    for (std::size_t c = 0; c < n_cities; ++c) x[c] = dataset.covariates_raw(c, j);
    for (std::size_t col = 0; col < 6; ++col) {
      double r = 0.0;
      pc.defined[f][col] = pearson(x, city_vec[col], r);
      pc.r(f, col) = pc.defined[f][col] ? r : 0.0;
    }
  }
  return pc;
}

void write_correlation_matrix_csv(const std::string& path, const CorrelationMatrix& m) {
  CsvTable t;
  t.header = m.factors;
  for (std::size_t i = 0; i < m.factors.size(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < m.factors.size(); ++j)
      row.push_back(m.entry_defined(i, j) ? format_double(m.r(i, j)) : "NA");
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_pairplot_csv(const std::string& path, const Dataset& dataset,
                        const std::vector<std::string>& factors) {
  CsvTable t;
  t.header.push_back("fips");
  for (const auto& f : factors) t.header.push_back(f);
  for (std::size_t c = 0; c < dataset.cities.size(); ++c) {
    std::vector<std::string> row = {dataset.cities[c].metro_id};
    for (const auto& f : factors)
      row.push_back(format_double(dataset.covariates_raw(c, dataset.factor_index(f))));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_bivariate_csv(const std::string& path, std::span<const BivariatePoint> points) {
  CsvTable t;
  t.header = {"fips", "covariate", "peak_cases_pc", "peak_deaths_pc"};
  for (const BivariatePoint& p : points)
    t.rows.push_back({p.fips, format_double(p.covariate), format_double(p.peak_cases_pc),
                      format_double(p.peak_deaths_pc)});
  write_csv(path, t);
}

void write_period_correlation_csv(const std::string& path, const PeriodCorrelation& pc) {
  CsvTable t;
  t.header.push_back("factor");
  for (const char* c : PeriodCorrelation::kColumns) t.header.emplace_back(c);
  for (std::size_t f = 0; f < pc.factors.size(); ++f) {
    std::vector<std::string> row = {pc.factors[f]};
    for (std::size_t col = 0; col < 6; ++col)
      row.push_back(pc.defined[f][col] ? format_double(pc.r(f, col)) : "NA");
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

}  // namespace covf
