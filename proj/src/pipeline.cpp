#include "covf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

namespace covf {

namespace {

// Howard Hinnant's civil-date algorithm; days since 1970-01-01.
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

long parse_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw std::runtime_error("invalid ISO date: '" + iso + "'");
  const int y = std::stoi(iso.substr(0, 4));
  const int m = std::stoi(iso.substr(5, 2));
  const int d = std::stoi(iso.substr(8, 2));
  return days_from_civil(y, m, d);
}

std::string format_date(long days) {
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

}  // namespace

ValidationReport validate_monotonic(std::span<const TimeSeriesRecord> records) {
  ValidationReport report;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& prev = records[i - 1];
    const auto& cur = records[i];
    if (cur.fips != prev.fips) continue;
    if (cur.date <= prev.date)
      throw std::invalid_argument("validate_monotonic: records for fips " + cur.fips +
                                  " not sorted by date at " + cur.date);
    if (cur.cases_cum < prev.cases_cum)
      report.violations.push_back({cur.fips, cur.date, "cases", cur.cases_cum, prev.cases_cum});
    if (cur.deaths_cum < prev.deaths_cum)
      report.violations.push_back({cur.fips, cur.date, "deaths", cur.deaths_cum, prev.deaths_cum});
  }
  return report;
}

Vec aggregate_metro(const MetroArea& metro, const CovariateTable& table,
                    const FactorRegistry& registry) {
  if (metro.members.empty())
    throw std::invalid_argument("aggregate_metro: metro " + metro.id + " has no members");
  std::string missing;
  for (const auto& m : metro.members)
    if (!table.by_fips.count(m.fips)) missing += (missing.empty() ? "" : ", ") + m.fips;
  if (!missing.empty())
    throw std::invalid_argument("aggregate_metro: metro " + metro.id +
                                " member fips missing from covariate table: " + missing);

  const double total_pop = metro.total_population();
  Vec out(table.factors.size(), 0.0);
  for (std::size_t j = 0; j < table.factors.size(); ++j) {
    const auto& entry = registry.lookup(table.factors[j]);
    switch (entry.agg) {
      case AggregationPolicy::sum: {
        double acc = 0.0;
        for (const auto& m : metro.members) acc += table.by_fips.at(m.fips)[j];
        out[j] = acc;
        break;
      }
      case AggregationPolicy::weighted_mean: {
        double acc = 0.0;
        for (const auto& m : metro.members)
          acc += m.population * table.by_fips.at(m.fips)[j];
        out[j] = acc / total_pop;
        break;
      }
      case AggregationPolicy::weighted_median: {
        std::vector<std::pair<double, double>> vw;  // value, weight
        for (const auto& m : metro.members)
          vw.emplace_back(table.by_fips.at(m.fips)[j], m.population);
        std::sort(vw.begin(), vw.end());
        double cum = 0.0;
        for (const auto& [v, w] : vw) {
          cum += w;
          if (cum >= total_pop / 2.0) {
            out[j] = v;
            break;
          }
        }
        break;
      }
    }
  }
  return out;
}

Vec cumulative_to_daily(std::span<const double> cum) {
  Vec daily(cum.size());
  for (std::size_t t = 0; t < cum.size(); ++t) {
    const double prev = t == 0 ? 0.0 : cum[t - 1];
    if (cum[t] < prev)
      throw std::invalid_argument("cumulative_to_daily: decreasing input at index " +
                                  std::to_string(t) + " (validate first)");
    daily[t] = cum[t] - prev;
  }
  return daily;
}

Scaler fit_value_scaler(std::span<const double> daily_values) {
  return Scaler::fit(ScalerKind::sqrt_minmax, daily_values);
}

NormalizedCovariates normalize_covariates(const Matrix& raw,
                                          const std::vector<std::string>& factor_names,
                                          const FactorRegistry& registry,
                                          std::span<const double> populations) {
  require_dim(raw.cols == factor_names.size(), "covariate matrix width vs factor names");
  require_dim(raw.rows == populations.size(), "covariate matrix rows vs populations");
  NormalizedCovariates out;
  out.values = Matrix(raw.rows, raw.cols);
  for (std::size_t j = 0; j < raw.cols; ++j) {
    const auto& entry = registry.lookup(factor_names[j]);
    Vec domain(raw.rows);
    ScalerKind kind = ScalerKind::minmax;
    switch (entry.cls) {
      case FactorClass::extensive:
        for (std::size_t i = 0; i < raw.rows; ++i) domain[i] = raw(i, j) / populations[i];
        break;
      case FactorClass::population:
        for (std::size_t i = 0; i < raw.rows; ++i) domain[i] = raw(i, j);
        kind = ScalerKind::log_minmax;
        break;
      case FactorClass::intensive:
        for (std::size_t i = 0; i < raw.rows; ++i) domain[i] = raw(i, j);
        break;
    }
    Scaler s;
    try {
      s = Scaler::fit(kind, domain);
    } catch (const std::invalid_argument&) {
      // constant column: carries no information, maps to 0
      double z = domain.empty() ? 0.0 : domain[0];
      if (kind == ScalerKind::log_minmax) z = std::log(z);
      s = Scaler{kind, z, z + 1.0};
    }
    for (std::size_t i = 0; i < raw.rows; ++i) out.values(i, j) = s.transform(domain[i]);
    out.scalers[factor_names[j]] = s;
  }
  return out;
}

namespace {

struct MemberSeries {
  long first_day = 0;
  long last_day = 0;
  std::map<long, std::pair<long long, long long>> by_day;  // day -> (cases, deaths)
};

}  // namespace

Dataset build_dataset(std::span<const TimeSeriesRecord> records, const CovariateTable& covariates,
                      std::span<const MetroArea> metros, const FactorRegistry& registry,
                      const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;

  // per-county series grouped and validated
  std::map<std::string, std::vector<TimeSeriesRecord>> by_fips;
  for (const auto& r : records) by_fips[r.fips].push_back(r);
  std::set<std::string> dirty_fips;
  for (auto& [fips, recs] : by_fips) {
    auto v = validate_monotonic(recs);
    if (!v.valid()) {
      dirty_fips.insert(fips);
      rep.validation.violations.insert(rep.validation.violations.end(), v.violations.begin(),
                                       v.violations.end());
      if (options.repair == RepairPolicy::clamp) {
        for (std::size_t i = 1; i < recs.size(); ++i) {
          recs[i].cases_cum = std::max(recs[i].cases_cum, recs[i - 1].cases_cum);
          recs[i].deaths_cum = std::max(recs[i].deaths_cum, recs[i - 1].deaths_cum);
        }
      }
    }
  }

  struct MetroBuild {
    const MetroArea* metro;
    Vec covariates;
    long first_day, last_day;
    std::vector<MemberSeries> members;
  };
  std::vector<MetroBuild> kept;

  for (const auto& metro : metros) {
    auto reject = [&](const std::string& why) { rep.rejected.emplace_back(metro.id, why); };
    if (options.repair == RepairPolicy::reject) {
      std::string dirty;
      for (const auto& m : metro.members)
        if (dirty_fips.count(m.fips)) dirty += (dirty.empty() ? "" : ", ") + m.fips;
      if (!dirty.empty()) {
        reject("cumulative counts decrease for member fips " + dirty);
        continue;
      }
    }

    Vec cov;
    try {
      cov = aggregate_metro(metro, covariates, registry);
    } catch (const std::invalid_argument& e) {
      reject(e.what());
      continue;
    }

    std::vector<MemberSeries> members;
    bool gap = false;
    for (const auto& m : metro.members) {
      auto it = by_fips.find(m.fips);
      if (it == by_fips.end()) continue;  // member without a series contributes no counts
      MemberSeries ms;
      long prev = -1;
      for (const auto& r : it->second) {
        const long day = parse_date(r.date);
        if (prev >= 0 && day != prev + 1) gap = true;
        prev = day;
        ms.by_day[day] = {r.cases_cum, r.deaths_cum};
      }
      ms.first_day = ms.by_day.begin()->first;
      ms.last_day = ms.by_day.rbegin()->first;
      members.push_back(std::move(ms));
    }
    if (members.empty()) {
      reject("no member has a time series");
      continue;
    }
    if (gap) {
      reject("gap in daily series");
      continue;
    }
    long first = members.front().first_day, last = members.front().last_day;
    for (const auto& ms : members) {
      first = std::min(first, ms.first_day);
      last = std::max(last, ms.last_day);
    }
    kept.push_back({&metro, std::move(cov), first, last, std::move(members)});
  }

  if (kept.empty()) throw std::runtime_error("build_dataset: no metros survived validation");

  // shared date axis: intersection of the kept metros' ranges
  long start = kept.front().first_day, end = kept.front().last_day;
  for (const auto& k : kept) {
    start = std::max(start, k.first_day);
    end = std::min(end, k.last_day);
  }
  if (start > end) throw std::runtime_error("build_dataset: city date ranges do not overlap");
  const std::size_t n_days = static_cast<std::size_t>(end - start + 1);

  Dataset d;
  for (long day = start; day <= end; ++day) d.dates.push_back(format_date(day));

  std::vector<double> all_cases, all_deaths;
  for (const auto& k : kept) {
    City city{k.metro->id, k.metro->name, k.metro->total_population()};
    Vec cum_cases(n_days, 0.0), cum_deaths(n_days, 0.0);
    for (const auto& ms : k.members) {
      for (std::size_t t = 0; t < n_days; ++t) {
        const long day = start + static_cast<long>(t);
        if (day < ms.first_day) continue;  // zero before first report
        auto it = ms.by_day.find(std::min(day, ms.last_day));
        cum_cases[t] += static_cast<double>(it->second.first);
        cum_deaths[t] += static_cast<double>(it->second.second);
      }
    }
    Vec daily_cases = cumulative_to_daily(cum_cases);
    Vec daily_deaths = cumulative_to_daily(cum_deaths);
    Matrix daily(n_days, 2);
    for (std::size_t t = 0; t < n_days; ++t) {
      daily(t, 0) = daily_cases[t];
      daily(t, 1) = daily_deaths[t];
      all_cases.push_back(daily_cases[t]);
      all_deaths.push_back(daily_deaths[t]);
    }
    d.cities.push_back(std::move(city));
    d.series_daily.push_back(std::move(daily));
  }

  d.cases_scaler = fit_value_scaler(all_cases);
  d.deaths_scaler = fit_value_scaler(all_deaths);
  for (const auto& raw : d.series_daily) {
    Matrix norm(raw.rows, 2);
    for (std::size_t t = 0; t < raw.rows; ++t) {
      norm(t, 0) = d.cases_scaler.transform(raw(t, 0));
      norm(t, 1) = d.deaths_scaler.transform(raw(t, 1));
    }
    d.series_norm.push_back(std::move(norm));
  }

  d.factor_names = covariates.factors;
  d.covariates_raw = Matrix(kept.size(), covariates.factors.size());
  std::vector<double> populations;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < covariates.factors.size(); ++j)
      d.covariates_raw(i, j) = kept[i].covariates[j];
    populations.push_back(d.cities[i].population);
  }
  auto norm = normalize_covariates(d.covariates_raw, d.factor_names, registry, populations);
  d.covariates_norm = std::move(norm.values);
  d.covariate_scalers = std::move(norm.scalers);
  return d;
}

WindowedSamples window_samples(const Dataset& dataset, std::size_t input_len,
                               const std::vector<std::string>& factors, FusionMode mode,
                               std::vector<std::string>* warnings) {
  if (input_len < 1) throw std::invalid_argument("window_samples: input_len must be >= 1");
  std::vector<std::size_t> fidx;
  for (const auto& f : factors) fidx.push_back(dataset.factor_index(f));

  WindowedSamples ws;
  ws.input_len = input_len;
  ws.feature_width = 2 + fidx.size();

  struct Pending {
    std::size_t city, start;
  };
  std::vector<Pending> pending;
  for (std::size_t c = 0; c < dataset.cities.size(); ++c) {
    const std::size_t n = dataset.series_norm[c].rows;
    if (n < input_len + 1) {
      if (warnings)
        warnings->push_back("city " + dataset.cities[c].metro_id + " skipped: series length " +
                            std::to_string(n) + " < input_len+1");
      continue;
    }
    for (std::size_t i = 0; i + input_len <= n - 1; ++i) pending.push_back({c, i});
  }

  ws.targets = Matrix(pending.size(), kTargetWidth);
  ws.mask.assign(pending.size(), std::vector<bool>(kTargetWidth, false));
  for (std::size_t s = 0; s < pending.size(); ++s) {
    const auto [c, i] = pending[s];
    const Matrix& series = dataset.series_norm[c];
    const std::size_t n = series.rows;

    Matrix input(input_len, ws.feature_width);
    for (std::size_t t = 0; t < input_len; ++t) {
      const double cases = series(i + t, 0);
      const double deaths = series(i + t, 1);
      input(t, 0) = cases;
      input(t, 1) = deaths;
      const double scale = mode == FusionMode::constant ? 1.0 : 0.5 * (cases + deaths);
      for (std::size_t j = 0; j < fidx.size(); ++j)
        input(t, 2 + j) = dataset.covariates_norm(c, fidx[j]) * scale;
    }
    ws.inputs.push_back(std::move(input));

    for (std::size_t day = 0; day < kForecastDays; ++day) {
      const std::size_t target_day = i + input_len + day;
      if (target_day < n) {
        ws.targets(s, 2 * day) = series(target_day, 0);
        ws.targets(s, 2 * day + 1) = series(target_day, 1);
        ws.mask[s][2 * day] = true;
        ws.mask[s][2 * day + 1] = true;
      }
    }
    ws.provenance.push_back({c, i});
  }
  return ws;
}

std::vector<TimeSeriesRecord> parse_timeseries_csv(const CsvTable& t) {
  const std::size_t cf = t.column("fips"), cd = t.column("date");
  const std::size_t cc = t.column("cases_cum"), cdd = t.column("deaths_cum");
  std::vector<TimeSeriesRecord> out;
  for (const auto& row : t.rows) {
    TimeSeriesRecord r;
    r.fips = row[cf];
    if (r.fips.size() != 5)
      throw std::runtime_error("timeseries: fips '" + r.fips + "' is not 5 digits");
    r.date = row[cd];
    parse_date(r.date);  // format check
    r.cases_cum = std::stoll(row[cc]);
    r.deaths_cum = std::stoll(row[cdd]);
    if (r.cases_cum < 0 || r.deaths_cum < 0)
      throw std::runtime_error("timeseries: negative cumulative count for fips " + r.fips +
                               " on " + r.date);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.fips != b.fips ? a.fips < b.fips : a.date < b.date;
  });
  return out;
}

CovariateTable parse_covariates_csv(const CsvTable& t) {
  const std::size_t cf = t.column("fips");
  CovariateTable table;
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (j != cf) table.factors.push_back(t.header[j]);
  for (const auto& row : t.rows) {
    bool missing = false;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != cf && row[j].empty()) missing = true;
    if (missing) continue;  // row rejected
    std::vector<double> vals;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == cf) continue;
      const double v = std::stod(row[j]);
      if (!std::isfinite(v))
        throw std::runtime_error("covariates: non-finite value for fips " + row[cf]);
      vals.push_back(v);
    }
    table.by_fips[row[cf]] = std::move(vals);
  }
  return table;
}

std::vector<MetroArea> parse_metro_csv(const CsvTable& t) {
  const std::size_t ci = t.column("metro_id"), cn = t.column("name");
  const std::size_t cf = t.column("fips"), cp = t.column("population");
  std::vector<MetroArea> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    const std::string& id = row[ci];
    auto [it, fresh] = index.try_emplace(id, out.size());
    if (fresh) out.push_back({id, row[cn], {}});
    const double pop = std::stod(row[cp]);
    if (pop <= 0.0)
      throw std::runtime_error("metro: non-positive population for fips " + row[cf]);
    out[it->second].members.push_back({row[cf], pop});
  }
  return out;
}

FactorRegistry parse_factor_registry_csv(const CsvTable& t) {
  FactorRegistry r = FactorRegistry::defaults();
  const std::size_t cf = t.column("factor"), cc = t.column("class");
  const bool has_agg = t.has_column("agg");
  const std::size_t ca = has_agg ? t.column("agg") : 0;
  for (const auto& row : t.rows) {
    FactorRegistry::Entry e;
    e.cls = factor_class_from_string(row[cc]);
    e.agg = e.cls == FactorClass::extensive ? AggregationPolicy::sum
                                            : AggregationPolicy::weighted_mean;
    if (has_agg && !row[ca].empty()) {
      if (row[ca] == "sum")
        e.agg = AggregationPolicy::sum;
      else if (row[ca] == "mean")
        e.agg = AggregationPolicy::weighted_mean;
      else if (row[ca] == "median")
        e.agg = AggregationPolicy::weighted_median;
      else
        throw std::runtime_error("factor registry: unknown aggregation '" + row[ca] + "'");
    }
    r.set(row[cf], e);
  }
  return r;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"values", m.v}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.v = j.at("values").get<std::vector<double>>();
  if (m.v.size() != m.rows * m.cols) throw std::runtime_error("dataset: corrupt matrix block");
  return m;
}

nlohmann::json scaler_to_json(const Scaler& s) {
  return {{"kind", to_string(s.kind)}, {"min", s.min}, {"max", s.max}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
  return Scaler{scaler_kind_from_string(j.at("kind").get<std::string>()),
                j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& d) {
  nlohmann::json j;
  j["format"] = "covf-dataset-v1";
  for (const auto& c : d.cities)
    j["cities"].push_back({{"id", c.metro_id}, {"name", c.name}, {"population", c.population}});
  j["dates"] = d.dates;
  for (std::size_t i = 0; i < d.cities.size(); ++i) {
    j["series_norm"].push_back(matrix_to_json(d.series_norm[i]));
    j["series_daily"].push_back(matrix_to_json(d.series_daily[i]));
  }
  j["factor_names"] = d.factor_names;
  j["covariates_norm"] = matrix_to_json(d.covariates_norm);
  j["covariates_raw"] = matrix_to_json(d.covariates_raw);
  j["cases_scaler"] = scaler_to_json(d.cases_scaler);
  j["deaths_scaler"] = scaler_to_json(d.deaths_scaler);
  for (const auto& [name, s] : d.covariate_scalers)
    j["covariate_scalers"][name] = scaler_to_json(s);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot write " + path);
  f << j.dump(1) << '\n';
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot open " + path);
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "covf-dataset-v1")
    throw std::runtime_error("dataset: unrecognized container format in " + path);
  Dataset d;
  for (const auto& c : j.at("cities"))
    d.cities.push_back({c.at("id").get<std::string>(), c.at("name").get<std::string>(),
                        c.at("population").get<double>()});
  d.dates = j.at("dates").get<std::vector<std::string>>();
  for (const auto& m : j.at("series_norm")) d.series_norm.push_back(matrix_from_json(m));
  for (const auto& m : j.at("series_daily")) d.series_daily.push_back(matrix_from_json(m));
  d.factor_names = j.at("factor_names").get<std::vector<std::string>>();
  d.covariates_norm = matrix_from_json(j.at("covariates_norm"));
  d.covariates_raw = matrix_from_json(j.at("covariates_raw"));
  d.cases_scaler = scaler_from_json(j.at("cases_scaler"));
  d.deaths_scaler = scaler_from_json(j.at("deaths_scaler"));
  if (j.contains("covariate_scalers"))
    for (auto it = j["covariate_scalers"].begin(); it != j["covariate_scalers"].end(); ++it)
      d.covariate_scalers[it.key()] = scaler_from_json(it.value());
  return d;
}

}  // namespace covf
