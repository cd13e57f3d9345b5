#include "covf/data.hpp"

#include <algorithm>
#include <stdexcept>

namespace covf {

std::size_t CovariateTable::factor_index(const std::string& name) const {
  auto it = std::find(factors.begin(), factors.end(), name);
  if (it == factors.end())
    throw std::invalid_argument("covariate table: unknown factor '" + name + "'");
  return static_cast<std::size_t>(it - factors.begin());
}

double CovariateTable::value(const std::string& fips, const std::string& factor) const {
  auto it = by_fips.find(fips);
  if (it == by_fips.end())
    throw std::invalid_argument("covariate table: unknown fips '" + fips + "'");
  return it->second[factor_index(factor)];
}

double MetroArea::total_population() const {
  double p = 0.0;
  for (const auto& m : members) p += m.population;
  return p;
}

FactorClass factor_class_from_string(const std::string& s) {
  if (s == "extensive") return FactorClass::extensive;
  if (s == "intensive") return FactorClass::intensive;
  if (s == "population") return FactorClass::population;
  throw std::invalid_argument("unknown factor class: " + s);
}

std::string to_string(FactorClass c) {
  switch (c) {
    case FactorClass::extensive: return "extensive";
    case FactorClass::intensive: return "intensive";
    case FactorClass::population: return "population";
  }
  return "?";
}

const std::vector<std::string>& sweep_factor_names() {
  static const std::vector<std::string> names = {
      "pop_density_2010", "PHLTH",      "Insurance",      "Percentblacks",
      "Percenthispanics", "Nhosp",      "INSURANCE",      "CHOLSCREEN",
      "DIABETES",         "STROKE",     "CHD",            "CHECKUP",
      "Nbeds",            "svi_overall", "KIDNEY",        "CASTHMA",
      "black_percent",    "BPMED",      "LPA",            "CSMOKING",
      "ARTHRITIS",        "poverty_percent", "Estbeds",   "MHLTH",
      "senior_percent",   "COPD",       "CANCER",         "Nbeds_per1000",
      "BPHIGH",           "HIGHCHOL",   "BINGE",          "OBESITY",
      "svi_minority"};
  return names;
}

const std::vector<std::string>& analysis_only_factor_names() {
  static const std::vector<std::string> names = {"PVI", "norm_pop"};
  return names;
}

const std::vector<std::string>& health_factor_names() {
  static const std::vector<std::string> names = {
      "PHLTH",   "ARTHRITIS", "BINGE",    "BPHIGH",   "BPMED",      "CANCER", "CASTHMA",
      "CHD",     "CHECKUP",   "CHOLSCREEN", "COPD",   "CSMOKING",   "DIABETES",
      "HIGHCHOL", "KIDNEY",   "LPA",      "MHLTH",    "OBESITY",    "STROKE"};
  return names;
}

FactorRegistry FactorRegistry::defaults() {
  FactorRegistry r;
  for (const auto& f : sweep_factor_names())
    r.set(f, {FactorClass::intensive, AggregationPolicy::weighted_mean});
  // hospital counts scale with metro size
  for (const char* f : {"Nhosp", "Nbeds", "Estbeds"})
    r.set(f, {FactorClass::extensive, AggregationPolicy::sum});
  r.set("PVI", {FactorClass::intensive, AggregationPolicy::weighted_mean});
  r.set("norm_pop", {FactorClass::population, AggregationPolicy::sum});
  return r;
}

const FactorRegistry::Entry& FactorRegistry::lookup(const std::string& factor) const {
  auto it = entries_.find(factor);
  if (it == entries_.end())
    throw std::invalid_argument("factor registry: unclassified factor '" + factor + "'");
  return it->second;
}

std::size_t Dataset::city_index(const std::string& metro_id) const {
  for (std::size_t i = 0; i < cities.size(); ++i)
    if (cities[i].metro_id == metro_id) return i;
  throw std::invalid_argument("dataset: unknown city '" + metro_id + "'");
}

std::size_t Dataset::factor_index(const std::string& name) const {
  auto it = std::find(factor_names.begin(), factor_names.end(), name);
  if (it == factor_names.end())
    throw std::invalid_argument("dataset: unknown factor '" + name + "'");
  return static_cast<std::size_t>(it - factor_names.begin());
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "a" || s == "constant") return FusionMode::constant;
  if (s == "b" || s == "series_scaled") return FusionMode::series_scaled;
  throw std::invalid_argument("unknown fusion mode: " + s);
}

std::string to_string(FusionMode m) {
  return m == FusionMode::constant ? "a" : "b";
}

}  // namespace covf
