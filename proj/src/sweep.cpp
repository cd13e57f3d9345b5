#include "covf/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "covf/csv.hpp"
#include "covf/pipeline.hpp"
#include "covf/rng.hpp"

namespace covf {

namespace {

constexpr const char* kNone = "None";

struct GridPoint {
  std::string factor;
  std::size_t input_len = 0;
  std::size_t repetition = 0;
};

SweepResult execute_run(const SweepSpec& spec, const Dataset& dataset, const GridPoint& pt) {
  SweepResult res;
  res.factor = pt.factor;
  res.input_len = pt.input_len;
  res.repetition = pt.repetition;
  res.seed = derive_seed(spec.base_seed, pt.factor, pt.input_len, pt.repetition);
  try {
    std::vector<std::string> selected;
    if (pt.factor != kNone) selected.push_back(pt.factor);

    ModelConfig cfg = spec.model;
    cfg.input_len = pt.input_len;
    cfg.n_covariates = selected.size();
    cfg.fusion = spec.fusion;
    cfg.seed = res.seed;

    WindowedSamples samples = window_samples(dataset, pt.input_len, selected, spec.fusion);
    ForecastModel model = build_model(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    train(model, samples);
    const auto t1 = std::chrono::steady_clock::now();
    res.eval = evaluate(model, samples);
    res.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

// key metric values of the successful runs, grouped by factor
std::map<std::string, std::vector<double>> group_values(std::span<const SweepResult> results,
                                                        RankKey key) {
  std::map<std::string, std::vector<double>> by_factor;
  for (const SweepResult& r : results)
    if (r.ok) by_factor[r.factor].push_back(rank_key_value(r.eval, key));
  if (by_factor.empty()) throw std::invalid_argument("sweep: no successful runs");
  return by_factor;
}

// linear-interpolation quantile of an ascending-sorted vector
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<SweepResult> run_sweep(const SweepSpec& spec, const Dataset& dataset,
                                   std::size_t n_parallel,
                                   const std::function<void(const SweepResult&)>& progress) {
  if (spec.repetitions == 0) throw std::invalid_argument("sweep: repetitions must be >= 1");
  if (spec.input_lens.empty()) throw std::invalid_argument("sweep: no input lengths");

  std::vector<std::string> factors = spec.factors;
  if (std::find(factors.begin(), factors.end(), kNone) == factors.end())
    factors.insert(factors.begin(), kNone);
  std::set<std::string> seen;
  for (const std::string& f : factors) {
    if (!seen.insert(f).second) throw std::invalid_argument("sweep: duplicate factor " + f);
    if (f != kNone) dataset.factor_index(f);  // throws on unknown factors
  }

  std::vector<GridPoint> grid;
  for (const std::string& f : factors)
    for (std::size_t len : spec.input_lens)
      for (std::size_t rep = 0; rep < spec.repetitions; ++rep) grid.push_back({f, len, rep});

  std::vector<SweepResult> results(grid.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= grid.size()) return;
      results[i] = execute_run(spec, dataset, grid[i]);
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(results[i]);
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(n_parallel, grid.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (const std::string& f : factors) {
    const bool any_ok = std::any_of(results.begin(), results.end(), [&](const SweepResult& r) {
      return r.factor == f && r.ok;
    });
    if (!any_ok) throw std::runtime_error("sweep: every run failed for factor " + f);
  }
  return results;
}

double rank_key_value(const EvalReport& eval, RankKey key) {
  return key == RankKey::cum_error_cases ? eval.cum_error_cases : eval.cum_error_deaths;
}

std::vector<RankRow> rank_factors(std::span<const SweepResult> results, RankKey key) {
  std::map<std::string, const SweepResult*> best;
  std::set<std::string> factors;
  for (const SweepResult& r : results) {
    factors.insert(r.factor);
    if (!r.ok) continue;
    auto [it, inserted] = best.emplace(r.factor, &r);
    if (!inserted && rank_key_value(r.eval, key) < rank_key_value(it->second->eval, key))
      it->second = &r;
  }
  for (const std::string& f : factors)
    if (!best.count(f)) throw std::invalid_argument("rank: no successful runs for factor " + f);

  std::vector<RankRow> rows;
  for (const auto& [factor, r] : best) {
    RankRow row;
    row.factor = factor;
    row.rmse_cases = r->eval.rmse_cases;
    row.rmse_deaths = r->eval.rmse_deaths;
    row.cum_error_cases = r->eval.cum_error_cases;
    row.cum_error_deaths = r->eval.cum_error_deaths;
    row.days_in = r->input_len;
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [key](const RankRow& a, const RankRow& b) {
    const double ka = key == RankKey::cum_error_cases ? a.cum_error_cases : a.cum_error_deaths;
    const double kb = key == RankKey::cum_error_cases ? b.cum_error_cases : b.cum_error_deaths;
    if (ka != kb) return ka < kb;
    return a.factor < b.factor;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].place = i;
  return rows;
}

std::vector<BoxStats> boxplot_stats(std::span<const SweepResult> results, RankKey key) {
  auto by_factor = group_values(results, key);
  std::vector<BoxStats> out;
  for (auto& [factor, values] : by_factor) {
    std::sort(values.begin(), values.end());
    BoxStats s;
    s.factor = factor;
    s.min = values.front();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.max = values.back();
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const BoxStats& a, const BoxStats& b) {
    if (a.min != b.min) return a.min < b.min;
    return a.factor < b.factor;
  });
  return out;
}

Vec topk_curve(std::span<const SweepResult> results, std::size_t k, RankKey key) {
  if (k == 0) throw std::invalid_argument("topk: k must be >= 1");
  auto by_factor = group_values(results, key);
  Vec pooled;
  for (auto& [factor, values] : by_factor) {
    std::sort(values.begin(), values.end());
    const std::size_t take = std::min(k, values.size());
    pooled.insert(pooled.end(), values.begin(), values.begin() + take);
  }
  std::sort(pooled.begin(), pooled.end());
  return pooled;
}

void write_sweep_results_csv(const std::string& path, std::span<const SweepResult> results,
                             bool include_wall_ms) {
  CsvTable t;
  t.header = {"factor", "input_len",       "repetition",      "seed",   "rmse_cases",
              "rmse_death", "cum_error_cases", "cum_error_death"};
  if (include_wall_ms) t.header.push_back("wall_ms");
  for (const SweepResult& r : results) {
    if (!r.ok) continue;
    std::vector<std::string> row = {r.factor,
                                    std::to_string(r.input_len),
                                    std::to_string(r.repetition),
                                    std::to_string(r.seed),
                                    format_double(r.eval.rmse_cases),
                                    format_double(r.eval.rmse_deaths),
                                    format_double(r.eval.cum_error_cases),
                                    format_double(r.eval.cum_error_deaths)};
    if (include_wall_ms) row.push_back(format_double(r.wall_ms));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

std::vector<SweepResult> read_sweep_results_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const std::size_t c_factor = t.column("factor");
  const std::size_t c_len = t.column("input_len");
  const std::size_t c_rep = t.column("repetition");
  const std::size_t c_seed = t.column("seed");
  const std::size_t c_rc = t.column("rmse_cases");
  const std::size_t c_rd = t.column("rmse_death");
  const std::size_t c_cc = t.column("cum_error_cases");
  const std::size_t c_cd = t.column("cum_error_death");
  const bool has_wall = t.has_column("wall_ms");
  const std::size_t c_wall = has_wall ? t.column("wall_ms") : 0;

  std::vector<SweepResult> out;
  for (const auto& row : t.rows) {
    SweepResult r;
    r.factor = row[c_factor];
    r.input_len = std::stoul(row[c_len]);
    r.repetition = std::stoul(row[c_rep]);
    r.seed = std::stoull(row[c_seed]);
    r.eval.rmse_cases = std::stod(row[c_rc]);
    r.eval.rmse_deaths = std::stod(row[c_rd]);
    r.eval.cum_error_cases = std::stod(row[c_cc]);
    r.eval.cum_error_deaths = std::stod(row[c_cd]);
    if (has_wall) r.wall_ms = std::stod(row[c_wall]);
    r.ok = true;
    out.push_back(std::move(r));
  }
  return out;
}

void write_rank_table_csv(const std::string& path, std::span<const RankRow> rows) {
  CsvTable t;
  t.header = {"rmse_cases", "rmse_death", "cum_error_cases", "cum_error_death",
              "days_in",    "risk",       "place"};
  for (const RankRow& r : rows)
    t.rows.push_back({format_double(r.rmse_cases), format_double(r.rmse_deaths),
                      format_double(r.cum_error_cases), format_double(r.cum_error_deaths),
                      std::to_string(r.days_in), r.factor, std::to_string(r.place)});
  write_csv(path, t);
}

std::vector<RankRow> read_rank_table_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const std::size_t c_rc = t.column("rmse_cases");
  const std::size_t c_rd = t.column("rmse_death");
  const std::size_t c_cc = t.column("cum_error_cases");
  const std::size_t c_cd = t.column("cum_error_death");
  const std::size_t c_days = t.column("days_in");
  const std::size_t c_risk = t.column("risk");
  const std::size_t c_place = t.column("place");
  std::vector<RankRow> out;
  for (const auto& row : t.rows) {
    RankRow r;
    r.rmse_cases = std::stod(row[c_rc]);
    r.rmse_deaths = std::stod(row[c_rd]);
    r.cum_error_cases = std::stod(row[c_cc]);
    r.cum_error_deaths = std::stod(row[c_cd]);
    r.days_in = std::stoul(row[c_days]);
    r.factor = row[c_risk];
    r.place = std::stoul(row[c_place]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace covf
