#pragma once

#include <functional>
#include <span>

#include "covf/model.hpp"

namespace covf {

// Experiment grid: every factor (plus the factor-free "None" configuration)
// crossed with every input length, repeated with independent seeds.
struct SweepSpec {
  std::vector<std::string> factors;  // "None" is inserted if missing
  std::vector<std::size_t> input_lens = {3, 4, 5};
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 0;
  FusionMode fusion = FusionMode::constant;
  ModelConfig model;  // template; input_len / n_covariates / seed set per run
};

struct SweepResult {
  std::string factor;
  std::size_t input_len = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  EvalReport eval;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;  // set when ok is false
};

// Runs the full grid. Each run's seed derives only from the grid coordinates
// and base seed, so the returned list is identical for any degree of
// parallelism. Individual run failures are recorded and the sweep continues;
// throws only if every run for some factor failed.
std::vector<SweepResult> run_sweep(
    const SweepSpec& spec, const Dataset& dataset, std::size_t n_parallel = 1,
    const std::function<void(const SweepResult&)>& progress = nullptr);

enum class RankKey { cum_error_cases, cum_error_death };
double rank_key_value(const EvalReport& eval, RankKey key);

struct RankRow {
  std::string factor;
  double rmse_cases = 0.0;
  double rmse_deaths = 0.0;
  double cum_error_cases = 0.0;
  double cum_error_deaths = 0.0;
  std::size_t days_in = 0;  // input length of the best run
  std::size_t place = 0;    // 0-based rank
};

// Best run per factor by `key`, sorted ascending; ties broken by factor name.
std::vector<RankRow> rank_factors(std::span<const SweepResult> results,
                                  RankKey key = RankKey::cum_error_cases);

struct BoxStats {
  std::string factor;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Five-number summary of the key metric per factor (linear-interpolation
// quartiles), ordered by per-factor minimum.
std::vector<BoxStats> boxplot_stats(std::span<const SweepResult> results,
                                    RankKey key = RankKey::cum_error_cases);

// Pool each factor's k best runs and sort ascending.
Vec topk_curve(std::span<const SweepResult> results, std::size_t k,
               RankKey key = RankKey::cum_error_cases);

// sweep_results.csv: failed runs are omitted; wall_ms can be suppressed when
// byte-identical output across executions matters more than timing data.
void write_sweep_results_csv(const std::string& path, std::span<const SweepResult> results,
                             bool include_wall_ms = true);
std::vector<SweepResult> read_sweep_results_csv(const std::string& path);

void write_rank_table_csv(const std::string& path, std::span<const RankRow> rows);
std::vector<RankRow> read_rank_table_csv(const std::string& path);

}  // namespace covf
