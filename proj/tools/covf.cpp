// covf: ingest -> train/sweep -> rank/analyze -> report pipeline driver.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "covf/analysis.hpp"
#include "covf/config.hpp"
#include "covf/manifest.hpp"
#include "covf/pipeline.hpp"
#include "covf/sweep.hpp"

namespace fs = std::filesystem;
using namespace covf;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 input/schema, 3 validation, 4 numeric failure
struct CliError {
  int code;
  std::string message;
};

int g_log_level = 1;  // 0 error, 1 info, 2 debug

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << "[covf] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (g_log_level >= 2) std::cerr << "[covf:debug] " << msg << "\n";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string require_key(const Config& cfg, const std::string& key, const std::string& what) {
  const std::string v = cfg.get(key);
  if (v.empty()) throw CliError{2, "missing " + what + " (config key '" + key + "')"};
  return v;
}

std::string out_dir(const Config& cfg) {
  const std::string dir = cfg.get("out", "out");
  fs::create_directories(dir);
  return dir;
}

RunManifest start_manifest(const std::string& command, const Config& cfg) {
  RunManifest m;
  m.tool_version = kVersion;
  m.command = command;
  m.config = cfg.values();
  m.started_at = current_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& dir) {
  m.finished_at = current_timestamp();
  write_manifest(dir + "/manifest.json", m);
}

ModelConfig model_config_from(const Config& cfg) {
  ModelConfig m;
  m.input_len = cfg.get_uint("model.input_len", m.input_len);
  m.dense1_units = cfg.get_uint("model.dense1_units", m.dense1_units);
  m.lstm_units = cfg.get_uint("model.lstm_units", m.lstm_units);
  m.dense2_units = cfg.get_uint("model.dense2_units", m.dense2_units);
  m.activation = activation_from_string(cfg.get("model.activation", to_string(m.activation)));
  m.dropout = cfg.get_double("model.dropout", m.dropout);
  m.recurrent_dropout = cfg.get_double("model.recurrent_dropout", m.recurrent_dropout);
  m.epochs = cfg.get_uint("model.epochs", m.epochs);
  m.batch_size = cfg.get_uint("model.batch_size", m.batch_size);
  m.learning_rate = cfg.get_double("model.learning_rate", m.learning_rate);
  m.validation_fraction = cfg.get_double("model.validation", m.validation_fraction);
  m.seed = cfg.get_uint("seed", m.seed);
  m.fusion = fusion_mode_from_string(cfg.get("model.fusion", "a"));
  m.factors = split_list(cfg.get("model.factors", ""));
  m.n_covariates = m.factors.size();
  return m;
}

Dataset load_dataset_from(const Config& cfg) {
  const std::string path = require_key(cfg, "dataset", "ingested dataset path");
  log_debug("loading dataset " + path);
  return load_dataset(path);
}

int cmd_ingest(const Config& cfg) {
  const std::string ts_path = require_key(cfg, "input.timeseries", "time series CSV");
  const std::string cov_path = require_key(cfg, "input.covariates", "covariates CSV");
  const std::string metro_path = require_key(cfg, "input.metro", "metro definition CSV");
  const std::string reg_path = cfg.get("input.registry");

  RunManifest man = start_manifest("ingest", cfg);
  man.add_input(ts_path);
  man.add_input(cov_path);
  man.add_input(metro_path);

  auto records = parse_timeseries_csv(read_csv(ts_path));
  auto covariates = parse_covariates_csv(read_csv(cov_path));
  auto metros = parse_metro_csv(read_csv(metro_path));
  FactorRegistry registry = FactorRegistry::defaults();
  if (!reg_path.empty()) {
    man.add_input(reg_path);
    registry = parse_factor_registry_csv(read_csv(reg_path));
  }

  IngestOptions opts;
  const std::string repair = cfg.get("ingest.repair", "reject");
  if (repair == "clamp")
    opts.repair = RepairPolicy::clamp;
  else if (repair != "reject")
    throw CliError{2, "ingest.repair must be 'reject' or 'clamp', got '" + repair + "'"};

  IngestReport report;
  Dataset dataset;
  try {
    dataset = build_dataset(records, covariates, metros, registry, opts, &report);
  } catch (const std::exception& e) {
    throw CliError{3, std::string("ingest validation failed: ") + e.what()};
  }

  const std::string dir = out_dir(cfg);
  const std::string ds_path = dir + "/dataset.json";
  save_dataset(ds_path, dataset);

  nlohmann::json rj;
  rj["cities_kept"] = dataset.cities.size();
  rj["rejected"] = nlohmann::json::array();
  for (const auto& [metro, reason] : report.rejected)
    rj["rejected"].push_back({{"metro", metro}, {"reason", reason}});
  rj["warnings"] = report.warnings;
  rj["violations"] = nlohmann::json::array();
  for (const auto& v : report.validation.violations)
    rj["violations"].push_back({{"fips", v.fips},
                                {"date", v.date},
                                {"field", v.field},
                                {"value", v.value},
                                {"previous", v.previous}});
  const std::string report_path = dir + "/ingest_report.json";
  std::ofstream(report_path) << rj.dump(2) << "\n";

  man.add_output(ds_path);
  man.add_output(report_path);
  finish_manifest(man, dir);
  log_info("ingested " + std::to_string(dataset.cities.size()) + " cities, " +
           std::to_string(report.rejected.size()) + " rejected");
  return 0;
}

int cmd_train(const Config& cfg) {
  const std::string ds_path = require_key(cfg, "dataset", "ingested dataset path");
  RunManifest man = start_manifest("train", cfg);
  man.add_input(ds_path);
  Dataset dataset = load_dataset(ds_path);

  ModelConfig mc = model_config_from(cfg);
  for (const auto& f : mc.factors) dataset.factor_index(f);  // fail fast on unknown names
  WindowedSamples samples =
      window_samples(dataset, mc.input_len, mc.factors, mc.fusion);
  ForecastModel model = build_model(mc);
  log_info("training on " + std::to_string(samples.size()) + " samples (" +
           std::to_string(model.net.param_count()) + " parameters)");

  TrainReport report;
  try {
    report = train(model, samples);
  } catch (const std::exception& e) {
    throw CliError{4, std::string("training diverged: ") + e.what()};
  }

  const std::string dir = out_dir(cfg);
  const std::string model_path = dir + "/model.covf";
  save_model(model_path, model);

  CsvTable curve;
  curve.header = {"epoch", "train_loss", "val_loss"};
  for (std::size_t e = 0; e < report.train_loss.size(); ++e)
    curve.rows.push_back({std::to_string(e), format_double(report.train_loss[e]),
                          format_double(report.val_loss[e])});
  const std::string curve_path = dir + "/train_report.csv";
  write_csv(curve_path, curve);

  man.add_output(model_path);
  man.add_output(curve_path);
  finish_manifest(man, dir);
  log_info("checkpoint " + model_path + " snapshot " + report.snapshot_id);
  return 0;
}

int cmd_predict(const Config& cfg) {
  const std::string ds_path = require_key(cfg, "dataset", "ingested dataset path");
  const std::string model_path = require_key(cfg, "predict.model", "model checkpoint");
  const std::string city = require_key(cfg, "predict.city", "metro id");

  RunManifest man = start_manifest("predict", cfg);
  man.add_input(ds_path);
  man.add_input(model_path);
  Dataset dataset = load_dataset(ds_path);
  ForecastModel model = load_model(model_path);

  const std::size_t c = dataset.city_index(city);
  Vec cov(model.config.factors.size());
  for (std::size_t j = 0; j < cov.size(); ++j)
    cov[j] = dataset.covariates_norm(c, dataset.factor_index(model.config.factors[j]));

  Vec out = predict(model, dataset.series_norm[c], cov, dataset.cases_scaler,
                    dataset.deaths_scaler);

  CsvTable t;
  t.header = {"day", "cases", "deaths"};
  for (std::size_t d = 0; d < kForecastDays; ++d)
    t.rows.push_back({std::to_string(d + 1), format_double(out[2 * d]),
                      format_double(out[2 * d + 1])});
  const std::string dir = out_dir(cfg);
  const std::string pred_path = dir + "/predictions.csv";
  write_csv(pred_path, t);

  man.add_output(pred_path);
  finish_manifest(man, dir);
  log_info("wrote " + pred_path + " for " + city);
  return 0;
}

int cmd_sweep(const Config& cfg) {
  const std::string ds_path = require_key(cfg, "dataset", "ingested dataset path");
  const std::string dir = out_dir(cfg);

  RunManifest man = start_manifest("sweep", cfg);
  man.add_input(ds_path);

  if (cfg.get_bool("sweep.if_changed", false)) {
    const std::string man_path = dir + "/manifest.json";
    if (fs::exists(man_path) && !fs::exists(dir + "/sweep.incomplete")) {
      RunManifest prev = load_manifest(man_path);
      auto stripped = [](std::map<std::string, std::string> c) {
        c.erase("parallel");  // execution width never changes the results
        c.erase("sweep.if_changed");
        return c;
      };
      if (prev.command == "sweep" && prev.inputs == man.inputs &&
          stripped(prev.config) == stripped(man.config)) {
        log_info("sweep outputs are up to date, skipping");
        return 0;
      }
    }
  }

  Dataset dataset = load_dataset(ds_path);

  SweepSpec spec;
  const std::string factor_list = cfg.get("sweep.factors");
  spec.factors = factor_list.empty() ? dataset.factor_names : split_list(factor_list);
  spec.input_lens.clear();
  for (const auto& l : split_list(cfg.get("sweep.lengths", "3,4,5")))
    spec.input_lens.push_back(std::stoul(l));
  spec.repetitions = cfg.get_uint("sweep.reps", 10);
  spec.base_seed = cfg.get_uint("seed", 0);
  spec.model = model_config_from(cfg);
  spec.model.factors.clear();  // the grid assigns factors per run
  spec.fusion = spec.model.fusion;
  const std::size_t parallel = cfg.get_uint("parallel", 1);

  // resumability marker plus streaming partial results; both are removed once
  // the merged CSV is in place
  const std::string marker_path = dir + "/sweep.incomplete";
  std::ofstream(marker_path) << "started " << man.started_at << "\n";
  const std::string partial_path = dir + "/sweep_partial.csv";
  std::ofstream partial(partial_path, std::ios::trunc);
  partial << "factor,input_len,repetition,seed,ok\n";

  std::size_t done = 0;
  const auto progress = [&](const SweepResult& r) {
    partial << r.factor << ',' << r.input_len << ',' << r.repetition << ',' << r.seed << ','
            << (r.ok ? "1" : "0") << "\n";
    partial.flush();
    ++done;
    log_debug("run " + std::to_string(done) + ": " + r.factor + " L=" +
              std::to_string(r.input_len) + (r.ok ? "" : " FAILED: " + r.error));
  };

  std::vector<SweepResult> results;
  try {
    results = run_sweep(spec, dataset, parallel, progress);
  } catch (const std::runtime_error& e) {
    throw CliError{4, e.what()};
  }

  std::vector<SweepResult> rows = results;
  if (!cfg.get_bool("sweep.timing", false))
    for (auto& r : rows) r.wall_ms = 0.0;  // keep the CSV byte-stable across executions
  const std::string results_path = dir + "/sweep_results.csv";
  write_sweep_results_csv(results_path, rows, true);
  partial.close();
  fs::remove(partial_path);
  fs::remove(marker_path);

  man.add_output(results_path);
  finish_manifest(man, dir);
  std::size_t failed = 0;
  for (const auto& r : results)
    if (!r.ok) ++failed;
  log_info("sweep finished: " + std::to_string(results.size()) + " runs, " +
           std::to_string(failed) + " failed");
  return 0;
}

int cmd_rank(const Config& cfg) {
  const std::string dir = out_dir(cfg);
  const std::string results_path = cfg.get("rank.results", dir + "/sweep_results.csv");
  RunManifest man = start_manifest("rank", cfg);
  man.add_input(results_path);

  auto results = read_sweep_results_csv(results_path);
  const std::string key_name = cfg.get("rank.key", "cases");
  RankKey key;
  if (key_name == "cases")
    key = RankKey::cum_error_cases;
  else if (key_name == "death")
    key = RankKey::cum_error_death;
  else
    throw CliError{2, "rank.key must be 'cases' or 'death', got '" + key_name + "'"};

  auto table = rank_factors(results, key);
  const std::string table_path = dir + "/rank_table.csv";
  write_rank_table_csv(table_path, table);

  man.add_output(table_path);
  finish_manifest(man, dir);
  log_info("ranked " + std::to_string(table.size()) + " factors; best: " + table[0].factor);
  return 0;
}

int cmd_analyze(const Config& cfg) {
  const std::string ds_path = require_key(cfg, "dataset", "ingested dataset path");
  RunManifest man = start_manifest("analyze", cfg);
  man.add_input(ds_path);
  Dataset dataset = load_dataset(ds_path);
  const std::string dir = out_dir(cfg);

  CorrelationMatrix full = covariate_correlation(dataset.covariates_raw, dataset.factor_names);
  const std::string corr_path = dir + "/correlation_matrix.csv";
  write_correlation_matrix_csv(corr_path, full);
  man.add_output(corr_path);

  std::vector<std::string> health;
  for (const auto& f : health_factor_names())
    if (std::find(dataset.factor_names.begin(), dataset.factor_names.end(), f) !=
        dataset.factor_names.end())
      health.push_back(f);
  if (health.size() >= 2) {
    Matrix sub(dataset.cities.size(), health.size());
    for (std::size_t c = 0; c < dataset.cities.size(); ++c)
      for (std::size_t j = 0; j < health.size(); ++j)
        sub(c, j) = dataset.covariates_raw(c, dataset.factor_index(health[j]));
    const std::string health_path = dir + "/correlation_health.csv";
    write_correlation_matrix_csv(health_path, covariate_correlation(sub, health));
    man.add_output(health_path);
  }

  const std::string pairs_path = dir + "/pairplot.csv";
  write_pairplot_csv(pairs_path, dataset, dataset.factor_names);
  man.add_output(pairs_path);

  for (const auto& f : dataset.factor_names) {
    const std::string biv_path = dir + "/bivariate_" + f + ".csv";
    write_bivariate_csv(biv_path, max_bivariate(dataset, f));
    man.add_output(biv_path);
  }

  const std::string model_path = cfg.get("analyze.model");
  if (!model_path.empty()) {
    man.add_input(model_path);
    ForecastModel model = load_model(model_path);
    PeriodSpec periods;
    periods.now_days = cfg.get_uint("analyze.now_days", periods.now_days);
    periods.future_days = cfg.get_uint("analyze.future_days", periods.future_days);
    PeriodCorrelation pc = period_correlation(
        model, model.config.factors, dataset, dataset.factor_names, periods,
        cfg.get_bool("analyze.fitted_everywhere", false));
    const std::string period_path = dir + "/period_correlation.csv";
    write_period_correlation_csv(period_path, pc);
    man.add_output(period_path);
  }

  finish_manifest(man, dir);
  log_info("analysis artifacts written to " + dir);
  return 0;
}

int cmd_report(const Config& cfg) {
  const std::string dir = out_dir(cfg);
  RunManifest man = start_manifest("report", cfg);
  nlohmann::json j;
  j["tool_version"] = kVersion;

  const std::string rank_path = dir + "/rank_table.csv";
  if (fs::exists(rank_path)) {
    man.add_input(rank_path);
    j["rankings"] = nlohmann::json::array();
    for (const auto& r : read_rank_table_csv(rank_path))
      j["rankings"].push_back({{"risk", r.factor},
                               {"place", r.place},
                               {"days_in", r.days_in},
                               {"rmse_cases", r.rmse_cases},
                               {"rmse_death", r.rmse_deaths},
                               {"cum_error_cases", r.cum_error_cases},
                               {"cum_error_death", r.cum_error_deaths}});
  }

  const std::string sweep_path = dir + "/sweep_results.csv";
  if (fs::exists(sweep_path)) {
    man.add_input(sweep_path);
    auto results = read_sweep_results_csv(sweep_path);
    j["boxplot"] = nlohmann::json::array();
    for (const auto& s : boxplot_stats(results))
      j["boxplot"].push_back({{"risk", s.factor},
                              {"min", s.min},
                              {"q1", s.q1},
                              {"median", s.median},
                              {"q3", s.q3},
                              {"max", s.max}});
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}})
      j["top" + std::to_string(k)] = topk_curve(results, k);
  }

  const std::string corr_path = dir + "/correlation_matrix.csv";
  if (fs::exists(corr_path)) {
    man.add_input(corr_path);
    CsvTable corr = read_csv(corr_path);
    j["correlation"] = {{"factors", corr.header}};
    auto& rows = j["correlation"]["matrix"] = nlohmann::json::array();
    for (const auto& row : corr.rows) {
      nlohmann::json out_row = nlohmann::json::array();
      for (const auto& cell : row)
        out_row.push_back(cell == "NA" ? nlohmann::json() : nlohmann::json(std::stod(cell)));
      rows.push_back(out_row);
    }
  }

  const std::string period_path = dir + "/period_correlation.csv";
  if (fs::exists(period_path)) {
    man.add_input(period_path);
    CsvTable per = read_csv(period_path);
    j["period_correlation"] = nlohmann::json::array();
    for (const auto& row : per.rows) {
      nlohmann::json entry = {{"factor", row[0]}};
      for (std::size_t c = 1; c < per.header.size(); ++c)
        entry[per.header[c]] =
            row[c] == "NA" ? nlohmann::json() : nlohmann::json(std::stod(row[c]));
      j["period_correlation"].push_back(entry);
    }
  }

  const std::string report_path = dir + "/report.json";
  std::ofstream(report_path) << j.dump(2) << "\n";
  man.add_output(report_path);
  finish_manifest(man, dir);
  log_info("wrote " + report_path);
  return 0;
}

// remaining args of the form --section.key value become config overrides
void collect_extras(const std::vector<std::string>& extras,
                    std::vector<std::pair<std::string, std::string>>& overrides) {
  for (std::size_t i = 0; i < extras.size(); i += 2) {
    const std::string& flag = extras[i];
    if (flag.size() < 3 || flag.rfind("--", 0) != 0)
      throw CliError{2, "unrecognized argument '" + flag + "'"};
    if (i + 1 >= extras.size()) throw CliError{2, "missing value for '" + flag + "'"};
    overrides.emplace_back(flag.substr(2), extras[i + 1]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariate-aware epidemic forecasting pipeline"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out, log_level = "info";
  std::uint64_t seed = 0;
  std::size_t parallel = 0;
  app.add_option("--config", config_path, "configuration file (key=value with [section]s)");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "base random seed");
  auto* par_opt = app.add_option("--parallel", parallel, "concurrent sweep runs");
  app.add_option("--log-level", log_level, "error, info, or debug");

  struct Sub {
    CLI::App* app;
    int (*fn)(const Config&);
  };
  std::vector<Sub> subs = {
      {app.add_subcommand("ingest", "validate and normalize the input corpus"), cmd_ingest},
      {app.add_subcommand("train", "train a single forecasting model"), cmd_train},
      {app.add_subcommand("predict", "forecast one city from a checkpoint"), cmd_predict},
      {app.add_subcommand("sweep", "run the risk-factor experiment grid"), cmd_sweep},
      {app.add_subcommand("rank", "rank factors from sweep results"), cmd_rank},
      {app.add_subcommand("analyze", "correlation and bivariate analyses"), cmd_analyze},
      {app.add_subcommand("report", "merge artifacts into one JSON summary"), cmd_report},
  };
  for (auto& s : subs) s.app->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (log_level == "error")
    g_log_level = 0;
  else if (log_level == "debug")
    g_log_level = 2;
  else if (log_level != "info") {
    std::cerr << "covf: unknown log level '" << log_level << "'\n";
    return 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = read_config(config_path);
    if (*out_opt) cfg.set("out", out);
    if (*seed_opt) cfg.set("seed", std::to_string(seed));
    if (*par_opt) cfg.set("parallel", std::to_string(parallel));

    for (auto& s : subs) {
      if (!s.app->parsed()) continue;
      std::vector<std::pair<std::string, std::string>> overrides;
      collect_extras(s.app->remaining(), overrides);
      apply_overrides(cfg, overrides);
      return s.fn(cfg);
    }
    return 2;  // unreachable given require_subcommand
  } catch (const CliError& e) {
    std::cerr << "covf: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "covf: " << e.what() << "\n";
    return 2;
  }
}
