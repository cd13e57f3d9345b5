#include "covf/model.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "covf/rng.hpp"

namespace covf {

std::size_t ModelConfig::expected_param_count() const {
  const std::size_t d = input_features();
  const std::size_t h = lstm_units;
  return (d * dense1_units + dense1_units) + 4 * (h * dense1_units + h * h + h) +
         4 * (h * h + h * h + h) + (h * dense2_units + dense2_units) +
         (dense2_units * output_units + output_units);
}

ForecastModel build_model(const ModelConfig& config) {
  if (!config.factors.empty() && config.factors.size() != config.n_covariates)
    throw std::invalid_argument("model: factor names do not match n_covariates");
  ForecastModel m;
  m.config = config;
  const std::size_t d = config.input_features();
  const std::size_t h = config.lstm_units;
  m.net.layers.emplace_back(make_dense(d, config.dense1_units, config.activation));
  m.net.layers.emplace_back(make_lstm(config.dense1_units, h, true, config.activation,
                                      config.dropout, config.recurrent_dropout));
  m.net.layers.emplace_back(
      make_lstm(h, h, false, config.activation, config.dropout, config.recurrent_dropout));
  m.net.layers.emplace_back(make_dense(h, config.dense2_units, config.activation));
  m.net.layers.emplace_back(make_dense(config.dense2_units, config.output_units,
                                       Activation::linear));
  init_weights(m.net, config.seed);
  return m;
}

namespace {

struct MaskCounts {
  std::size_t next_day;  // B × 2
  std::size_t future;    // unmasked entries in columns 2..29
};

MaskCounts check_mask(const Matrix& pred, const Matrix& target,
                      const std::vector<std::vector<bool>>& mask) {
  require_dim(pred.rows == target.rows && pred.cols == target.cols &&
                  mask.size() == pred.rows && pred.cols == kTargetWidth,
              "masked loss shapes");
  MaskCounts c{pred.rows * 2, 0};
  for (std::size_t b = 0; b < pred.rows; ++b) {
    bool any = false;
    for (bool v : mask[b]) any |= v;
    if (!any)
      throw std::invalid_argument("masked loss: sample " + std::to_string(b) +
                                  " has an all-false mask (should have been dropped)");
    for (std::size_t j = 2; j < kTargetWidth; ++j) c.future += mask[b][j];
  }
  return c;
}

}  // namespace

double masked_weighted_mse(const Matrix& pred, const Matrix& target,
                           const std::vector<std::vector<bool>>& mask) {
  const MaskCounts c = check_mask(pred, target, mask);
  double next = 0.0, future = 0.0;
  for (std::size_t b = 0; b < pred.rows; ++b) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double e = pred(b, j) - target(b, j);
      next += e * e;
    }
    for (std::size_t j = 2; j < kTargetWidth; ++j) {
      if (!mask[b][j]) continue;
      const double e = pred(b, j) - target(b, j);
      future += e * e;
    }
  }
  double loss = 0.5 * next / static_cast<double>(c.next_day);
  if (c.future > 0) loss += 0.5 * future / static_cast<double>(c.future);
  return loss;
}

Matrix masked_weighted_mse_grad(const Matrix& pred, const Matrix& target,
                                const std::vector<std::vector<bool>>& mask) {
  const MaskCounts c = check_mask(pred, target, mask);
  Matrix g(pred.rows, pred.cols);
  for (std::size_t b = 0; b < pred.rows; ++b) {
    for (std::size_t j = 0; j < 2; ++j)
      g(b, j) = (pred(b, j) - target(b, j)) / static_cast<double>(c.next_day);
    for (std::size_t j = 2; j < kTargetWidth; ++j)
      g(b, j) = mask[b][j] && c.future > 0
                    ? (pred(b, j) - target(b, j)) / static_cast<double>(c.future)
                    : 0.0;
  }
  return g;
}

TrainReport train(ForecastModel& model, const WindowedSamples& samples) {
  if (samples.size() == 0) throw std::invalid_argument("train: no samples");
  require_dim(samples.feature_width == model.config.input_features(),
              "sample feature width vs model input");
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig& cfg = model.config;
  Rng rng(splitmix64(cfg.seed ^ 0x7261696eULL));

  // seed-deterministic split into train and validation
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.index(i)]);
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());

  Adam opt({cfg.learning_rate});
  auto params = model.net.params();
  NetworkGrads grads = NetworkGrads::zeros_like(model.net);

  auto batch_eval = [&](std::span<const std::size_t> idx, bool training, bool update) {
    Matrix pred(idx.size(), kTargetWidth);
    Matrix tgt(idx.size(), kTargetWidth);
    std::vector<std::vector<bool>> msk(idx.size());
    std::vector<ForwardTape> tapes(update ? idx.size() : 0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t s = idx[r];
      Matrix out = network_forward(model.net, samples.inputs[s], training, &rng,
                                   update ? &tapes[r] : nullptr);
      pred.set_row(r, out.row(0));
      tgt.set_row(r, samples.targets.row(s));
      msk[r] = samples.mask[s];
    }
    const double loss = masked_weighted_mse(pred, tgt, msk);
    if (update) {
      Matrix g = masked_weighted_mse_grad(pred, tgt, msk);
      grads.reset();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        Matrix row(1, kTargetWidth);
        row.set_row(0, g.row(r));
        network_backward(model.net, tapes[r], row, grads);
      }
      auto gv = grads.views(model.net);
      opt.step(params, gv);
    }
    return loss;
  };

  TrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[rng.index(i)]);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t off = 0; off < train_idx.size(); off += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, train_idx.size() - off);
      const double loss =
          batch_eval(std::span(train_idx).subspan(off, n), true, true);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(n);
      seen += n;
    }
    report.train_loss.push_back(seen ? epoch_loss / static_cast<double>(seen) : 0.0);
    report.val_loss.push_back(val_idx.empty() ? 0.0 : batch_eval(val_idx, false, false));
  }

  model.fitted = true;
  report.snapshot_id = parameter_digest(model);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Vec predict_normalized(const ForecastModel& model, const Matrix& input) {
  Matrix out = network_forward(model.net, input, false);
  return out.row(0);
}

Vec predict(const ForecastModel& model, const Matrix& history_norm,
            std::span<const double> covariates_norm, const Scaler& cases_scaler,
            const Scaler& deaths_scaler) {
  if (!model.fitted) throw std::logic_error("predict: model is not fitted");
  const std::size_t L = model.config.input_len;
  if (history_norm.rows < L)
    throw std::invalid_argument("predict: history has " + std::to_string(history_norm.rows) +
                                " days, need at least " + std::to_string(L));
  require_dim(covariates_norm.size() == model.config.n_covariates,
              "predict covariate count vs model config");
  Matrix input(L, model.config.input_features());
  const std::size_t base = history_norm.rows - L;
  for (std::size_t t = 0; t < L; ++t) {
    const double cases = history_norm(base + t, 0);
    const double deaths = history_norm(base + t, 1);
    input(t, 0) = cases;
    input(t, 1) = deaths;
    const double scale =
        model.config.fusion == FusionMode::constant ? 1.0 : 0.5 * (cases + deaths);
    for (std::size_t j = 0; j < covariates_norm.size(); ++j)
      input(t, 2 + j) = covariates_norm[j] * scale;
  }
  Vec norm = predict_normalized(model, input);
  Vec out(kTargetWidth);
  for (std::size_t j = 0; j < kTargetWidth; ++j) {
    const Scaler& s = j % 2 == 0 ? cases_scaler : deaths_scaler;
    out[j] = std::max(0.0, s.invert(std::max(0.0, norm[j])));
  }
  return out;
}

EvalReport evaluate(const ForecastModel& model, const WindowedSamples& samples,
                    std::span<const std::size_t> subset) {
  if (!model.fitted) throw std::logic_error("evaluate: model is not fitted");
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(samples.size());
    std::iota(all.begin(), all.end(), 0);
    subset = all;
  }
  double sq_cases = 0, sq_deaths = 0, abs_cases = 0, abs_deaths = 0;
  std::size_t n_cases = 0, n_deaths = 0;
  for (std::size_t s : subset) {
    Vec pred = predict_normalized(model, samples.inputs[s]);
    for (std::size_t j = 0; j < kTargetWidth; ++j) {
      if (!samples.mask[s][j]) continue;
      const double e = pred[j] - samples.targets(s, j);
      if (j % 2 == 0) {
        sq_cases += e * e;
        abs_cases += std::fabs(e);
        ++n_cases;
      } else {
        sq_deaths += e * e;
        abs_deaths += std::fabs(e);
        ++n_deaths;
      }
    }
  }
  EvalReport r;
  r.rmse_cases = n_cases ? std::sqrt(sq_cases / static_cast<double>(n_cases)) : 0.0;
  r.rmse_deaths = n_deaths ? std::sqrt(sq_deaths / static_cast<double>(n_deaths)) : 0.0;
  r.cum_error_cases = abs_cases;
  r.cum_error_deaths = abs_deaths;
  return r;
}

namespace {

constexpr char kMagic[5] = {'C', 'O', 'V', 'F', '1'};

nlohmann::json config_to_json(const ModelConfig& c, bool fitted) {
  return {{"input_len", c.input_len},
          {"n_covariates", c.n_covariates},
          {"dense1_units", c.dense1_units},
          {"lstm_units", c.lstm_units},
          {"dense2_units", c.dense2_units},
          {"output_units", c.output_units},
          {"activation", to_string(c.activation)},
          {"dropout", c.dropout},
          {"recurrent_dropout", c.recurrent_dropout},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"validation_fraction", c.validation_fraction},
          {"seed", c.seed},
          {"fusion", to_string(c.fusion)},
          {"factors", c.factors},
          {"fitted", fitted}};
}

ModelConfig config_from_json(const nlohmann::json& j, bool& fitted) {
  ModelConfig c;
  c.input_len = j.at("input_len").get<std::size_t>();
  c.n_covariates = j.at("n_covariates").get<std::size_t>();
  c.dense1_units = j.at("dense1_units").get<std::size_t>();
  c.lstm_units = j.at("lstm_units").get<std::size_t>();
  c.dense2_units = j.at("dense2_units").get<std::size_t>();
  c.output_units = j.at("output_units").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.dropout = j.at("dropout").get<double>();
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.fusion = fusion_mode_from_string(j.at("fusion").get<std::string>());
  c.factors = j.value("factors", std::vector<std::string>{});
  fitted = j.value("fitted", false);
  return c;
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

}  // namespace

void save_model(const std::string& path, ForecastModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
  f.write(kMagic, sizeof(kMagic));
  const std::string cfg = config_to_json(model.config, model.fitted).dump();
  const std::uint32_t len = static_cast<std::uint32_t>(cfg.size());
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  for (const auto& p : model.net.params())
    f.write(reinterpret_cast<const char*>(p.data),
            static_cast<std::streamsize>(p.size * sizeof(double)));
}

ForecastModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[5];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string cfg(len, '\0');
  f.read(cfg.data(), len);
  if (!f) throw std::runtime_error("checkpoint: truncated config block in " + path);
  bool fitted = false;
  ModelConfig config = config_from_json(nlohmann::json::parse(cfg), fitted);
  ForecastModel model = build_model(config);
  for (auto& p : model.net.params()) {
    f.read(reinterpret_cast<char*>(p.data),
           static_cast<std::streamsize>(p.size * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: truncated parameters in " + path);
  }
  model.fitted = fitted;
  return model;
}

std::string parameter_digest(ForecastModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model.net.params()) {
    const char* bytes = reinterpret_cast<const char*>(p.data);
    h = fnv1a64(std::string_view(bytes, p.size * sizeof(double)), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace covf
