#pragma once

#include <span>

#include "covf/data.hpp"
#include "covf/network.hpp"
#include "covf/optimizer.hpp"

namespace covf {

struct ModelConfig {
  std::size_t input_len = 3;
  std::size_t n_covariates = 0;
  std::size_t dense1_units = 32;
  std::size_t lstm_units = 16;  // two LSTM layers of this width
  std::size_t dense2_units = 32;
  std::size_t output_units = kTargetWidth;
  Activation activation = Activation::relu;  // dense and LSTM cell; gates stay sigmoid
  double dropout = 0.2;
  double recurrent_dropout = 0.2;
  std::size_t epochs = 200;
  std::size_t batch_size = 110;
  double learning_rate = 0.001;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  FusionMode fusion = FusionMode::constant;
  std::vector<std::string> factors;  // covariate names, size n_covariates when set

  std::size_t input_features() const { return 2 + n_covariates; }
  // closed-form trainable parameter count of the layer stack
  std::size_t expected_param_count() const;
};

// Dense(32) -> LSTM(16, sequences) -> LSTM(16) -> Dense(32) -> Dense(30, linear)
struct ForecastModel {
  Network net;
  ModelConfig config;
  bool fitted = false;
};

ForecastModel build_model(const ModelConfig& config);

// 50/50 convex combination of the next-day mean squared error and the mean
// squared error over the unmasked 14-day columns.
double masked_weighted_mse(const Matrix& pred, const Matrix& target,
                           const std::vector<std::vector<bool>>& mask);
Matrix masked_weighted_mse_grad(const Matrix& pred, const Matrix& target,
                                const std::vector<std::vector<bool>>& mask);

struct TrainReport {
  Vec train_loss;  // one entry per epoch
  Vec val_loss;
  double wall_seconds = 0.0;
  std::string snapshot_id;  // content hash of the final parameters
};

TrainReport train(ForecastModel& model, const WindowedSamples& samples);

// Normalized-space forward pass on one prepared input window.
Vec predict_normalized(const ForecastModel& model, const Matrix& input);

// Forecast from the last input_len days of a city's normalized history.
// Returns the 30 interleaved daily counts, denormalized and clamped at 0.
Vec predict(const ForecastModel& model, const Matrix& history_norm,
            std::span<const double> covariates_norm, const Scaler& cases_scaler,
            const Scaler& deaths_scaler);

struct EvalReport {
  double rmse_cases = 0.0;
  double rmse_deaths = 0.0;
  double cum_error_cases = 0.0;
  double cum_error_deaths = 0.0;
};

// Errors over unmasked slots in normalized space. `subset` restricts to the
// given sample indices (empty = all samples).
EvalReport evaluate(const ForecastModel& model, const WindowedSamples& samples,
                    std::span<const std::size_t> subset = {});

// Versioned checkpoint container: magic "COVF1", config JSON block, then the
// parameter arrays as little-endian 64-bit floats.
void save_model(const std::string& path, ForecastModel& model);
ForecastModel load_model(const std::string& path);

// Hex digest of the current parameters (used for snapshot ids and manifests).
std::string parameter_digest(ForecastModel& model);

}  // namespace covf
