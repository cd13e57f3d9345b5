#pragma once

#include <string>
#include <variant>
#include <vector>

#include "covf/layers.hpp"

namespace covf {

// Named view over one parameter block (a weight matrix or bias vector).
struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

// A sequential stack of dense and LSTM layers operating on one sample
// sequence. Dense layers are applied per time step while the tensor is still a
// sequence; a non-return_sequences LSTM collapses it to a single row.
struct Network {
  using Layer = std::variant<DenseLayer, LstmLayer>;
  std::vector<Layer> layers;

  std::size_t param_count() const;
  // Stable ordering: layer by layer, dense (w, b), LSTM (w_f..w_c, u_f..u_c, b_f..b_c).
  std::vector<ParamView> params();
};

// Gradients shaped identically to the network's parameters.
struct NetworkGrads {
  std::vector<std::variant<DenseGrads, LstmGrads>> layers;

  static NetworkGrads zeros_like(const Network& net);
  void reset();
  std::vector<ParamView> views(const Network& net);
  void add_scaled(const NetworkGrads& other, double scale);
};

struct ForwardTape {
  std::vector<std::variant<DenseCache, LstmCache>> caches;
  Matrix output;
  bool recorded = false;
};

Matrix network_forward(const Network& net, const Matrix& seq, bool training, Rng* rng = nullptr,
                       ForwardTape* tape = nullptr);

// Backpropagation through the recorded tape; accumulates into `grads` and
// returns the gradient w.r.t. the input sequence.
Matrix network_backward(const Network& net, const ForwardTape& tape, const Matrix& grad_out,
                        NetworkGrads& grads);

// Glorot-uniform kernels and recurrent matrices, zero biases; fully
// determined by the seed.
void init_weights(Network& net, std::uint64_t seed);

double glorot_limit(std::size_t fan_in, std::size_t fan_out);

}  // namespace covf
