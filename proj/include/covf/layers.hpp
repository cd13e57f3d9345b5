#pragma once

#include <array>
#include <optional>

#include "covf/activation.hpp"
#include "covf/matrix.hpp"
#include "covf/rng.hpp"

namespace covf {

struct DenseLayer {
  Matrix w;  // out × in
  Vec b;     // out
  Activation act = Activation::linear;

  std::size_t in() const { return w.cols; }
  std::size_t out() const { return w.rows; }
  std::size_t param_count() const { return w.rows * w.cols + b.size(); }
};

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act);

struct DenseCache {
  Matrix input;  // T × in
  Matrix pre;    // T × out
  Matrix out;    // T × out
};

// activation(W x + b), applied per row when given a sequence
Vec dense_forward(const DenseLayer& layer, const Vec& x);
Matrix dense_forward(const DenseLayer& layer, const Matrix& seq, DenseCache* cache = nullptr);

struct DenseGrads {
  Matrix w;
  Vec b;
};

// Returns gradient w.r.t. the layer input; accumulates parameter gradients.
Matrix dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& grad_out,
                      DenseGrads& grads);

// Gate index order used throughout: forget, input, output, cell-candidate.
enum GateIndex { kForget = 0, kInput = 1, kOutput = 2, kCell = 3 };

struct LstmLayer {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<Matrix, 4> w;  // h × d each
  std::array<Matrix, 4> u;  // h × h each
  std::array<Vec, 4> b;     // h each
  double dropout = 0.0;
  double recurrent_dropout = 0.0;
  bool return_sequences = false;
  // Gate activation is fixed to sigmoid; the cell candidate and cell output
  // activation is configurable (tanh by default).
  Activation cell_act = Activation::tanh;

  std::size_t param_count() const {
    return 4 * (hidden_size * input_size + hidden_size * hidden_size + hidden_size);
  }
};

LstmLayer make_lstm(std::size_t input, std::size_t hidden, bool return_sequences,
                    Activation cell_act = Activation::tanh, double dropout = 0.0,
                    double recurrent_dropout = 0.0);

struct LstmState {
  Vec h;
  Vec c;
};

// Inverted-dropout masks, pre-scaled by 1/keep. Sampled once per sequence and
// reused at every step.
struct DropoutMasks {
  Vec input;      // length d, empty = no input dropout
  Vec recurrent;  // length h, empty = no recurrent dropout
};

DropoutMasks sample_masks(const LstmLayer& layer, Rng& rng);

// One application of the six gate equations.
LstmState lstm_step(const LstmLayer& layer, const Vec& x, const LstmState& prev,
                    const DropoutMasks* masks = nullptr);

struct LstmStepCache {
  Vec x;       // masked input actually fed to the gates
  Vec h_prev;  // masked previous hidden state fed to the gates
  Vec c_prev;
  Vec f, i, o;
  Vec g_pre, g;  // candidate pre-activation and activation
  Vec c, c_act;
};

struct LstmCache {
  std::vector<LstmStepCache> steps;
  DropoutMasks masks;
};

// Runs the cell across a T × d sequence from the zero state. Returns T × h when
// return_sequences, else 1 × h (the final hidden state). Dropout masks are
// sampled only when training.
Matrix lstm_forward(const LstmLayer& layer, const Matrix& seq, bool training, Rng* rng = nullptr,
                    LstmCache* cache = nullptr);

struct LstmGrads {
  std::array<Matrix, 4> w;
  std::array<Matrix, 4> u;
  std::array<Vec, 4> b;
};

// BPTT across the cached sequence. grad_out is T × h (return_sequences) or
// 1 × h. Returns gradient w.r.t. the input sequence (T × d); parameter
// gradients are accumulated into `grads`.
Matrix lstm_backward(const LstmLayer& layer, const LstmCache& cache, const Matrix& grad_out,
                     LstmGrads& grads);

}  // namespace covf
