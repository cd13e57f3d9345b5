#include <doctest.h>

#include <cmath>

#include "covf/network.hpp"
#include "covf/optimizer.hpp"
#include "oracles.hpp"

using namespace covf;

namespace {

LstmLayer random_lstm(std::size_t d, std::size_t h, Rng& rng, bool return_sequences = false) {
  LstmLayer l = make_lstm(d, h, return_sequences, Activation::tanh);
  for (int g = 0; g < 4; ++g) {
    for (double& v : l.w[g].v) v = rng.uniform(-1.0, 1.0);
    for (double& v : l.u[g].v) v = rng.uniform(-1.0, 1.0);
    for (double& v : l.b[g]) v = rng.uniform(-0.5, 0.5);
  }
  return l;
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("lstm_step with all-zero parameters") {
  LstmLayer l = make_lstm(3, 2, false);
  LstmState zero{Vec(2, 0.0), Vec(2, 0.0)};
  LstmState next = lstm_step(l, {0.3, -0.7, 1.2}, zero);
  for (double v : next.h) CHECK(v == 0.0);
  for (double v : next.c) CHECK(v == 0.0);
}

TEST_CASE("lstm_step zero weights with nonzero cell state") {
  // gates sit at sigmoid(0) = 0.5, candidate at tanh(0) = 0
  LstmLayer l = make_lstm(1, 1, false);
  LstmState prev{Vec{0.0}, Vec{1.0}};
  LstmState next = lstm_step(l, {0.4}, prev);
  CHECK(next.c[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.h[0] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("lstm_step matches the equation transcription oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    LstmLayer l = random_lstm(4, 3, rng);
    LstmState prev{random_vec(3, rng), random_vec(3, rng)};
    Vec x = random_vec(4, rng);
    LstmState got = lstm_step(l, x, prev);
    LstmState want = oracle::lstm_step_reference(l, x, prev);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::fabs(got.h[i] - want.h[i]) < 1e-12);
      CHECK(std::fabs(got.c[i] - want.c[i]) < 1e-12);
    }
  }
}

TEST_CASE("lstm_step rejects mismatched dimensions") {
  LstmLayer l = make_lstm(3, 2, false);
  LstmState prev{Vec(2, 0.0), Vec(2, 0.0)};
  CHECK_THROWS_WITH_AS(lstm_step(l, {1.0, 2.0}, prev),
                       doctest::Contains("lstm input length"), std::invalid_argument);
  LstmState bad{Vec(1, 0.0), Vec(2, 0.0)};
  CHECK_THROWS_WITH_AS(lstm_step(l, {1.0, 2.0, 3.0}, bad),
                       doctest::Contains("prev.h"), std::invalid_argument);
}

TEST_CASE("lstm_forward single step equals lstm_step from zero state") {
  Rng rng(7);
  LstmLayer l = random_lstm(3, 2, rng);
  Vec x = random_vec(3, rng);
  Matrix seq(1, 3);
  seq.set_row(0, x);
  Matrix out = lstm_forward(l, seq, false);
  LstmState step = lstm_step(l, x, LstmState{Vec(2, 0.0), Vec(2, 0.0)});
  for (std::size_t i = 0; i < 2; ++i) CHECK(out(0, i) == step.h[i]);
}

TEST_CASE("lstm_forward training flag is a no-op without dropout") {
  Rng rng(8);
  LstmLayer l = random_lstm(3, 4, rng, true);
  Matrix seq(5, 3);
  for (std::size_t t = 0; t < 5; ++t) seq.set_row(t, random_vec(3, rng));
  Rng train_rng(1);
  Matrix a = lstm_forward(l, seq, true, &train_rng);
  Matrix b = lstm_forward(l, seq, false);
  for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("lstm_forward matches sequential lstm_step application") {
  Rng rng(9);
  LstmLayer l = random_lstm(3, 2, rng, true);
  Matrix seq(4, 3);
  for (std::size_t t = 0; t < 4; ++t) seq.set_row(t, random_vec(3, rng));
  Matrix out = lstm_forward(l, seq, false);
  LstmState s{Vec(2, 0.0), Vec(2, 0.0)};
  for (std::size_t t = 0; t < 4; ++t) {
    s = lstm_step(l, seq.row(t), s);
    for (std::size_t i = 0; i < 2; ++i) CHECK(out(t, i) == doctest::Approx(s.h[i]).epsilon(1e-15));
  }
}

TEST_CASE("lstm_forward rejects an empty sequence") {
  LstmLayer l = make_lstm(3, 2, false);
  CHECK_THROWS_AS(lstm_forward(l, Matrix(0, 3), false), std::invalid_argument);
}

TEST_CASE("gate outputs stay in (0,1) and tanh cell bounds |h|") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    LstmLayer l = random_lstm(3, 3, rng);
    Matrix seq(6, 3);
    for (std::size_t t = 0; t < 6; ++t) seq.set_row(t, random_vec(3, rng));
    LstmCache cache;
    Matrix out = lstm_forward(l, seq, false, nullptr, &cache);
    for (const auto& s : cache.steps) {
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s.f[i] > 0.0);
        CHECK(s.f[i] < 1.0);
        CHECK(s.i[i] > 0.0);
        CHECK(s.i[i] < 1.0);
        CHECK(s.o[i] > 0.0);
        CHECK(s.o[i] < 1.0);
      }
    }
    for (double v : out.v) CHECK(std::fabs(v) <= 1.0);
  }
}

TEST_CASE("dense_forward basics") {
  DenseLayer id = make_dense(2, 2, Activation::relu);
  id.w(0, 0) = 1.0;
  id.w(1, 1) = 1.0;
  Vec y = dense_forward(id, Vec{-1.0, 2.0});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 2.0);

  DenseLayer bias_only = make_dense(2, 2, Activation::linear);
  bias_only.b = {3.0, 3.0};
  Vec z = dense_forward(bias_only, Vec{123.0, -5.0});
  CHECK(z[0] == 3.0);
  CHECK(z[1] == 3.0);

  CHECK_THROWS_AS(dense_forward(id, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("dense_forward matches a naive matmul oracle") {
  Rng rng(13);
  DenseLayer l = make_dense(2, 3, Activation::tanh);
  for (double& v : l.w.v) v = rng.uniform(-1.0, 1.0);
  for (double& v : l.b) v = rng.uniform(-1.0, 1.0);
  Vec x = random_vec(2, rng);
  Vec got = dense_forward(l, x);
  for (std::size_t i = 0; i < 3; ++i) {
    double acc = l.b[i];
    for (std::size_t j = 0; j < 2; ++j) acc += l.w(i, j) * x[j];
    CHECK(std::fabs(got[i] - std::tanh(acc)) < 1e-12);
  }
}

TEST_CASE("parameter counts match closed forms") {
  DenseLayer d = make_dense(5, 7, Activation::relu);
  CHECK(d.param_count() == 7 * 5 + 7);
  LstmLayer l = make_lstm(5, 3, false);
  CHECK(l.param_count() == 4 * (3 * 5 + 3 * 3 + 3));
}

namespace {

// Small full-shape stack used by the gradient checks; smooth activations keep
// finite differences clean.
Network small_network(Rng& rng, std::size_t d = 2, std::size_t h = 2, std::size_t out = 5) {
  Network net;
  net.layers.emplace_back(make_dense(d, d, Activation::tanh));
  net.layers.emplace_back(make_lstm(d, h, true, Activation::tanh));
  net.layers.emplace_back(make_lstm(h, h, false, Activation::tanh));
  net.layers.emplace_back(make_dense(h, out, Activation::linear));
  init_weights(net, rng.next_u64());
  return net;
}

}  // namespace

TEST_CASE("backward requires a recorded forward pass") {
  Rng rng(17);
  Network net = small_network(rng);
  NetworkGrads grads = NetworkGrads::zeros_like(net);
  ForwardTape tape;
  CHECK_THROWS_AS(network_backward(net, tape, Matrix(1, 5), grads), std::logic_error);
}

TEST_CASE("zero loss gradient gives zero parameter gradients") {
  Rng rng(19);
  Network net = small_network(rng);
  Matrix seq(4, 2);
  for (std::size_t t = 0; t < 4; ++t) seq.set_row(t, random_vec(2, rng));
  ForwardTape tape;
  network_forward(net, seq, false, nullptr, &tape);
  NetworkGrads grads = NetworkGrads::zeros_like(net);
  network_backward(net, tape, Matrix(1, 5), grads);
  for (const auto& pv : grads.views(net))
    for (std::size_t k = 0; k < pv.size; ++k) CHECK(pv.data[k] == 0.0);
}

TEST_CASE("analytic BPTT gradients match central finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Network net = small_network(rng);
    REQUIRE(net.param_count() <= 200);
    Matrix seq(4, 2);
    for (std::size_t t = 0; t < 4; ++t) seq.set_row(t, random_vec(2, rng));
    Vec target = random_vec(5, rng);

    auto loss = [&]() {
      Matrix out = network_forward(net, seq, false);
      double acc = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        double e = out(0, j) - target[j];
        acc += e * e;
      }
      return acc;
    };

    ForwardTape tape;
    Matrix out = network_forward(net, seq, false, nullptr, &tape);
    Matrix grad_out(1, 5);
    for (std::size_t j = 0; j < 5; ++j) grad_out(0, j) = 2.0 * (out(0, j) - target[j]);
    NetworkGrads grads = NetworkGrads::zeros_like(net);
    network_backward(net, tape, grad_out, grads);

    auto params = net.params();
    CHECK(oracle::max_grad_relative_error(params, grads.views(net), loss) < 1e-4);
  }
}

TEST_CASE("adam leaves parameters unchanged for zero gradients") {
  Vec p = {1.5, -2.0};
  Vec g = {0.0, 0.0};
  std::vector<ParamView> pv{{"p", p.data(), 2}};
  std::vector<ParamView> gv{{"p", g.data(), 2}};
  Adam opt;
  opt.step(pv, gv);
  CHECK(p[0] == 1.5);
  CHECK(p[1] == -2.0);
}

TEST_CASE("adam scalar recurrence matches an independent computation") {
  double p = 0.0;
  double g = 1.0;
  std::vector<ParamView> pv{{"x", &p, 1}};
  std::vector<ParamView> gv{{"x", &g, 1}};
  AdamConfig cfg;
  Adam opt(cfg);

  // independent scalar recurrence
  double ref = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    opt.step(pv, gv);
    m = cfg.beta1 * m + (1 - cfg.beta1) * 1.0;
    v = cfg.beta2 * v + (1 - cfg.beta2) * 1.0;
    const double mhat = m / (1 - std::pow(cfg.beta1, t));
    const double vhat = v / (1 - std::pow(cfg.beta2, t));
    ref -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    CHECK(p == doctest::Approx(ref).epsilon(1e-15));
    if (t == 1) CHECK(p == doctest::Approx(-0.001).epsilon(1e-5));
  }
}

TEST_CASE("adam training is deterministic across identical runs") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Network net = small_network(rng);
    Matrix seq(3, 2);
    Rng data_rng(99);
    for (std::size_t t = 0; t < 3; ++t) seq.set_row(t, random_vec(2, data_rng));
    Adam opt;
    for (int it = 0; it < 10; ++it) {
      ForwardTape tape;
      Matrix out = network_forward(net, seq, false, nullptr, &tape);
      Matrix grad_out(1, 5);
      for (std::size_t j = 0; j < 5; ++j) grad_out(0, j) = 2.0 * out(0, j);
      NetworkGrads grads = NetworkGrads::zeros_like(net);
      network_backward(net, tape, grad_out, grads);
      auto params = net.params();
      opt.step(params, grads.views(net));
    }
    std::vector<double> flat;
    for (auto& pv : net.params())
      flat.insert(flat.end(), pv.data, pv.data + pv.size);
    return flat;
  };
  auto a = run(5);
  auto b = run(5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam rejects non-finite gradients") {
  double p = 0.0;
  double g = std::nan("");
  std::vector<ParamView> pv{{"layer0.dense.w", &p, 1}};
  std::vector<ParamView> gv{{"layer0.dense.w", &g, 1}};
  Adam opt;
  CHECK_THROWS_WITH_AS(opt.step(pv, gv), doctest::Contains("layer0.dense.w"),
                       std::runtime_error);
}

TEST_CASE("init_weights is seed-deterministic and respects the glorot bound") {
  Network a, b;
  a.layers.emplace_back(make_dense(32, 16, Activation::relu));
  b.layers.emplace_back(make_dense(32, 16, Activation::relu));
  init_weights(a, 1234);
  init_weights(b, 1234);
  const auto& wa = std::get<DenseLayer>(a.layers[0]).w;
  const auto& wb = std::get<DenseLayer>(b.layers[0]).w;
  const double limit = glorot_limit(32, 16);
  CHECK(limit == doctest::Approx(std::sqrt(6.0 / 48.0)).epsilon(1e-15));
  for (std::size_t i = 0; i < wa.v.size(); ++i) {
    CHECK(wa.v[i] == wb.v[i]);
    CHECK(std::fabs(wa.v[i]) <= limit);
  }
  init_weights(b, 4321);
  bool any_diff = false;
  for (std::size_t i = 0; i < wa.v.size(); ++i) any_diff |= wa.v[i] != wb.v[i];
  CHECK(any_diff);
  for (double bias : std::get<DenseLayer>(a.layers[0]).b) CHECK(bias == 0.0);
}
