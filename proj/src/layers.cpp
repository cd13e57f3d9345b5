#include "covf/layers.hpp"

#include <cmath>

namespace covf {

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act) {
  DenseLayer l;
  l.w = Matrix(out, in);
  l.b = Vec(out, 0.0);
  l.act = act;
  return l;
}

Vec dense_forward(const DenseLayer& layer, const Vec& x) {
  require_dim(x.size() == layer.in(), "dense input length " + std::to_string(x.size()) +
                                          " vs layer in " + std::to_string(layer.in()));
  Vec pre = matvec(layer.w, x);
  for (std::size_t i = 0; i < pre.size(); ++i)
    pre[i] = activate(layer.act, pre[i] + layer.b[i]);
  return pre;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& seq, DenseCache* cache) {
  require_dim(seq.cols == layer.in(), "dense sequence feature width " + std::to_string(seq.cols) +
                                          " vs layer in " + std::to_string(layer.in()));
  Matrix pre(seq.rows, layer.out());
  Matrix out(seq.rows, layer.out());
  for (std::size_t t = 0; t < seq.rows; ++t) {
    Vec p = matvec(layer.w, seq.row(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      double z = p[i] + layer.b[i];
      pre(t, i) = z;
      out(t, i) = activate(layer.act, z);
    }
  }
  if (cache) {
    cache->input = seq;
    cache->pre = pre;
    cache->out = out;
  }
  return out;
}

Matrix dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& grad_out,
                      DenseGrads& grads) {
  require_dim(grad_out.rows == cache.input.rows && grad_out.cols == layer.out(),
              "dense backward grad shape");
  Matrix grad_in(cache.input.rows, layer.in());
  for (std::size_t t = 0; t < grad_out.rows; ++t) {
    Vec dpre(layer.out());
    for (std::size_t i = 0; i < layer.out(); ++i)
      dpre[i] = grad_out(t, i) * activate_grad(layer.act, cache.pre(t, i), cache.out(t, i));
    Vec x = cache.input.row(t);
    outer_add(grads.w, dpre, x);
    axpy(1.0, dpre, grads.b);
    Vec dx(layer.in(), 0.0);
    matvec_transpose_add(layer.w, dpre, dx);
    grad_in.set_row(t, dx);
  }
  return grad_in;
}

LstmLayer make_lstm(std::size_t input, std::size_t hidden, bool return_sequences,
                    Activation cell_act, double dropout, double recurrent_dropout) {
  LstmLayer l;
  l.input_size = input;
  l.hidden_size = hidden;
  for (int g = 0; g < 4; ++g) {
    l.w[g] = Matrix(hidden, input);
    l.u[g] = Matrix(hidden, hidden);
    l.b[g] = Vec(hidden, 0.0);
  }
  l.dropout = dropout;
  l.recurrent_dropout = recurrent_dropout;
  l.return_sequences = return_sequences;
  l.cell_act = cell_act;
  return l;
}

DropoutMasks sample_masks(const LstmLayer& layer, Rng& rng) {
  DropoutMasks m;
  if (layer.dropout > 0.0) {
    const double keep = 1.0 - layer.dropout;
    m.input.resize(layer.input_size);
    for (double& v : m.input) v = rng.unit() < keep ? 1.0 / keep : 0.0;
  }
  if (layer.recurrent_dropout > 0.0) {
    const double keep = 1.0 - layer.recurrent_dropout;
    m.recurrent.resize(layer.hidden_size);
    for (double& v : m.recurrent) v = rng.unit() < keep ? 1.0 / keep : 0.0;
  }
  return m;
}

namespace {

Vec masked(const Vec& x, const Vec& mask) {
  if (mask.empty()) return x;
  return hadamard(x, mask);
}

LstmStepCache step_impl(const LstmLayer& layer, const Vec& x, const LstmState& prev,
                        const DropoutMasks* masks) {
  const std::size_t h = layer.hidden_size;
  require_dim(x.size() == layer.input_size, "lstm input length " + std::to_string(x.size()) +
                                                " vs layer input " +
                                                std::to_string(layer.input_size));
  require_dim(prev.h.size() == h, "lstm prev.h length " + std::to_string(prev.h.size()) +
                                      " vs hidden " + std::to_string(h));
  require_dim(prev.c.size() == h, "lstm prev.c length " + std::to_string(prev.c.size()) +
                                      " vs hidden " + std::to_string(h));
  LstmStepCache s;
  s.x = masks ? masked(x, masks->input) : x;
  s.h_prev = masks ? masked(prev.h, masks->recurrent) : prev.h;
  s.c_prev = prev.c;

  // pre_q = W_q x + U_q h_prev + b_q
  std::array<Vec, 4> pre;
  for (int g = 0; g < 4; ++g) {
    pre[g] = matvec(layer.w[g], s.x);
    Vec uh = matvec(layer.u[g], s.h_prev);
    for (std::size_t i = 0; i < h; ++i) pre[g][i] += uh[i] + layer.b[g][i];
  }

  s.f.resize(h);
  s.i.resize(h);
  s.o.resize(h);
  s.g.resize(h);
  s.c.resize(h);
  s.c_act.resize(h);
  s.g_pre = pre[kCell];
  for (std::size_t i = 0; i < h; ++i) {
    s.f[i] = activate(Activation::sigmoid, pre[kForget][i]);
    s.i[i] = activate(Activation::sigmoid, pre[kInput][i]);
    s.o[i] = activate(Activation::sigmoid, pre[kOutput][i]);
    s.g[i] = activate(layer.cell_act, pre[kCell][i]);
    s.c[i] = s.f[i] * s.c_prev[i] + s.i[i] * s.g[i];
    s.c_act[i] = activate(layer.cell_act, s.c[i]);
  }
  return s;
}

}  // namespace

LstmState lstm_step(const LstmLayer& layer, const Vec& x, const LstmState& prev,
                    const DropoutMasks* masks) {
  LstmStepCache s = step_impl(layer, x, prev, masks);
  LstmState next;
  next.c = s.c;
  next.h.resize(layer.hidden_size);
  for (std::size_t i = 0; i < layer.hidden_size; ++i) next.h[i] = s.o[i] * s.c_act[i];
  return next;
}

Matrix lstm_forward(const LstmLayer& layer, const Matrix& seq, bool training, Rng* rng,
                    LstmCache* cache) {
  if (seq.rows == 0) throw std::invalid_argument("lstm_forward: empty sequence");
  require_dim(seq.cols == layer.input_size, "lstm sequence feature width " +
                                                std::to_string(seq.cols) + " vs layer input " +
                                                std::to_string(layer.input_size));
  DropoutMasks masks;
  if (training && (layer.dropout > 0.0 || layer.recurrent_dropout > 0.0)) {
    if (!rng) throw std::invalid_argument("lstm_forward: training with dropout requires an rng");
    masks = sample_masks(layer, *rng);
  }

  const std::size_t h = layer.hidden_size;
  LstmState state{Vec(h, 0.0), Vec(h, 0.0)};
  Matrix out(layer.return_sequences ? seq.rows : 1, h);
  if (cache) {
    cache->steps.clear();
    cache->steps.reserve(seq.rows);
    cache->masks = masks;
  }
  const DropoutMasks* mp =
      (masks.input.empty() && masks.recurrent.empty()) ? nullptr : &masks;
  for (std::size_t t = 0; t < seq.rows; ++t) {
    LstmStepCache s = step_impl(layer, seq.row(t), state, mp);
    state.c = s.c;
    for (std::size_t i = 0; i < h; ++i) state.h[i] = s.o[i] * s.c_act[i];
    if (layer.return_sequences) out.set_row(t, state.h);
    if (cache) cache->steps.push_back(std::move(s));
  }
  if (!layer.return_sequences) out.set_row(0, state.h);
  return out;
}

Matrix lstm_backward(const LstmLayer& layer, const LstmCache& cache, const Matrix& grad_out,
                     LstmGrads& grads) {
  if (cache.steps.empty()) throw std::logic_error("lstm_backward: no recorded forward pass");
  const std::size_t T = cache.steps.size();
  const std::size_t h = layer.hidden_size;
  const std::size_t d = layer.input_size;
  require_dim(grad_out.cols == h, "lstm backward grad width");
  require_dim(grad_out.rows == (layer.return_sequences ? T : 1), "lstm backward grad rows");

  Matrix grad_in(T, d);
  Vec dh_next(h, 0.0);  // recurrent gradient flowing into step t from t+1
  Vec dc_next(h, 0.0);

  for (std::size_t ti = T; ti-- > 0;) {
    const LstmStepCache& s = cache.steps[ti];
    Vec dh = dh_next;
    if (layer.return_sequences) {
      for (std::size_t i = 0; i < h; ++i) dh[i] += grad_out(ti, i);
    } else if (ti == T - 1) {
      for (std::size_t i = 0; i < h; ++i) dh[i] += grad_out(0, i);
    }

    Vec dc = dc_next;
    std::array<Vec, 4> dpre;
    for (auto& v : dpre) v.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
      const double do_ = dh[i] * s.c_act[i];
      dpre[kOutput][i] = do_ * s.o[i] * (1.0 - s.o[i]);
      dc[i] += dh[i] * s.o[i] * activate_grad(layer.cell_act, s.c[i], s.c_act[i]);
      const double df = dc[i] * s.c_prev[i];
      dpre[kForget][i] = df * s.f[i] * (1.0 - s.f[i]);
      const double di = dc[i] * s.g[i];
      dpre[kInput][i] = di * s.i[i] * (1.0 - s.i[i]);
      const double dg = dc[i] * s.i[i];
      dpre[kCell][i] = dg * activate_grad(layer.cell_act, s.g_pre[i], s.g[i]);
    }

    Vec dx(d, 0.0);
    Vec dh_prev(h, 0.0);
    for (int g = 0; g < 4; ++g) {
      outer_add(grads.w[g], dpre[g], s.x);
      outer_add(grads.u[g], dpre[g], s.h_prev);
      axpy(1.0, dpre[g], grads.b[g]);
      matvec_transpose_add(layer.w[g], dpre[g], dx);
      matvec_transpose_add(layer.u[g], dpre[g], dh_prev);
    }
    if (!cache.masks.input.empty())
      for (std::size_t j = 0; j < d; ++j) dx[j] *= cache.masks.input[j];
    if (!cache.masks.recurrent.empty())
      for (std::size_t i = 0; i < h; ++i) dh_prev[i] *= cache.masks.recurrent[i];
    grad_in.set_row(ti, dx);

    dh_next = dh_prev;
    for (std::size_t i = 0; i < h; ++i) dc_next[i] = dc[i] * s.f[i];
  }
  return grad_in;
}

}  // namespace covf
