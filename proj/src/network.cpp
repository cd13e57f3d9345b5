#include "covf/network.hpp"

#include <cmath>

namespace covf {

namespace {

const char* kGateNames[4] = {"f", "i", "o", "c"};

void collect_params(std::size_t idx, DenseLayer& l, std::vector<ParamView>& out) {
  std::string p = "layer" + std::to_string(idx) + ".dense.";
  out.push_back({p + "w", l.w.v.data(), l.w.size()});
  out.push_back({p + "b", l.b.data(), l.b.size()});
}

void collect_params(std::size_t idx, LstmLayer& l, std::vector<ParamView>& out) {
  std::string p = "layer" + std::to_string(idx) + ".lstm.";
  for (int g = 0; g < 4; ++g) out.push_back({p + "w_" + kGateNames[g], l.w[g].v.data(), l.w[g].size()});
  for (int g = 0; g < 4; ++g) out.push_back({p + "u_" + kGateNames[g], l.u[g].v.data(), l.u[g].size()});
  for (int g = 0; g < 4; ++g) out.push_back({p + "b_" + kGateNames[g], l.b[g].data(), l.b[g].size()});
}

}  // namespace

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    n += std::visit([](const auto& layer) { return layer.param_count(); }, l);
  return n;
}

std::vector<ParamView> Network::params() {
  std::vector<ParamView> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    std::visit([&](auto& layer) { collect_params(i, layer, out); }, layers[i]);
  return out;
}

NetworkGrads NetworkGrads::zeros_like(const Network& net) {
  NetworkGrads g;
  for (const auto& l : net.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      DenseGrads dg;
      dg.w = Matrix(d->w.rows, d->w.cols);
      dg.b = Vec(d->b.size(), 0.0);
      g.layers.emplace_back(std::move(dg));
    } else {
      const auto& s = std::get<LstmLayer>(l);
      LstmGrads lg;
      for (int q = 0; q < 4; ++q) {
        lg.w[q] = Matrix(s.hidden_size, s.input_size);
        lg.u[q] = Matrix(s.hidden_size, s.hidden_size);
        lg.b[q] = Vec(s.hidden_size, 0.0);
      }
      g.layers.emplace_back(std::move(lg));
    }
  }
  return g;
}

void NetworkGrads::reset() {
  for (auto& l : layers) {
    if (auto* d = std::get_if<DenseGrads>(&l)) {
      std::fill(d->w.v.begin(), d->w.v.end(), 0.0);
      std::fill(d->b.begin(), d->b.end(), 0.0);
    } else {
      auto& s = std::get<LstmGrads>(l);
      for (int q = 0; q < 4; ++q) {
        std::fill(s.w[q].v.begin(), s.w[q].v.end(), 0.0);
        std::fill(s.u[q].v.begin(), s.u[q].v.end(), 0.0);
        std::fill(s.b[q].begin(), s.b[q].end(), 0.0);
      }
    }
  }
}

std::vector<ParamView> NetworkGrads::views(const Network& net) {
  std::vector<ParamView> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    (void)net;
    if (auto* d = std::get_if<DenseGrads>(&layers[i])) {
      std::string p = "layer" + std::to_string(i) + ".dense.";
      out.push_back({p + "w", d->w.v.data(), d->w.size()});
      out.push_back({p + "b", d->b.data(), d->b.size()});
    } else {
      auto& s = std::get<LstmGrads>(layers[i]);
      std::string p = "layer" + std::to_string(i) + ".lstm.";
      for (int g = 0; g < 4; ++g)
        out.push_back({p + "w_" + kGateNames[g], s.w[g].v.data(), s.w[g].size()});
      for (int g = 0; g < 4; ++g)
        out.push_back({p + "u_" + kGateNames[g], s.u[g].v.data(), s.u[g].size()});
      for (int g = 0; g < 4; ++g)
        out.push_back({p + "b_" + kGateNames[g], s.b[g].data(), s.b[g].size()});
    }
  }
  return out;
}

void NetworkGrads::add_scaled(const NetworkGrads& other, double scale) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (auto* d = std::get_if<DenseGrads>(&layers[i])) {
      const auto& od = std::get<DenseGrads>(other.layers[i]);
      for (std::size_t k = 0; k < d->w.v.size(); ++k) d->w.v[k] += scale * od.w.v[k];
      for (std::size_t k = 0; k < d->b.size(); ++k) d->b[k] += scale * od.b[k];
    } else {
      auto& s = std::get<LstmGrads>(layers[i]);
      const auto& os = std::get<LstmGrads>(other.layers[i]);
      for (int q = 0; q < 4; ++q) {
        for (std::size_t k = 0; k < s.w[q].v.size(); ++k) s.w[q].v[k] += scale * os.w[q].v[k];
        for (std::size_t k = 0; k < s.u[q].v.size(); ++k) s.u[q].v[k] += scale * os.u[q].v[k];
        for (std::size_t k = 0; k < s.b[q].size(); ++k) s.b[q][k] += scale * os.b[q][k];
      }
    }
  }
}

Matrix network_forward(const Network& net, const Matrix& seq, bool training, Rng* rng,
                       ForwardTape* tape) {
  if (tape) {
    tape->caches.clear();
    tape->recorded = false;
  }
  Matrix x = seq;
  for (const auto& l : net.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      if (tape) {
        DenseCache c;
        x = dense_forward(*d, x, &c);
        tape->caches.emplace_back(std::move(c));
      } else {
        x = dense_forward(*d, x);
      }
    } else {
      const auto& s = std::get<LstmLayer>(l);
      if (tape) {
        LstmCache c;
        x = lstm_forward(s, x, training, rng, &c);
        tape->caches.emplace_back(std::move(c));
      } else {
        x = lstm_forward(s, x, training, rng);
      }
    }
  }
  if (tape) {
    tape->output = x;
    tape->recorded = true;
  }
  return x;
}

Matrix network_backward(const Network& net, const ForwardTape& tape, const Matrix& grad_out,
                        NetworkGrads& grads) {
  if (!tape.recorded) throw std::logic_error("network_backward: no recorded forward pass");
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("network_backward: grads not shaped for this network");
  Matrix g = grad_out;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    if (const auto* d = std::get_if<DenseLayer>(&net.layers[li])) {
      g = dense_backward(*d, std::get<DenseCache>(tape.caches[li]), g,
                         std::get<DenseGrads>(grads.layers[li]));
    } else {
      const auto& s = std::get<LstmLayer>(net.layers[li]);
      g = lstm_backward(s, std::get<LstmCache>(tape.caches[li]), g,
                        std::get<LstmGrads>(grads.layers[li]));
    }
  }
  return g;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

void glorot_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double lim = glorot_limit(fan_in, fan_out);
  for (double& v : m.v) v = rng.uniform(-lim, lim);
}

}  // namespace

void init_weights(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : net.layers) {
    if (auto* d = std::get_if<DenseLayer>(&l)) {
      glorot_fill(d->w, d->in(), d->out(), rng);
      std::fill(d->b.begin(), d->b.end(), 0.0);
    } else {
      auto& s = std::get<LstmLayer>(l);
      for (int g = 0; g < 4; ++g) {
        glorot_fill(s.w[g], s.input_size, s.hidden_size, rng);
        glorot_fill(s.u[g], s.hidden_size, s.hidden_size, rng);
        std::fill(s.b[g].begin(), s.b[g].end(), 0.0);
      }
    }
  }
}

}  // namespace covf
