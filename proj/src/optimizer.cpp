#include "covf/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace covf {

void Adam::step(std::vector<ParamView>& params, const std::vector<ParamView>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: parameter/gradient block counts differ");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].size, 0.0);
      v_[i].assign(params[i].size, 0.0);
    }
  }

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamView& p = params[i];
    const ParamView& g = grads[i];
    if (p.size != g.size)
      throw std::invalid_argument("adam: block size mismatch for " + p.name);
    for (std::size_t k = 0; k < p.size; ++k) {
      const double gk = g.data[k];
      if (!std::isfinite(gk))
        throw std::runtime_error("adam: non-finite gradient in parameter " + p.name);
      m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * gk;
      v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * gk * gk;
      const double mhat = m_[i][k] / bc1;
      const double vhat = v_[i][k] / bc2;
      p.data[k] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace covf
