#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace covf {

enum class Activation { relu, sigmoid, tanh, selu, linear };

// scale/alpha constants of the self-normalizing ELU
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::selu:
      return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * (std::exp(x) - 1.0);
    case Activation::linear: return x;
  }
  throw std::logic_error("unknown activation");
}

// derivative at pre-activation `x` with output `y` = activate(a, x)
inline double activate_grad(Activation a, double x, double y) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
    case Activation::selu: return x > 0.0 ? kSeluScale : y + kSeluScale * kSeluAlpha;
    case Activation::linear: return 1.0;
  }
  throw std::logic_error("unknown activation");
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::selu: return "selu";
    case Activation::linear: return "linear";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "selu") return Activation::selu;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation name: " + s);
}

}  // namespace covf
