#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace covf {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All kernel math runs in 64-bit floats.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  std::size_t size() const { return v.size(); }

  Vec row(std::size_t i) const {
    return Vec(v.begin() + static_cast<std::ptrdiff_t>(i * cols),
               v.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }
  void set_row(std::size_t i, const Vec& r) {
    for (std::size_t j = 0; j < cols; ++j) v[i * cols + j] = r[j];
  }
};

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("dimension mismatch: " + what);
}

// y = W x
inline Vec matvec(const Matrix& w, const Vec& x) {
  require_dim(x.size() == w.cols, "matvec expects x of length " + std::to_string(w.cols) +
                                      ", got " + std::to_string(x.size()));
  Vec y(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    const double* wr = w.v.data() + i * w.cols;
    for (std::size_t j = 0; j < w.cols; ++j) acc += wr[j] * x[j];
    y[i] = acc;
  }
  return y;
}

// y += W^T g
inline void matvec_transpose_add(const Matrix& w, const Vec& g, Vec& y) {
  require_dim(g.size() == w.rows && y.size() == w.cols, "matvec_transpose_add shapes");
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double gi = g[i];
    double* yr = y.data();
    const double* wr = w.v.data() + i * w.cols;
    for (std::size_t j = 0; j < w.cols; ++j) yr[j] += wr[j] * gi;
  }
}

// W += g x^T  (outer-product accumulation for weight gradients)
inline void outer_add(Matrix& w, const Vec& g, const Vec& x) {
  require_dim(g.size() == w.rows && x.size() == w.cols, "outer_add shapes");
  for (std::size_t i = 0; i < w.rows; ++i) {
    double* wr = w.v.data() + i * w.cols;
    const double gi = g[i];
    for (std::size_t j = 0; j < w.cols; ++j) wr[j] += gi * x[j];
  }
}

inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vec hadamard(const Vec& a, const Vec& b) {
  require_dim(a.size() == b.size(), "hadamard operand lengths");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace covf
