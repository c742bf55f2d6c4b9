#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tgnt/error.hpp"
#include "tgnt/matrix.hpp"

namespace tgnt::nn {

// Trainable tensor. `grad` always has the same length as `value`.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)),
        value(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                              std::multiplies<>())),
        grad(value.size(), 0.0) {}

  [[nodiscard]] auto size() const -> std::size_t { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  // uniform(-bound, bound), seeded.
  template <class Gen>
  void init_uniform(double bound, Gen& gen) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : value) v = u(gen);
  }
};

using ParamList = std::vector<Tensor*>;

inline void zero_grad(const ParamList& params) {
  for (auto* p : params) p->zero_grad();
}

inline auto count(const ParamList& params) -> std::size_t {
  std::size_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

inline void check_cols(const Matrix& x, std::size_t expected, const std::string& layer) {
  if (x.cols() != expected)
    throw ShapeError(layer + ": expected input width " + std::to_string(expected) +
                     ", got " + std::to_string(x.cols()));
}

inline auto relu(double x) -> double { return x > 0.0 ? x : 0.0; }
inline auto sigmoid(double x) -> double {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Horizontal concatenation of row-aligned matrices.
inline auto hconcat(std::initializer_list<const Matrix*> parts) -> Matrix {
  const std::size_t rows = (*parts.begin())->rows();
  std::size_t cols = 0;
  for (const auto* p : parts) cols += p->cols();
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t off = 0;
    for (const auto* p : parts) {
      std::copy(p->row(r).begin(), p->row(r).end(), out.row(r).begin() + off);
      off += p->cols();
    }
  }
  return out;
}

// Columns [begin, begin + width) of x.
inline auto column_block(const Matrix& x, std::size_t begin, std::size_t width)
    -> Matrix {
  Matrix out(x.rows(), width);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = x(r, begin + c);
  return out;
}

}  // namespace tgnt::nn
