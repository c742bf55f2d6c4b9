#pragma once

// Layers with explicit forward/backward passes. Forward calls return the
// activations a matching backward call needs; backward accumulates into the
// parameters' grad buffers and returns input gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tgnt/matrix.hpp"
#include "tgnt/nn/tensor.hpp"

namespace tgnt::nn {

// y = x W^T + b, W is (out, in).
struct Linear {
  Tensor weight;
  Tensor bias;
  std::string name{"linear"};

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::string layer_name = "linear")
      : weight({out, in}), bias({out}), name(std::move(layer_name)) {}

  [[nodiscard]] auto in_dim() const -> std::size_t { return weight.shape[1]; }
  [[nodiscard]] auto out_dim() const -> std::size_t { return weight.shape[0]; }

  template <class Gen>
  void init(Gen& gen) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
    weight.init_uniform(bound, gen);
    bias.init_uniform(bound, gen);
  }

  [[nodiscard]] auto forward(const Matrix& x) const -> Matrix {
    check_cols(x, in_dim(), name);
    const std::size_t in = in_dim();
    const std::size_t out = out_dim();
    Matrix y(x.rows(), out);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto xr = x.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = weight.value.data() + o * in;
        double s = bias.value[o];
        for (std::size_t i = 0; i < in; ++i) s += w[i] * xr[i];
        y(r, o) = s;
      }
    }
    return y;
  }

  auto backward(const Matrix& x, const Matrix& dy) -> Matrix {
    const std::size_t in = in_dim();
    const std::size_t out = out_dim();
    Matrix dx(x.rows(), in);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto xr = x.row(r);
      auto dxr = dx.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dy(r, o);
        if (g == 0.0) continue;
        bias.grad[o] += g;
        double* gw = weight.grad.data() + o * in;
        const double* w = weight.value.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          gw[i] += g * xr[i];
          dxr[i] += g * w[i];
        }
      }
    }
    return dx;
  }

  auto params() -> ParamList { return {&weight, &bias}; }
};

struct MlpSpec {
  std::size_t input_dim{};
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim{};

  [[nodiscard]] auto layer_dims() const -> std::vector<std::size_t> {
    std::vector<std::size_t> d{input_dim};
    d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
    d.push_back(output_dim);
    return d;
  }

  // input*h_1 + sum h_i*h_{i+1} + h_L*output
  [[nodiscard]] auto weight_count() const -> std::size_t {
    const auto d = layer_dims();
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) n += d[i] * d[i + 1];
    return n;
  }

  [[nodiscard]] auto bias_count() const -> std::size_t {
    const auto d = layer_dims();
    return std::accumulate(d.begin() + 1, d.end(), std::size_t{0});
  }

  void validate() const {
    for (auto d : layer_dims())
      if (d == 0) throw ShapeError("mlp: all dimensions must be >= 1");
  }
};

// Affine layers with ReLU between them and an identity output.
struct Mlp {
  struct Cache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> pre_activation;
  };

  MlpSpec spec;
  std::vector<Linear> layers;

  Mlp() = default;
  explicit Mlp(MlpSpec s, const std::string& name = "mlp") : spec(std::move(s)) {
    spec.validate();
    const auto d = spec.layer_dims();
    for (std::size_t i = 0; i + 1 < d.size(); ++i)
      layers.emplace_back(d[i], d[i + 1], name + ".layer" + std::to_string(i));
  }

  template <class Gen>
  void init(Gen& gen) {
    for (auto& l : layers) l.init(gen);
  }

  [[nodiscard]] auto forward(const Matrix& x, Cache* cache = nullptr) const -> Matrix {
    Matrix h = x;
    if (cache) {
      cache->inputs.clear();
      cache->pre_activation.clear();
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (cache) cache->inputs.push_back(h);
      Matrix z = layers[i].forward(h);
      if (cache) cache->pre_activation.push_back(z);
      if (i + 1 < layers.size())
        for (auto& v : z.data()) v = relu(v);
      h = std::move(z);
    }
    return h;
  }

  auto backward(const Cache& cache, const Matrix& dy) -> Matrix {
    Matrix g = dy;
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (i + 1 < layers.size()) {
        const auto& z = cache.pre_activation[i];
        for (std::size_t k = 0; k < g.size(); ++k)
          if (z.data()[k] <= 0.0) g.data()[k] = 0.0;
      }
      g = layers[i].backward(cache.inputs[i], g);
    }
    return g;
  }

  auto params() -> ParamList {
    ParamList p;
    for (auto& l : layers) {
      p.push_back(&l.weight);
      p.push_back(&l.bias);
    }
    return p;
  }
};

// GRU cell with separate input and hidden biases; gate order (r, z, n).
//   r = sig(Wir x + bir + Whr h + bhr)
//   z = sig(Wiz x + biz + Whz h + bhz)
//   n = tanh(Win x + bin + r * (Whn h + bhn))
//   h' = (1 - z) * n + z * h
struct GruCell {
  struct Cache {
    Matrix x, h, gh, r, z, n;
  };

  Linear input_map;
  Linear hidden_map;

  GruCell() = default;
  GruCell(std::size_t input_dim, std::size_t state_dim)
      : input_map(input_dim, 3 * state_dim, "gru.input"),
        hidden_map(state_dim, 3 * state_dim, "gru.hidden") {}

  [[nodiscard]] auto state_dim() const -> std::size_t { return hidden_map.in_dim(); }
  [[nodiscard]] auto input_dim() const -> std::size_t { return input_map.in_dim(); }

  template <class Gen>
  void init(Gen& gen) {
    // Both maps share the 1/sqrt(state_dim) bound, as in common GRU cells.
    const double bound = 1.0 / std::sqrt(static_cast<double>(state_dim()));
    for (auto* t : params()) t->init_uniform(bound, gen);
  }

  [[nodiscard]] auto forward(const Matrix& h, const Matrix& x, Cache* cache = nullptr) const
      -> Matrix {
    check_cols(h, state_dim(), "gru.state");
    const std::size_t d = state_dim();
    const Matrix gi = input_map.forward(x);
    const Matrix gh = hidden_map.forward(h);
    Matrix r(h.rows(), d), z(h.rows(), d), n(h.rows(), d), out(h.rows(), d);
    for (std::size_t b = 0; b < h.rows(); ++b)
      for (std::size_t j = 0; j < d; ++j) {
        r(b, j) = sigmoid(gi(b, j) + gh(b, j));
        z(b, j) = sigmoid(gi(b, d + j) + gh(b, d + j));
        n(b, j) = std::tanh(gi(b, 2 * d + j) + r(b, j) * gh(b, 2 * d + j));
        out(b, j) = (1.0 - z(b, j)) * n(b, j) + z(b, j) * h(b, j);
      }
    if (cache) *cache = {x, h, gh, r, z, n};
    return out;
  }

  struct Grads {
    Matrix dh;
    Matrix dx;
  };

  auto backward(const Cache& c, const Matrix& dout) -> Grads {
    const std::size_t d = state_dim();
    const std::size_t rows = c.h.rows();
    Matrix dgi(rows, 3 * d), dgh(rows, 3 * d), dh(rows, d);
    for (std::size_t b = 0; b < rows; ++b)
      for (std::size_t j = 0; j < d; ++j) {
        const double g = dout(b, j);
        const double r = c.r(b, j), z = c.z(b, j), n = c.n(b, j);
        const double dn = g * (1.0 - z);
        const double dz = g * (c.h(b, j) - n);
        dh(b, j) = g * z;
        const double dn_pre = dn * (1.0 - n * n);
        const double dr = dn_pre * c.gh(b, 2 * d + j);
        const double dr_pre = dr * r * (1.0 - r);
        const double dz_pre = dz * z * (1.0 - z);
        dgi(b, j) = dr_pre;
        dgi(b, d + j) = dz_pre;
        dgi(b, 2 * d + j) = dn_pre;
        dgh(b, j) = dr_pre;
        dgh(b, d + j) = dz_pre;
        dgh(b, 2 * d + j) = dn_pre * r;
      }
    Matrix dx = input_map.backward(c.x, dgi);
    Matrix dh_lin = hidden_map.backward(c.h, dgh);
    for (std::size_t k = 0; k < dh.size(); ++k) dh.data()[k] += dh_lin.data()[k];
    return {std::move(dh), std::move(dx)};
  }

  auto params() -> ParamList {
    return {&input_map.weight, &input_map.bias, &hidden_map.weight, &hidden_map.bias};
  }
};

// Row i of the output is cos(dt_i * omega + phase).
struct TimeEncoder {
  Tensor omega;
  Tensor phase;

  TimeEncoder() = default;
  explicit TimeEncoder(std::size_t dim) : omega({dim}), phase({dim}) {}

  [[nodiscard]] auto dim() const -> std::size_t { return omega.size(); }

  // Frequencies log-spaced over [1e-4, 10] * 2*pi/span, zero phase.
  void init(double span) {
    const std::size_t d = dim();
    const double base = 2.0 * std::numbers::pi / (span > 0.0 ? span : 1.0);
    const double lo = std::log(1e-4);
    const double hi = std::log(10.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double f = d == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(d - 1);
      omega.value[j] = base * std::exp(lo + f * (hi - lo));
      phase.value[j] = 0.0;
    }
  }

  [[nodiscard]] auto forward(std::span<const double> dt) const -> Matrix {
    const std::size_t d = dim();
    Matrix out(dt.size(), d);
    for (std::size_t i = 0; i < dt.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        out(i, j) = std::cos(dt[i] * omega.value[j] + phase.value[j]);
    return out;
  }

  // Returns d loss / d dt.
  auto backward(std::span<const double> dt, const Matrix& dy) -> std::vector<double> {
    const std::size_t d = dim();
    std::vector<double> ddt(dt.size(), 0.0);
    for (std::size_t i = 0; i < dt.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double g = dy(i, j);
        if (g == 0.0) continue;
        const double s = -std::sin(dt[i] * omega.value[j] + phase.value[j]) * g;
        omega.grad[j] += s * dt[i];
        phase.grad[j] += s;
        ddt[i] += s * omega.value[j];
      }
    return ddt;
  }

  auto params() -> ParamList { return {&omega, &phase}; }
};

// Single-head scaled dot-product attention of one query over a neighbor set.
// Masked rows are excluded from the softmax; with no unmasked neighbor the
// output is the zero vector.
struct TemporalAttention {
  struct Cache {
    Matrix query_in, key_in, value_in;
    Matrix q, k, v;
    std::vector<double> weights;  // 0 for masked rows
    std::vector<bool> mask;
    bool any{false};
  };

  Linear query;
  Linear key;
  Linear value;

  TemporalAttention() = default;
  TemporalAttention(std::size_t query_dim, std::size_t key_dim, std::size_t value_dim,
                    std::size_t out_dim)
      : query(query_dim, out_dim, "attention.query"),
        key(key_dim, out_dim, "attention.key"),
        value(value_dim, out_dim, "attention.value") {}

  [[nodiscard]] auto out_dim() const -> std::size_t { return query.out_dim(); }

  template <class Gen>
  void init(Gen& gen) {
    query.init(gen);
    key.init(gen);
    value.init(gen);
  }

  // query_in: 1 x query_dim; key_in/value_in: n x dim; mask: n entries,
  // true = attend (empty mask attends to all rows).
  [[nodiscard]] auto forward(const Matrix& query_in, const Matrix& key_in,
                             const Matrix& value_in, std::vector<bool> mask,
                             Cache* cache = nullptr) const -> std::vector<double> {
    if (query_in.rows() != 1) throw ShapeError("attention: query must be a single row");
    if (key_in.rows() != value_in.rows())
      throw ShapeError("attention: key/value row counts differ");
    const std::size_t n = key_in.rows();
    if (mask.empty()) mask.assign(n, true);
    if (mask.size() != n) throw ShapeError("attention: mask length mismatch");
    const std::size_t d = out_dim();
    std::vector<double> out(d, 0.0);

    Cache local;
    Cache& c = cache ? *cache : local;
    c.query_in = query_in;
    c.key_in = key_in;
    c.value_in = value_in;
    c.mask = mask;
    c.weights.assign(n, 0.0);
    c.any = std::find(mask.begin(), mask.end(), true) != mask.end();
    if (!c.any) return out;

    c.q = query.forward(query_in);
    c.k = key.forward(key_in);
    c.v = value.forward(value_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += c.q(0, j) * c.k(i, j);
      s[i] = dot * scale;
      mx = std::max(mx, s[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) {
        c.weights[i] = std::exp(s[i] - mx);
        z += c.weights[i];
      }
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      c.weights[i] /= z;
      for (std::size_t j = 0; j < d; ++j) out[j] += c.weights[i] * c.v(i, j);
    }
    return out;
  }

  struct Grads {
    Matrix dquery;  // 1 x query_dim
    Matrix dkey;    // n x key_dim
    Matrix dvalue;  // n x value_dim
  };

  auto backward(const Cache& c, std::span<const double> dout) -> Grads {
    const std::size_t n = c.key_in.rows();
    Grads g{Matrix(1, c.query_in.cols()), Matrix(n, c.key_in.cols()),
            Matrix(n, c.value_in.cols())};
    if (!c.any) return g;
    const std::size_t d = out_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix dq(1, d), dk(n, d), dv(n, d);
    std::vector<double> da(n, 0.0);
    double avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!c.mask[i]) continue;
      for (std::size_t j = 0; j < d; ++j) {
        dv(i, j) = c.weights[i] * dout[j];
        da[i] += dout[j] * c.v(i, j);
      }
      avg += c.weights[i] * da[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!c.mask[i]) continue;
      const double ds = c.weights[i] * (da[i] - avg) * scale;
      for (std::size_t j = 0; j < d; ++j) {
        dq(0, j) += ds * c.k(i, j);
        dk(i, j) = ds * c.q(0, j);
      }
    }
    g.dquery = query.backward(c.query_in, dq);
    g.dkey = key.backward(c.key_in, dk);
    g.dvalue = value.backward(c.value_in, dv);
    return g;
  }

  auto params() -> ParamList {
    return {&query.weight, &query.bias, &key.weight, &key.bias, &value.weight, &value.bias};
  }
};

}  // namespace tgnt::nn
