#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tgnt/error.hpp"
#include "tgnt/nn/tensor.hpp"

namespace tgnt::nn {

struct AdamConfig {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

// Adam with bias correction. Moments are kept per parameter tensor, in the
// order of the ParamList given to step().
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t steps{0};

  friend auto operator==(const AdamState&, const AdamState&) -> bool = default;
};

inline void adam_step(AdamState& state, const ParamList& params, const AdamConfig& cfg) {
  for (const auto* p : params)
    for (double g : p->grad)
      if (!std::isfinite(g))
        throw DivergenceError("nn", "non-finite gradient in optimizer step");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw ShapeError("adam: parameter list changed between steps");
  ++state.steps;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = *params[t];
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      p.value[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

}  // namespace tgnt::nn
