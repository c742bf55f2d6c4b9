#pragma once

// Structural map: a three-layer perceptron from standardized structural
// features to memory vectors, used to cold-start the memory of unseen nodes.

#include <cstddef>
#include <string>
#include <vector>

#include "tgnt/error.hpp"
#include "tgnt/matrix.hpp"
#include "tgnt/memory.hpp"
#include "tgnt/nn/layers.hpp"
#include "tgnt/structfeat.hpp"

namespace tgnt {

struct StructMapParams {
  nn::Mlp mlp;
  double alpha{1.0};
  // When set, the regression loss also back-propagates into memory targets.
  bool coupled{false};

  StructMapParams() = default;
  StructMapParams(std::size_t feature_dim, std::size_t hidden, std::size_t memory_dim,
                  double loss_weight = 1.0)
      : mlp(nn::MlpSpec{feature_dim, {hidden, hidden}, memory_dim}, "structmap"),
        alpha(loss_weight) {
    if (alpha < 0.0) throw ConfigError("structmap", "alpha must be >= 0");
  }

  [[nodiscard]] auto feature_dim() const -> std::size_t { return mlp.spec.input_dim; }
  [[nodiscard]] auto memory_dim() const -> std::size_t { return mlp.spec.output_dim; }

  template <class Gen>
  void init(Gen& gen) {
    mlp.init(gen);
  }

  auto params() -> nn::ParamList { return mlp.params(); }
};

inline auto structmap_forward(const StructMapParams& sm, const StructuralFeatureVector& f)
    -> std::vector<double> {
  if (!f.standardized)
    throw ValidationError("structmap", "input features must be standardized");
  Matrix x(1, f.values.size());
  std::copy(f.values.begin(), f.values.end(), x.row(0).begin());
  const Matrix y = sm.mlp.forward(x);
  return {y.row(0).begin(), y.row(0).end()};
}

// Mean squared error over all entries of the batch.
inline auto mean_squared_error(const Matrix& pred, const Matrix& target) -> double {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("structmap: prediction/target shape mismatch");
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

// Rows of `features` are standardized feature vectors; targets are the
// matching memory rows, treated as constants.
inline auto structmap_loss(const StructMapParams& sm, const Matrix& features,
                           const Matrix& targets) -> double {
  return mean_squared_error(sm.mlp.forward(features), targets);
}

struct StructMapLossResult {
  double loss{};
  Matrix dtarget;  // d(weight * loss) / d target
};

// Forward + backward of weight * MSE. Parameter gradients are accumulated.
inline auto structmap_loss_backward(StructMapParams& sm, const Matrix& features,
                                    const Matrix& targets, double weight)
    -> StructMapLossResult {
  nn::Mlp::Cache cache;
  const Matrix pred = sm.mlp.forward(features, &cache);
  StructMapLossResult out{mean_squared_error(pred, targets),
                          Matrix(targets.rows(), targets.cols())};
  if (pred.empty()) return out;
  const double scale = 2.0 * weight / static_cast<double>(pred.size());
  Matrix dpred(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = scale * (pred.data()[i] - targets.data()[i]);
    dpred.data()[i] = g;
    out.dtarget.data()[i] = -g;
  }
  sm.mlp.backward(cache, dpred);
  return out;
}

// Initializes the memory of a never-seen node from its window features.
// Returns false (and appends to `audit`) when the node was already initialized.
inline auto cold_start(MemoryStore& store, NodeId node, const WindowGraph& window, double t,
                       const FeatureStandardizer& standardizer, const StructMapParams& sm,
                       std::size_t positional_dim, std::vector<std::string>* audit = nullptr)
    -> bool {
  if (store.seen(node)) {
    if (audit)
      audit->push_back("cold_start skipped: node " + std::to_string(node) +
                       " already initialized");
    return false;
  }
  const auto raw = node_features(window, node, positional_dim);
  const auto mem = structmap_forward(sm, standardizer.apply(raw));
  std::copy(mem.begin(), mem.end(), store.memory.row(node).begin());
  store.last_update[node] = t;
  return true;
}

// Same as cold_start, with the node's standardized features supplied.
inline auto cold_start(MemoryStore& store, NodeId node, const StructuralFeatureVector& features,
                       double t, const StructMapParams& sm,
                       std::vector<std::string>* audit = nullptr) -> bool {
  if (store.seen(node)) {
    if (audit)
      audit->push_back("cold_start skipped: node " + std::to_string(node) +
                       " already initialized");
    return false;
  }
  const auto mem = structmap_forward(sm, features);
  std::copy(mem.begin(), mem.end(), store.memory.row(node).begin());
  store.last_update[node] = t;
  return true;
}

}  // namespace tgnt
