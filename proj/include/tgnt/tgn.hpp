#pragma once

// Temporal graph network: message function, GRU memory updater, cosine time
// encoder, one-layer attention readout and an MLP link decoder, together with
// per-batch training/evaluation passes and parameter accounting.
//
// Batch protocol (train mode):
//   1. replay the previous batch's memory update differentiably,
//   2. embed sources, destinations and negatives from pre-batch state,
//   3. score, BCE (+ alpha * structmap MSE), backward, optimizer step,
//   4. compute messages from pre-batch memory, update memory and neighbors.
// Step 1 reproduces exactly the memory rows written by step 4 of the previous
// batch (no parameter change happens in between), which is how the message
// function, updater and time encoder receive gradient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/error.hpp"
#include "tgnt/matrix.hpp"
#include "tgnt/memory.hpp"
#include "tgnt/nn/layers.hpp"
#include "tgnt/nn/optim.hpp"
#include "tgnt/nn/tensor.hpp"
#include "tgnt/structmap.hpp"

namespace tgnt {

struct TgnConfig {
  std::size_t memory_dim{32};
  std::size_t embedding_dim{32};
  std::size_t time_dim{16};
  std::size_t edge_dim{0};
  std::vector<std::size_t> message_hidden{32};
  std::vector<std::size_t> decoder_hidden{32};
  std::size_t num_neighbors{10};

  [[nodiscard]] auto message_input_dim() const -> std::size_t {
    return 2 * memory_dim + time_dim + edge_dim;
  }
  [[nodiscard]] auto query_dim() const -> std::size_t { return memory_dim + time_dim; }
  [[nodiscard]] auto neighbor_dim() const -> std::size_t {
    return memory_dim + edge_dim + time_dim;
  }

  friend auto operator==(const TgnConfig&, const TgnConfig&) -> bool = default;
};

struct TgnParams {
  TgnConfig config;
  nn::Mlp message;
  nn::GruCell updater;
  nn::TimeEncoder time_encoder;
  nn::TemporalAttention attention;
  nn::Linear skip;
  nn::Mlp decoder;

  TgnParams() = default;
  explicit TgnParams(const TgnConfig& c)
      : config(validated(c)),
        message(nn::MlpSpec{c.message_input_dim(), c.message_hidden, c.memory_dim}, "message"),
        updater(c.memory_dim, c.memory_dim),
        time_encoder(c.time_dim),
        attention(c.query_dim(), c.neighbor_dim(), c.neighbor_dim(), c.embedding_dim),
        skip(c.query_dim(), c.embedding_dim, "readout.skip"),
        decoder(nn::MlpSpec{2 * c.embedding_dim, c.decoder_hidden, 1}, "decoder") {}

  static auto validated(const TgnConfig& c) -> const TgnConfig& {
    if (c.memory_dim == 0 || c.embedding_dim == 0 || c.time_dim == 0)
      throw ConfigError("tgn", "memory, embedding and time dimensions must be >= 1");
    if (c.num_neighbors == 0) throw ConfigError("tgn", "num_neighbors must be >= 1");
    for (auto h : c.message_hidden)
      if (h == 0) throw ConfigError("tgn", "message_hidden widths must be >= 1");
    for (auto h : c.decoder_hidden)
      if (h == 0) throw ConfigError("tgn", "decoder_hidden widths must be >= 1");
    return c;
  }

  template <class Gen>
  void init(Gen& gen, double time_span) {
    message.init(gen);
    updater.init(gen);
    time_encoder.init(time_span);
    attention.init(gen);
    skip.init(gen);
    decoder.init(gen);
  }

  auto named_params() -> std::vector<std::pair<std::string, nn::Tensor*>> {
    std::vector<std::pair<std::string, nn::Tensor*>> out;
    auto add_mlp = [&](const std::string& prefix, nn::Mlp& m) {
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        out.emplace_back(prefix + ".layer" + std::to_string(i) + ".weight", &m.layers[i].weight);
        out.emplace_back(prefix + ".layer" + std::to_string(i) + ".bias", &m.layers[i].bias);
      }
    };
    add_mlp("message", message);
    out.emplace_back("updater.input.weight", &updater.input_map.weight);
    out.emplace_back("updater.input.bias", &updater.input_map.bias);
    out.emplace_back("updater.hidden.weight", &updater.hidden_map.weight);
    out.emplace_back("updater.hidden.bias", &updater.hidden_map.bias);
    out.emplace_back("time_encoder.omega", &time_encoder.omega);
    out.emplace_back("time_encoder.phase", &time_encoder.phase);
    out.emplace_back("readout.query.weight", &attention.query.weight);
    out.emplace_back("readout.query.bias", &attention.query.bias);
    out.emplace_back("readout.key.weight", &attention.key.weight);
    out.emplace_back("readout.key.bias", &attention.key.bias);
    out.emplace_back("readout.value.weight", &attention.value.weight);
    out.emplace_back("readout.value.bias", &attention.value.bias);
    out.emplace_back("readout.skip.weight", &skip.weight);
    out.emplace_back("readout.skip.bias", &skip.bias);
    add_mlp("decoder", decoder);
    return out;
  }

  auto params() -> nn::ParamList {
    nn::ParamList p;
    for (auto& [name, t] : named_params()) p.push_back(t);
    return p;
  }

  // Parameters on the memory pathway: message function, updater, time encoder.
  auto memory_params() -> nn::ParamList {
    nn::ParamList p = message.params();
    for (auto* t : updater.params()) p.push_back(t);
    for (auto* t : time_encoder.params()) p.push_back(t);
    return p;
  }
};

// Messages for one batch after keep-latest reduction, one row per node.
struct MessageSet {
  std::vector<NodeId> nodes;
  Matrix self_memory;   // pre-update memory of the node
  Matrix other_memory;  // pre-update memory of the counterpart
  std::vector<double> dt;
  Matrix edge_feat;
  std::vector<double> timestamps;
  Matrix messages;  // message-function output

  [[nodiscard]] auto empty() const -> bool { return nodes.empty(); }
  friend auto operator==(const MessageSet&, const MessageSet&) -> bool = default;
};

inline auto message_inputs(const TgnParams& p, const MessageSet& m) -> Matrix {
  const Matrix te = p.time_encoder.forward(m.dt);
  return nn::hconcat({&m.self_memory, &m.other_memory, &te, &m.edge_feat});
}

// Raw message for u from event (u, v, t, e): [mem_u | mem_v | te(t - last_u) | e],
// passed through the message MLP. The latest event touching a node wins
// (timestamp, then stream order).
inline auto compute_messages(const EventStream& stream, const EventBatch& batch,
                             const MemoryStore& store, const TgnParams& p) -> MessageSet {
  const std::size_t dm = p.config.memory_dim;
  const std::size_t de = p.config.edge_dim;
  if (store.dim() != dm) throw ShapeError("tgn: memory dimension mismatch");
  std::map<NodeId, std::size_t> slot;
  std::vector<NodeId> nodes;
  struct Raw {
    NodeId other;
    double t;
    const std::vector<double>* feat;
  };
  std::vector<Raw> raw;
  for (const auto& e : batch.view(stream)) {
    if (e.src >= store.num_nodes() || e.dst >= store.num_nodes())
      throw ValidationError("tgn", "event endpoint exceeds memory capacity");
    if (e.edge_feat.size() != de) throw ShapeError("tgn: edge feature dimension mismatch");
    for (auto [u, v] : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
      auto [it, inserted] = slot.try_emplace(u, nodes.size());
      if (inserted) {
        nodes.push_back(u);
        raw.push_back({v, e.timestamp, &e.edge_feat});
      } else {
        raw[it->second] = {v, e.timestamp, &e.edge_feat};
      }
    }
  }
  MessageSet m;
  m.nodes = nodes;
  const std::size_t n = nodes.size();
  m.self_memory = Matrix(n, dm);
  m.other_memory = Matrix(n, dm);
  m.edge_feat = Matrix(n, de);
  m.dt.resize(n);
  m.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = nodes[i];
    const auto& r = raw[i];
    std::copy_n(store.memory.row(u).begin(), dm, m.self_memory.row(i).begin());
    std::copy_n(store.memory.row(r.other).begin(), dm, m.other_memory.row(i).begin());
    std::copy(r.feat->begin(), r.feat->end(), m.edge_feat.row(i).begin());
    m.dt[i] = store.elapsed(u, r.t);
    m.timestamps[i] = r.t;
  }
  if (n > 0) m.messages = p.message.forward(message_inputs(p, m));
  return m;
}

// mem_u <- GRU(mem_u, msg_u); last_update_u <- message timestamp.
inline void update_memory(MemoryStore& store, const MessageSet& m, const TgnParams& p) {
  if (m.empty()) return;
  const Matrix updated = p.updater.forward(m.self_memory, m.messages);
  for (double v : updated.data())
    if (!std::isfinite(v)) throw DivergenceError("tgn", "non-finite memory after update");
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const auto u = m.nodes[i];
    std::copy(updated.row(i).begin(), updated.row(i).end(), store.memory.row(u).begin());
    store.last_update[u] = std::max(store.last_update[u], m.timestamps[i]);
  }
}

// Mutable streaming state owned by one training/evaluation loop.
struct TgnState {
  MemoryStore store;
  NeighborCache cache;
  MessageSet pending;  // last applied update, replayed in train mode

  TgnState() = default;
  TgnState(std::size_t num_nodes, const TgnConfig& c)
      : store(num_nodes, c.memory_dim), cache(num_nodes, c.num_neighbors) {}

  friend auto operator==(const TgnState&, const TgnState&) -> bool = default;
};

// Structmap inputs for one batch: unique event endpoints (first-appearance
// order) and their standardized window features.
struct BatchFeatures {
  std::vector<NodeId> nodes;
  Matrix standardized;
};

struct BatchOutput {
  double tlp_loss{};
  double structmap_loss{};
  double total_loss{};
  bool has_structmap{false};
  std::vector<double> pos_logits;
  Matrix neg_logits;  // events x k
};

inline auto softplus(double x) -> double {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// 0.5 * (mean BCE over positives + mean BCE over negatives), from logits.
inline auto bce_loss(std::span<const double> pos_logits, std::span<const double> neg_logits)
    -> double {
  double lp = 0.0;
  for (double l : pos_logits) lp += softplus(l) - l;
  double ln = 0.0;
  for (double l : neg_logits) ln += softplus(l);
  double out = 0.0;
  if (!pos_logits.empty()) out += 0.5 * lp / static_cast<double>(pos_logits.size());
  if (!neg_logits.empty()) out += 0.5 * ln / static_cast<double>(neg_logits.size());
  return out;
}

// One forward pass over a batch, keeping the activations needed for backward.
class BatchPass {
 public:
  BatchPass(TgnParams& params, const TgnState& state, const EventStream& stream,
            const EventBatch& batch, const std::vector<std::vector<NodeId>>& negatives,
            bool differentiable, StructMapParams* structmap = nullptr,
            const BatchFeatures* features = nullptr)
      : p_(params),
        s_(state),
        stream_(stream),
        batch_(batch),
        negatives_(negatives),
        differentiable_(differentiable),
        sm_(structmap),
        features_(features) {
    if (negatives.size() != batch.size())
      throw ShapeError("tgn: one negative list per event required");
    replay_pending();
    embed_all();
    decode();
    if (sm_ && features_ && !features_->nodes.empty()) structmap_forward_pass();
  }

  [[nodiscard]] auto output() const -> const BatchOutput& { return out_; }

  // Accumulates d(total_loss)/d(params) into the grad buffers.
  void backward() {
    if (!differentiable_) throw Error("tgn", "backward on a non-differentiable pass");
    const std::size_t dm = p_.config.memory_dim;
    dmem_ = Matrix(pending_rows_.size(), dm);

    // Decoder.
    const std::size_t np = out_.pos_logits.size();
    const std::size_t nn_ = out_.neg_logits.size();
    Matrix dlogit(pairs_.size(), 1);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double l = logits_[i];
      dlogit(i, 0) = pairs_[i].label > 0.5 ? 0.5 * (nn::sigmoid(l) - 1.0) / static_cast<double>(np)
                                           : 0.5 * nn::sigmoid(l) / static_cast<double>(nn_);
    }
    const Matrix dec_in_grad = p_.decoder.backward(decoder_cache_, dlogit);
    const std::size_t dn = p_.config.embedding_dim;
    for (auto& item : items_) item.demb.assign(dn, 0.0);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      auto& a = items_[pairs_[i].src_item].demb;
      auto& b = items_[pairs_[i].dst_item].demb;
      for (std::size_t j = 0; j < dn; ++j) {
        a[j] += dec_in_grad(i, j);
        b[j] += dec_in_grad(i, dn + j);
      }
    }

    // Readout.
    const std::size_t dt = p_.config.time_dim;
    const std::size_t de = p_.config.edge_dim;
    for (auto& item : items_) {
      Matrix demb(1, dn);
      std::copy(item.demb.begin(), item.demb.end(), demb.row(0).begin());
      Matrix dq = p_.skip.backward(item.query_in, demb);
      auto g = p_.attention.backward(item.attention, item.demb);
      for (std::size_t j = 0; j < dq.cols(); ++j) dq(0, j) += g.dquery(0, j);
      add_memory_grad(item.node, dq.row(0).subspan(0, dm));
      p_.time_encoder.backward(std::span<const double>(&item.query_dt, 1),
                               nn::column_block(dq, dm, dt));
      if (!item.neighbors.empty()) {
        Matrix dkv = g.dkey;
        for (std::size_t k = 0; k < dkv.size(); ++k) dkv.data()[k] += g.dvalue.data()[k];
        for (std::size_t r = 0; r < item.neighbors.size(); ++r)
          add_memory_grad(item.neighbors[r], dkv.row(r).subspan(0, dm));
        p_.time_encoder.backward(item.neighbor_dt, nn::column_block(dkv, dm + de, dt));
      }
    }

    // Structural map.
    if (out_.has_structmap) {
      auto r = structmap_loss_backward(*sm_, features_->standardized, sm_targets_, sm_->alpha);
      if (sm_->coupled)
        for (std::size_t i = 0; i < features_->nodes.size(); ++i)
          add_memory_grad(features_->nodes[i], r.dtarget.row(i));
    }

    // Replayed memory update.
    if (!pending_rows_.empty()) {
      auto g = p_.updater.backward(gru_cache_, dmem_);
      const Matrix din = p_.message.backward(message_cache_, g.dx);
      p_.time_encoder.backward(s_.pending.dt, nn::column_block(din, 2 * dm, dt));
    }
  }

 private:
  struct Item {
    NodeId node{};
    double t{};
    Matrix query_in;
    double query_dt{};
    std::vector<NodeId> neighbors;
    std::vector<double> neighbor_dt;
    Matrix neighbor_in;
    nn::TemporalAttention::Cache attention;
    std::vector<double> emb;
    std::vector<double> demb;
  };
  struct Pair {
    std::size_t src_item;
    std::size_t dst_item;
    double label;
  };

  auto memory_row(NodeId v) const -> std::span<const double> {
    if (differentiable_) {
      auto it = pending_rows_.find(v);
      if (it != pending_rows_.end()) return replayed_.row(it->second);
    }
    return s_.store.memory.row(v);
  }

  void add_memory_grad(NodeId v, std::span<const double> g) {
    auto it = pending_rows_.find(v);
    if (it == pending_rows_.end()) return;
    auto row = dmem_.row(it->second);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += g[j];
  }

  void replay_pending() {
    if (!differentiable_ || s_.pending.empty()) return;
    const auto& m = s_.pending;
    for (std::size_t i = 0; i < m.nodes.size(); ++i) pending_rows_.emplace(m.nodes[i], i);
    const Matrix msg = p_.message.forward(message_inputs(p_, m), &message_cache_);
    replayed_ = p_.updater.forward(m.self_memory, msg, &gru_cache_);
  }

  auto embed(NodeId v, double t) -> std::size_t {
    const auto key = std::pair{v, t};
    if (auto it = item_of_.find(key); it != item_of_.end()) return it->second;
    const std::size_t dm = p_.config.memory_dim;
    const std::size_t de = p_.config.edge_dim;
    Item item;
    item.node = v;
    item.t = t;
    item.query_dt = s_.store.elapsed(v, t);
    const Matrix tq = p_.time_encoder.forward(std::span<const double>(&item.query_dt, 1));
    item.query_in = Matrix(1, p_.config.query_dim());
    auto mv = memory_row(v);
    std::copy(mv.begin(), mv.end(), item.query_in.row(0).begin());
    std::copy(tq.row(0).begin(), tq.row(0).end(), item.query_in.row(0).begin() + dm);

    const auto& nbrs = s_.cache.entries[v];
    item.neighbor_in = Matrix(nbrs.size(), p_.config.neighbor_dim());
    for (const auto& e : nbrs) {
      item.neighbors.push_back(e.neighbor);
      item.neighbor_dt.push_back(t - e.timestamp);
    }
    const Matrix tn = p_.time_encoder.forward(item.neighbor_dt);
    for (std::size_t r = 0; r < nbrs.size(); ++r) {
      auto row = item.neighbor_in.row(r);
      auto mn = memory_row(nbrs[r].neighbor);
      std::copy(mn.begin(), mn.end(), row.begin());
      std::copy(nbrs[r].edge_feat.begin(), nbrs[r].edge_feat.end(), row.begin() + dm);
      std::copy(tn.row(r).begin(), tn.row(r).end(), row.begin() + dm + de);
    }
    item.emb = p_.attention.forward(item.query_in, item.neighbor_in, item.neighbor_in, {},
                                    &item.attention);
    const Matrix sk = p_.skip.forward(item.query_in);
    for (std::size_t j = 0; j < item.emb.size(); ++j) item.emb[j] += sk(0, j);
    items_.push_back(std::move(item));
    item_of_.emplace(key, items_.size() - 1);
    return items_.size() - 1;
  }

  void embed_all() {
    std::size_t i = 0;
    for (const auto& e : batch_.view(stream_)) {
      const auto s = embed(e.src, e.timestamp);
      const auto d = embed(e.dst, e.timestamp);
      pairs_.push_back({s, d, 1.0});
      for (auto n : negatives_[i]) pairs_.push_back({s, embed(n, e.timestamp), 0.0});
      ++i;
    }
  }

  void decode() {
    const std::size_t dn = p_.config.embedding_dim;
    Matrix in(pairs_.size(), 2 * dn);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& a = items_[pairs_[i].src_item].emb;
      const auto& b = items_[pairs_[i].dst_item].emb;
      std::copy(a.begin(), a.end(), in.row(i).begin());
      std::copy(b.begin(), b.end(), in.row(i).begin() + dn);
    }
    const Matrix z = p_.decoder.forward(in, differentiable_ ? &decoder_cache_ : nullptr);
    logits_.resize(pairs_.size());
    const std::size_t k = negatives_.empty() ? 0 : negatives_.front().size();
    out_.neg_logits = Matrix(batch_.size(), k);
    std::vector<double> negs;
    std::size_t ev = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      logits_[i] = z(i, 0);
      if (pairs_[i].label > 0.5) {
        if (i > 0) ++ev;
        j = 0;
        out_.pos_logits.push_back(z(i, 0));
      } else {
        if (j < k) out_.neg_logits(ev, j) = z(i, 0);
        ++j;
        negs.push_back(z(i, 0));
      }
    }
    out_.tlp_loss = bce_loss(out_.pos_logits, negs);
    out_.total_loss = out_.tlp_loss;
  }

  void structmap_forward_pass() {
    const std::size_t dm = p_.config.memory_dim;
    sm_targets_ = Matrix(features_->nodes.size(), dm);
    for (std::size_t i = 0; i < features_->nodes.size(); ++i) {
      auto r = memory_row(features_->nodes[i]);
      std::copy(r.begin(), r.end(), sm_targets_.row(i).begin());
    }
    out_.structmap_loss = structmap_loss(*sm_, features_->standardized, sm_targets_);
    out_.has_structmap = true;
    out_.total_loss = out_.tlp_loss + sm_->alpha * out_.structmap_loss;
  }

  TgnParams& p_;
  const TgnState& s_;
  const EventStream& stream_;
  const EventBatch& batch_;
  const std::vector<std::vector<NodeId>>& negatives_;
  bool differentiable_;
  StructMapParams* sm_;
  const BatchFeatures* features_;

  std::unordered_map<NodeId, std::size_t> pending_rows_;
  Matrix replayed_;
  nn::Mlp::Cache message_cache_;
  nn::GruCell::Cache gru_cache_;
  std::vector<Item> items_;
  std::map<std::pair<NodeId, double>, std::size_t> item_of_;
  std::vector<Pair> pairs_;
  nn::Mlp::Cache decoder_cache_;
  std::vector<double> logits_;
  Matrix sm_targets_;
  Matrix dmem_;
  BatchOutput out_;
};

// Applies a batch's events to memory and the neighbor cache, recording the
// update for replay.
inline void apply_batch(TgnState& s, const EventStream& stream, const EventBatch& batch,
                        const TgnParams& p) {
  MessageSet m = compute_messages(stream, batch, s.store, p);
  update_memory(s.store, m, p);
  s.pending = std::move(m);
  s.cache.insert_events(batch.view(stream));
}

struct StepOptions {
  bool train{false};
  bool apply_updates{true};
  StructMapParams* structmap{nullptr};
  const BatchFeatures* features{nullptr};
  nn::AdamState* optimizer{nullptr};
  nn::AdamConfig adam{};
  // Parameters the optimizer updates; gradients of all others are discarded.
  nn::ParamList trainable;
  std::size_t batch_index{DivergenceError::npos};
};

// Predict-then-update for one batch.
inline auto process_batch(TgnParams& p, TgnState& s, const EventStream& stream,
                          const EventBatch& batch,
                          const std::vector<std::vector<NodeId>>& negatives,
                          const StepOptions& opt) -> BatchOutput {
  BatchOutput out;
  {
    BatchPass pass(p, s, stream, batch, negatives, opt.train, opt.structmap, opt.features);
    out = pass.output();
    if (!std::isfinite(out.total_loss))
      throw DivergenceError("tgn", "non-finite loss", opt.batch_index);
    if (opt.train) {
      if (!opt.optimizer) throw ConfigError("tgn", "training step without optimizer");
      nn::ParamList all = p.params();
      if (opt.structmap)
        for (auto* t : opt.structmap->params()) all.push_back(t);
      nn::zero_grad(all);
      pass.backward();
      try {
        nn::adam_step(*opt.optimizer, opt.trainable, opt.adam);
      } catch (const DivergenceError& e) {
        throw DivergenceError("tgn", e.what(), opt.batch_index);
      }
    }
  }
  if (opt.apply_updates) {
    try {
      apply_batch(s, stream, batch, p);
    } catch (const DivergenceError& e) {
      throw DivergenceError("tgn", e.what(), opt.batch_index);
    }
  }
  return out;
}

struct EpochStats {
  std::vector<double> total;
  std::vector<double> tlp;
  std::vector<double> structmap;
  std::vector<std::size_t> batch_sizes;

  [[nodiscard]] static auto weighted_mean(const std::vector<double>& v,
                                          const std::vector<std::size_t>& w) -> double {
    double s = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += v[i] * static_cast<double>(w[i]);
      n += static_cast<double>(w[i]);
    }
    return n > 0.0 ? s / n : 0.0;
  }
  [[nodiscard]] auto mean_tlp() const -> double { return weighted_mean(tlp, batch_sizes); }
  [[nodiscard]] auto mean_total() const -> double { return weighted_mean(total, batch_sizes); }
};

// One chronological pass over `batches` in train mode. `features`, when
// given, holds one entry per batch.
inline auto train_epoch(TgnParams& p, StructMapParams* sm, TgnState& s,
                        const EventStream& stream, const std::vector<EventBatch>& batches,
                        const std::vector<BatchFeatures>* features, nn::AdamState& optimizer,
                        const nn::AdamConfig& adam, const nn::ParamList& trainable,
                        std::size_t num_negatives, Rng& rng) -> EpochStats {
  EpochStats stats;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto negs = sample_negatives(stream, batches[b], stream.num_nodes, num_negatives, rng);
    StepOptions opt;
    opt.train = true;
    opt.structmap = sm;
    opt.features = features ? &(*features)[b] : nullptr;
    opt.optimizer = &optimizer;
    opt.adam = adam;
    opt.trainable = trainable;
    opt.batch_index = b;
    const auto out = process_batch(p, s, stream, batches[b], negs, opt);
    stats.total.push_back(out.total_loss);
    stats.tlp.push_back(out.tlp_loss);
    stats.structmap.push_back(out.structmap_loss);
    stats.batch_sizes.push_back(batches[b].size());
  }
  return stats;
}

// Parameter accounting. `closed_form` is derived from the configuration
// alone and must equal `actual`.
struct ComponentCount {
  std::string name;
  std::size_t actual{};
  std::size_t weights{};
  std::size_t biases{};
  [[nodiscard]] auto closed_form() const -> std::size_t { return weights + biases; }
};

struct ParameterCounts {
  std::size_t num_nodes{};
  std::size_t memory_store{};           // N * d_M
  std::size_t node_embedding_state{};   // N * d_N, intermediate, not trainable
  std::vector<ComponentCount> components;
  // Reference values written with the published notation: the message MLP
  // over 2*d_N + d_E inputs, and an MLP memory updater over d_M + d_E inputs
  // with the message MLP's hidden sizes. Weights only.
  std::size_t message_formula_dn{};
  std::size_t message_formula_dm{};
  std::size_t updater_formula_mlp{};

  [[nodiscard]] auto trainable() const -> std::size_t {
    std::size_t n = 0;
    for (const auto& c : components) n += c.actual;
    return n;
  }
  [[nodiscard]] auto total() const -> std::size_t { return memory_store + trainable(); }
  [[nodiscard]] auto memory_fraction() const -> double {
    return static_cast<double>(memory_store) / static_cast<double>(total());
  }
};

inline auto count_parameters(TgnParams& p, std::size_t num_nodes) -> ParameterCounts {
  const auto& c = p.config;
  ParameterCounts out;
  out.num_nodes = num_nodes;
  out.memory_store = num_nodes * c.memory_dim;
  out.node_embedding_state = num_nodes * c.embedding_dim;

  const auto message_spec = nn::MlpSpec{c.message_input_dim(), c.message_hidden, c.memory_dim};
  const auto decoder_spec = nn::MlpSpec{2 * c.embedding_dim, c.decoder_hidden, 1};
  out.components.push_back({"message_mlp", nn::count(p.message.params()),
                            message_spec.weight_count(), message_spec.bias_count()});
  out.components.push_back({"memory_updater_gru", nn::count(p.updater.params()),
                            3 * c.memory_dim * c.memory_dim + 3 * c.memory_dim * c.memory_dim,
                            6 * c.memory_dim});
  out.components.push_back({"time_encoder", nn::count(p.time_encoder.params()), c.time_dim,
                            c.time_dim});
  nn::ParamList readout = p.attention.params();
  readout.push_back(&p.skip.weight);
  readout.push_back(&p.skip.bias);
  out.components.push_back({"readout_attention", nn::count(readout),
                            2 * c.query_dim() * c.embedding_dim +
                                2 * c.neighbor_dim() * c.embedding_dim,
                            4 * c.embedding_dim});
  out.components.push_back({"decoder_mlp", nn::count(p.decoder.params()),
                            decoder_spec.weight_count(), decoder_spec.bias_count()});

  out.message_formula_dn =
      nn::MlpSpec{2 * c.embedding_dim + c.edge_dim, c.message_hidden, c.memory_dim}.weight_count();
  out.message_formula_dm =
      nn::MlpSpec{2 * c.memory_dim + c.edge_dim, c.message_hidden, c.memory_dim}.weight_count();
  out.updater_formula_mlp =
      nn::MlpSpec{c.memory_dim + c.edge_dim, c.message_hidden, c.memory_dim}.weight_count();
  return out;
}

}  // namespace tgnt
