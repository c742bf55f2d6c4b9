#pragma once

// Test-side oracles and fixtures shared by the unit tests and the acceptance
// binary. Every oracle is written from the textbook definition, independently
// of the library code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tgnt/config.hpp"
#include "tgnt/ctdg.hpp"
#include "tgnt/nn/grad_check.hpp"
#include "tgnt/nn/layers.hpp"
#include "tgnt/structfeat.hpp"
#include "tgnt/structmap.hpp"
#include "tgnt/tgn.hpp"

namespace tgnt::test {

// ------------------------------------------------------------ graph oracles

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

inline auto random_graph(Rng& rng, std::size_t max_nodes = 12) -> SimpleGraph {
  std::uniform_int_distribution<std::size_t> nd(1, max_nodes);
  const std::size_t n = nd(rng);
  std::uniform_real_distribution<double> dens(0.1, 0.7);
  std::bernoulli_distribution coin(dens(rng));
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) e.emplace_back(i, j);
  return SimpleGraph::from_edges(n, e);
}

// Floyd-Warshall hop distances.
inline auto all_pairs_distances(const SimpleGraph& g) -> std::vector<std::vector<int>> {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (auto j : g.adj[i]) d[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Enumerates every shortest s-t path explicitly and counts how many pass
// through each interior vertex. Unordered pairs are counted once.
inline auto betweenness_oracle(const SimpleGraph& g) -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  const auto d = all_pairs_distances(g);
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (d[s][t] >= kInf) continue;
      std::vector<long> through(n, 0);
      long paths = 0;
      std::vector<std::size_t> path{s};
      std::function<void(std::size_t)> walk = [&](std::size_t u) {
        if (u == t) {
          ++paths;
          for (std::size_t i = 1; i + 1 < path.size(); ++i) ++through[path[i]];
          return;
        }
        for (auto w : g.adj[u])
          if (d[s][w] == d[s][u] + 1 && d[w][t] == d[u][t] - 1) {
            path.push_back(w);
            walk(w);
            path.pop_back();
          }
      };
      walk(s);
      for (std::size_t v = 0; v < n; ++v)
        if (through[v]) out[v] += static_cast<double>(through[v]) / static_cast<double>(paths);
    }
  return out;
}

// Wasserman-Faust closeness: (r / (n - 1)) * (r / sum of distances), where r
// is the number of vertices reachable from v.
inline auto closeness_oracle(const SimpleGraph& g) -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  const auto d = all_pairs_distances(g);
  std::vector<double> out(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double sum = 0.0;
    double reach = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (u != v && d[v][u] < kInf) {
        sum += d[v][u];
        reach += 1.0;
      }
    if (sum > 0.0) out[v] = (reach / static_cast<double>(n - 1)) * (reach / sum);
  }
  return out;
}

inline auto clustering_oracle(const SimpleGraph& g, std::size_t v) -> double {
  const std::size_t n = g.num_nodes();
  double links = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (g.has_edge(v, a) && g.has_edge(v, b) && g.has_edge(a, b)) links += 1.0;
  const double k = static_cast<double>(g.degree(v));
  return k < 2 ? 0.0 : links / (k * (k - 1) / 2.0);
}

// Diagonal entries of successive powers of the row-stochastic transition matrix.
inline auto rwpe_oracle(const SimpleGraph& g, std::size_t v, std::size_t steps)
    -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : g.adj[i]) p[i][j] = 1.0 / static_cast<double>(g.degree(i));
  auto power = p;
  std::vector<double> out;
  for (std::size_t k = 0; k < steps; ++k) {
    out.push_back(power[v][v]);
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) next[i][j] += power[i][m] * p[m][j];
    power = std::move(next);
  }
  return out;
}

// Modularity straight from the definition over the dense adjacency matrix.
inline auto modularity_oracle(const WeightedGraph& g, const std::vector<std::size_t>& c)
    -> double {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& arc : g.adj[i]) a[i][arc.to] = arc.weight;
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

// Fraction of nodes whose found community agrees with the planted 2-block
// labelling, after merging each found community into the planted block that
// holds most of its nodes. A labelling that merges both blocks scores 0.5.
inline auto planted_agreement(const std::vector<std::size_t>& found,
                              const std::vector<std::size_t>& planted) -> double {
  std::vector<std::pair<std::size_t, std::size_t>> votes;  // per found community
  for (std::size_t v = 0; v < found.size(); ++v) {
    if (found[v] >= votes.size()) votes.resize(found[v] + 1);
    (planted[v] == 0 ? votes[found[v]].first : votes[found[v]].second) += 1;
  }
  std::size_t right = 0;
  bool uses0 = false, uses1 = false;
  for (const auto& [a, b] : votes) {
    if (a + b == 0) continue;
    right += std::max(a, b);
    (a >= b ? uses0 : uses1) = true;
  }
  if (!(uses0 && uses1)) return 0.5;
  return static_cast<double>(right) / static_cast<double>(found.size());
}

// ---------------------------------------------------------- ranking oracle

// Sorts the true score together with its negatives in descending order and
// averages the 1-based positions of every entry equal to the true score.
inline auto rank_oracle(double pos, const std::vector<double>& negs) -> double {
  std::vector<std::pair<double, bool>> all{{pos, true}};
  for (double n : negs) all.emplace_back(n, false);
  std::sort(all.begin(), all.end(), [](auto a, auto b) { return a.first > b.first; });
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].first == pos) {
      sum += static_cast<double>(i + 1);
      count += 1.0;
    }
  return sum / count;
}

// ------------------------------------------------------ correlation oracles

inline auto pearson_oracle(const std::vector<double>& x, const std::vector<double>& y)
    -> double {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

// Rank = 1 + #smaller + (#equal - 1) / 2.
inline auto average_rank_oracle(const std::vector<double>& x) -> std::vector<double> {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) less += 1;
      if (v == x[i]) equal += 1;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

struct CorrelationCase {
  Matrix memory;
  Matrix features;
  double pearson{};
  double spearman{};
};

// Random memory/feature matrices (features rounded to induce ties) with the
// all-pairs Euclidean distance correlations computed by brute force.
inline auto correlation_case(Rng& rng, std::size_t max_nodes = 30) -> CorrelationCase {
  std::uniform_int_distribution<std::size_t> nd(3, max_nodes);
  const std::size_t n = nd(rng);
  std::normal_distribution<double> g(0.0, 1.0);
  CorrelationCase c{Matrix(n, 4), Matrix(n, 3)};
  for (auto& v : c.memory.data()) v = g(rng);
  for (auto& v : c.features.data()) v = std::round(g(rng) * 2.0) / 2.0;
  std::vector<double> dm, df;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double a = 0, b = 0;
      for (std::size_t k = 0; k < 4; ++k) a += std::pow(c.memory(i, k) - c.memory(j, k), 2);
      for (std::size_t k = 0; k < 3; ++k) b += std::pow(c.features(i, k) - c.features(j, k), 2);
      dm.push_back(std::sqrt(a));
      df.push_back(std::sqrt(b));
    }
  c.pearson = pearson_oracle(dm, df);
  c.spearman = pearson_oracle(average_rank_oracle(dm), average_rank_oracle(df));
  return c;
}

// ------------------------------------------------------ parameter counting

// Hand-written counts: each affine layer holds in*out weights and out biases.
inline auto mlp_count(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out)
    -> std::size_t {
  std::size_t n = 0;
  std::size_t prev = in;
  for (auto h : hidden) {
    n += prev * h + h;
    prev = h;
  }
  return n + prev * out + out;
}

// Expected per-component counts in the order message, GRU updater, time
// encoder, attention readout, decoder.
inline auto expected_component_counts(const TgnConfig& c) -> std::vector<std::size_t> {
  const std::size_t dm = c.memory_dim, dn = c.embedding_dim, dt = c.time_dim, de = c.edge_dim;
  const std::size_t q = dm + dt, kv = dm + de + dt;
  return {mlp_count(2 * dm + dt + de, c.message_hidden, dm),
          2 * (3 * dm * dm + 3 * dm),
          2 * dt,
          (q * dn + dn) * 2 + (kv * dn + dn) * 2,
          mlp_count(2 * dn, c.decoder_hidden, 1)};
}

inline auto random_tgn_config(Rng& rng) -> TgnConfig {
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::uniform_int_distribution<std::size_t> depth(0, 3);
  TgnConfig c;
  c.memory_dim = dim(rng);
  c.embedding_dim = dim(rng);
  c.time_dim = dim(rng);
  c.edge_dim = dim(rng) % 8;
  c.message_hidden.clear();
  c.decoder_hidden.clear();
  for (std::size_t k = depth(rng); k > 0; --k) c.message_hidden.push_back(dim(rng));
  for (std::size_t k = depth(rng); k > 0; --k) c.decoder_hidden.push_back(dim(rng));
  return c;
}

// ------------------------------------------------- layer gradient instances

inline const nn::GradCheckOptions kLayerCheck{1e-5, 1e-4, 1e-6};
inline const nn::GradCheckOptions kEndToEndCheck{1e-6, 1e-3, 1e-6};

inline auto random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) -> Matrix {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

// Fixed random projection so every output coordinate carries gradient.
inline auto projection_loss(const Matrix& y, const Matrix& w) -> double {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * w.data()[i];
  return s;
}

// Input gradients are checked through a tensor wrapping the input values.
inline auto as_tensor(const Matrix& m) -> nn::Tensor {
  nn::Tensor t({m.rows(), m.cols()});
  t.value = m.data();
  return t;
}

inline auto to_matrix(const nn::Tensor& t, std::size_t r, std::size_t c) -> Matrix {
  Matrix m(r, c);
  m.data() = t.value;
  return m;
}

inline auto linear_gradient_instance(Rng& rng) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  const auto in = dim(rng), out = dim(rng), rows = dim(rng);
  nn::Linear layer(in, out);
  layer.init(rng);
  nn::Tensor x = as_tensor(random_matrix(rows, in, rng));
  const Matrix w = random_matrix(rows, out, rng);
  auto loss = [&] { return projection_loss(layer.forward(to_matrix(x, rows, in)), w); };
  auto backward = [&] {
    const Matrix dx = layer.backward(to_matrix(x, rows, in), w);
    for (std::size_t i = 0; i < dx.size(); ++i) x.grad[i] += dx.data()[i];
  };
  nn::ParamList params = layer.params();
  params.push_back(&x);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

inline auto mlp_gradient_instance(Rng& rng) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  nn::MlpSpec spec{dim(rng), {dim(rng) + 1, dim(rng) + 1}, dim(rng)};
  nn::Mlp mlp(spec);
  mlp.init(rng);
  const std::size_t rows = dim(rng);
  nn::Tensor x = as_tensor(random_matrix(rows, spec.input_dim, rng));
  const Matrix w = random_matrix(rows, spec.output_dim, rng);
  auto loss = [&] { return projection_loss(mlp.forward(to_matrix(x, rows, spec.input_dim)), w); };
  auto backward = [&] {
    nn::Mlp::Cache cache;
    (void)mlp.forward(to_matrix(x, rows, spec.input_dim), &cache);
    const Matrix dx = mlp.backward(cache, w);
    for (std::size_t i = 0; i < dx.size(); ++i) x.grad[i] += dx.data()[i];
  };
  nn::ParamList params = mlp.params();
  params.push_back(&x);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

inline auto gru_gradient_instance(Rng& rng) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  const auto in = dim(rng), d = dim(rng), rows = dim(rng);
  nn::GruCell gru(in, d);
  gru.init(rng);
  nn::Tensor h = as_tensor(random_matrix(rows, d, rng));
  nn::Tensor x = as_tensor(random_matrix(rows, in, rng));
  const Matrix w = random_matrix(rows, d, rng);
  auto loss = [&] {
    return projection_loss(gru.forward(to_matrix(h, rows, d), to_matrix(x, rows, in)), w);
  };
  auto backward = [&] {
    nn::GruCell::Cache c;
    (void)gru.forward(to_matrix(h, rows, d), to_matrix(x, rows, in), &c);
    const auto g = gru.backward(c, w);
    for (std::size_t i = 0; i < g.dh.size(); ++i) h.grad[i] += g.dh.data()[i];
    for (std::size_t i = 0; i < g.dx.size(); ++i) x.grad[i] += g.dx.data()[i];
  };
  nn::ParamList params = gru.params();
  params.push_back(&h);
  params.push_back(&x);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

inline auto time_encoder_gradient_instance(Rng& rng) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  const auto d = dim(rng), n = dim(rng);
  nn::TimeEncoder te(d);
  te.init(10.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& p : te.phase.value) p = g(rng);
  nn::Tensor dt({n});
  for (auto& v : dt.value) v = std::abs(g(rng)) * 3.0;
  const Matrix w = random_matrix(n, d, rng);
  auto loss = [&] { return projection_loss(te.forward(dt.value), w); };
  auto backward = [&] {
    const auto ddt = te.backward(dt.value, w);
    for (std::size_t i = 0; i < n; ++i) dt.grad[i] += ddt[i];
  };
  nn::ParamList params = te.params();
  params.push_back(&dt);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

// With `masked`, every second neighbor row is masked out (row 0 stays active).
inline auto attention_gradient_instance(Rng& rng, bool masked) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  const auto dq = dim(rng), dk = dim(rng), dout = dim(rng), n = dim(rng);
  nn::TemporalAttention att(dq, dk, dk, dout);
  att.init(rng);
  nn::Tensor q = as_tensor(random_matrix(1, dq, rng));
  nn::Tensor kv = as_tensor(random_matrix(n, dk, rng));
  std::vector<bool> mask(n, true);
  if (masked)
    for (std::size_t i = 1; i < n; i += 2) mask[i] = false;
  const Matrix w = random_matrix(1, dout, rng);
  auto loss = [&] {
    const auto kvm = to_matrix(kv, n, dk);
    const auto out = att.forward(to_matrix(q, 1, dq), kvm, kvm, mask);
    double s = 0.0;
    for (std::size_t j = 0; j < dout; ++j) s += out[j] * w(0, j);
    return s;
  };
  auto backward = [&] {
    nn::TemporalAttention::Cache c;
    const auto kvm = to_matrix(kv, n, dk);
    (void)att.forward(to_matrix(q, 1, dq), kvm, kvm, mask, &c);
    const auto g = att.backward(c, w.row(0));
    for (std::size_t i = 0; i < g.dquery.size(); ++i) q.grad[i] += g.dquery.data()[i];
    for (std::size_t i = 0; i < g.dkey.size(); ++i)
      kv.grad[i] += g.dkey.data()[i] + g.dvalue.data()[i];
  };
  nn::ParamList params = att.params();
  params.push_back(&q);
  params.push_back(&kv);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

// Decoder shape [emb_src | emb_dst] -> hidden -> 1 logit under the
// softplus-form BCE of a mixed positive/negative batch.
inline auto decoder_gradient_instance(Rng& rng) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  const auto de = dim(rng), h = dim(rng) + 1, rows = dim(rng) + 1;
  nn::Mlp dec(nn::MlpSpec{2 * de, {h}, 1});
  dec.init(rng);
  nn::Tensor x = as_tensor(random_matrix(rows, 2 * de, rng));
  std::vector<double> label(rows);
  for (std::size_t i = 0; i < rows; ++i) label[i] = static_cast<double>(i % 2);
  auto bce = [&](const Matrix& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double l = z(i, 0);
      const double sp = std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l)));
      s += label[i] > 0.5 ? sp - l : sp;
    }
    return s / static_cast<double>(rows);
  };
  auto loss = [&] { return bce(dec.forward(to_matrix(x, rows, 2 * de))); };
  auto backward = [&] {
    nn::Mlp::Cache c;
    const Matrix z = dec.forward(to_matrix(x, rows, 2 * de), &c);
    Matrix dz(rows, 1);
    for (std::size_t i = 0; i < rows; ++i)
      dz(i, 0) = (1.0 / (1.0 + std::exp(-z(i, 0))) - label[i]) / static_cast<double>(rows);
    const Matrix dx = dec.backward(c, dz);
    for (std::size_t i = 0; i < dx.size(); ++i) x.grad[i] += dx.data()[i];
  };
  nn::ParamList params = dec.params();
  params.push_back(&x);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

inline auto structmap_gradient_instance(Rng& rng, double alpha) -> nn::GradCheckReport {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  const auto f = dim(rng), dm = dim(rng), rows = dim(rng);
  StructMapParams sm(f, dim(rng) + 1, dm, alpha);
  sm.init(rng);
  const Matrix feats = random_matrix(rows, f, rng);
  nn::Tensor target = as_tensor(random_matrix(rows, dm, rng));
  auto loss = [&] { return sm.alpha * structmap_loss(sm, feats, to_matrix(target, rows, dm)); };
  auto backward = [&] {
    const auto r = structmap_loss_backward(sm, feats, to_matrix(target, rows, dm), sm.alpha);
    for (std::size_t i = 0; i < r.dtarget.size(); ++i) target.grad[i] += r.dtarget.data()[i];
  };
  nn::ParamList params = sm.params();
  params.push_back(&target);
  return nn::grad_check(loss, backward, params, kLayerCheck);
}

// -------------------------------------------------------------- micro streams

inline auto micro_stream(std::size_t nodes, std::size_t events, std::size_t edge_dim, Rng& rng)
    -> EventStream {
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(nodes - 1));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TemporalEvent> ev;
  double t = 0.0;
  for (std::size_t i = 0; i < events; ++i) {
    TemporalEvent e;
    e.src = pick(rng);
    do e.dst = pick(rng);
    while (e.dst == e.src);
    t += 0.5 + u(rng) * 3.0;
    e.timestamp = t;
    for (std::size_t f = 0; f < edge_dim; ++f) e.edge_feat.push_back(u(rng) - 0.5);
    ev.push_back(e);
  }
  std::vector<std::string> ids;
  for (std::size_t v = 0; v < nodes; ++v) ids.push_back(std::to_string(v));
  return finalize_stream(std::move(ev), std::move(ids));
}

inline auto small_tgn_config(std::size_t edge_dim) -> TgnConfig {
  TgnConfig c;
  c.memory_dim = 4;
  c.embedding_dim = 3;
  c.time_dim = 3;
  c.edge_dim = edge_dim;
  c.message_hidden = {5};
  c.decoder_hidden = {4};
  c.num_neighbors = 3;
  return c;
}

// Window features of a batch's endpoints with a deterministic offset so every
// column is non-degenerate and every structural-map weight is exercised.
inline auto offset_batch_features(const EventStream& s, const EventBatch& b, std::size_t d_p)
    -> BatchFeatures {
  BatchFeatures f;
  std::vector<bool> seen(s.num_nodes, false);
  for (const auto& e : b.view(s))
    for (NodeId v : {e.src, e.dst})
      if (!seen[v]) {
        seen[v] = true;
        f.nodes.push_back(v);
      }
  const auto w = window_from_interval(s, s.start_time(), b.start_time);
  Matrix raw = features_of(w, f.nodes, d_p);
  for (std::size_t i = 0; i < raw.rows(); ++i)
    for (std::size_t j = 0; j < raw.cols(); ++j) raw(i, j) += 0.1 * static_cast<double>(i + j);
  f.standardized = raw;
  return f;
}

// Loss of the second batch of a micro-stream in train mode after applying the
// first batch to a fresh state.
struct EndToEnd {
  EventStream stream;
  std::vector<EventBatch> batches;
  std::vector<std::vector<NodeId>> negatives;
  TgnParams params;
  StructMapParams structmap;
  BatchFeatures features;
  bool with_structmap{false};

  auto pass(TgnState& s) -> BatchPass {
    apply_batch(s, stream, batches[0], params);
    return BatchPass(params, s, stream, batches[1], negatives, true,
                     with_structmap ? &structmap : nullptr, with_structmap ? &features : nullptr);
  }
  auto output() -> BatchOutput {
    TgnState s(stream.num_nodes, params.config);
    return pass(s).output();
  }
  void backward() {
    TgnState s(stream.num_nodes, params.config);
    pass(s).backward();
  }
};

inline auto make_end_to_end(std::uint64_t seed, std::size_t edge_dim, bool structmap,
                            bool coupled) -> EndToEnd {
  Rng rng(seed);
  EndToEnd x;
  x.stream = micro_stream(5, 8, edge_dim, rng);
  x.batches = make_batches(x.stream, 4);
  x.negatives = sample_negatives(x.stream, x.batches[1], 5, 2, rng);
  x.params = TgnParams(small_tgn_config(edge_dim));
  x.params.init(rng, x.stream.span());
  // Larger time frequencies than the span-based default so the encoder's
  // gradient is not vanishingly small at this scale.
  for (auto& w : x.params.time_encoder.omega.value) w *= 50.0;
  x.with_structmap = structmap;
  if (structmap) {
    x.structmap = StructMapParams(kTopologicalFeatures + 2, 4, 4, 0.7);
    x.structmap.coupled = coupled;
    x.structmap.init(rng);
    x.features = offset_batch_features(x.stream, x.batches[1], 2);
  }
  return x;
}

// ------------------------------------------------------------ leakage guard

struct LeakCase {
  EventStream stream;
  std::vector<EventBatch> batches;
  TgnParams params;
};

inline auto make_leak_case(std::uint64_t seed) -> LeakCase {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> nodes(3, 9);
  std::uniform_int_distribution<std::size_t> events(6, 30);
  std::uniform_int_distribution<std::size_t> bs(1, 6);
  LeakCase c;
  c.stream = micro_stream(nodes(rng), events(rng), 2, rng);
  c.batches = make_batches(c.stream, bs(rng));
  c.params = TgnParams(small_tgn_config(2));
  c.params.init(rng, c.stream.span());
  return c;
}

inline auto same_predictions(const BatchOutput& a, const BatchOutput& b) -> bool {
  return a.pos_logits == b.pos_logits && a.neg_logits == b.neg_logits && a.tlp_loss == b.tlp_loss;
}

// Streams every batch of a random micro-stream and returns a description of
// each violation: predictions that change when the batch is applied to memory,
// a state touched by the non-applying pass, or predictions that change when
// the batch's own edge features are perturbed.
inline auto leakage_violations(std::uint64_t seed) -> std::vector<std::string> {
  auto c = make_leak_case(seed);
  Rng neg_rng(seed + 1000);
  std::vector<std::string> out;
  TgnState applied(c.stream.num_nodes, c.params.config);
  for (std::size_t i = 0; i < c.batches.size(); ++i) {
    const auto& b = c.batches[i];
    const auto negs = sample_negatives(c.stream, b, c.stream.num_nodes, 3, neg_rng);
    const auto where = "seed " + std::to_string(seed) + " batch " + std::to_string(i);

    TgnState withheld = applied;
    StepOptions no_apply;
    no_apply.apply_updates = false;
    const auto out_withheld = process_batch(c.params, withheld, c.stream, b, negs, no_apply);
    if (!(withheld == applied)) out.push_back(where + ": non-applying pass changed the state");
    const auto out_applied = process_batch(c.params, applied, c.stream, b, negs, {});
    if (!same_predictions(out_withheld, out_applied))
      out.push_back(where + ": predictions depend on applying the batch");

    EventStream perturbed = c.stream;
    for (std::size_t e = b.begin; e < b.end; ++e)
      for (auto& f : perturbed.events[e].edge_feat) f += 7.5;
    TgnState copy = withheld;
    const auto out_perturbed = process_batch(c.params, copy, perturbed, b, negs, no_apply);
    if (!same_predictions(out_withheld, out_perturbed))
      out.push_back(where + ": predictions depend on the batch's own edge features");
  }
  return out;
}

// ------------------------------------------------------------ run configs

// A transfer task small enough to train in well under a second.
inline auto small_run_config() -> RunConfig {
  RunConfig cfg;
  cfg.generator.num_communities = 2;
  cfg.generator.nodes_per_community = 12;
  cfg.generator.num_events = 900;
  cfg.split.groups = 2;
  cfg.tgn.memory_dim = 8;
  cfg.tgn.embedding_dim = 8;
  cfg.tgn.time_dim = 4;
  cfg.tgn.message_hidden = {8};
  cfg.tgn.decoder_hidden = {8};
  cfg.tgn.num_neighbors = 5;
  cfg.structmap_hidden = 8;
  cfg.positional_dim = 2;
  cfg.window_fraction = 0.05;
  cfg.batch_size = 40;
  cfg.epochs = 2;
  cfg.lr = 3e-3;
  cfg.eval_negatives = 9;
  return cfg;
}

}  // namespace tgnt::test
