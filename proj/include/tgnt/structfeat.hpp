#pragma once

// Window aggregation, node structural features (degree, betweenness,
// closeness, clustering, random-walk return probabilities), feature
// standardization and the memory/feature distance-correlation analysis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <stack>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/error.hpp"
#include "tgnt/graph.hpp"
#include "tgnt/matrix.hpp"

namespace tgnt {

inline constexpr std::size_t kTopologicalFeatures = 4;

// Static graph of the events in [begin, end). Only nodes touched by a window
// edge are vertices; `local_of` maps stream ids to vertices (-1 if absent).
struct WindowGraph {
  SimpleGraph graph;
  std::vector<std::int64_t> local_of;
  std::vector<NodeId> global_of;
  double begin{};
  double end{};

  [[nodiscard]] auto contains(NodeId v) const -> bool {
    return v < local_of.size() && local_of[v] >= 0;
  }
};

// Window graph of events [first, last) of the stream (by index).
inline auto window_from_events(const EventStream& stream, std::size_t first,
                               std::size_t last) -> WindowGraph {
  WindowGraph w;
  w.local_of.assign(stream.num_nodes, -1);
  if (first < last) {
    w.begin = stream.events[first].timestamp;
    w.end = stream.events[last - 1].timestamp;
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = first; i < last; ++i) {
    const auto& e = stream.events[i];
    for (NodeId v : {e.src, e.dst}) {
      if (w.local_of[v] < 0) {
        w.local_of[v] = static_cast<std::int64_t>(w.global_of.size());
        w.global_of.push_back(v);
      }
    }
    edges.emplace_back(static_cast<std::size_t>(w.local_of[e.src]),
                       static_cast<std::size_t>(w.local_of[e.dst]));
  }
  w.graph = SimpleGraph::from_edges(w.global_of.size(), edges);
  return w;
}

// Window graph of events with timestamp in [begin, end).
inline auto window_from_interval(const EventStream& stream, double begin,
                                 double end) -> WindowGraph {
  const auto lo = std::lower_bound(
      stream.events.begin(), stream.events.end(), begin,
      [](const TemporalEvent& e, double t) { return e.timestamp < t; });
  const auto hi = std::lower_bound(
      lo, stream.events.end(), end,
      [](const TemporalEvent& e, double t) { return e.timestamp < t; });
  auto w = window_from_events(stream,
                              static_cast<std::size_t>(lo - stream.events.begin()),
                              static_cast<std::size_t>(hi - stream.events.begin()));
  w.begin = begin;
  w.end = end;
  return w;
}

// Window over the events before index `end` whose timestamp lies within
// w * train_span of the last of them: the structure observed once event
// end - 1 has been processed.
inline auto window_through(const EventStream& stream, std::size_t end, double w,
                           double train_span) -> WindowGraph {
  if (!(w > 0.0 && w <= 1.0))
    throw ValidationError("structfeat", "window fraction must be in (0, 1]");
  if (!(train_span > 0.0))
    throw ValidationError("structfeat", "train_span must be > 0");
  if (end == 0) return window_from_events(stream, 0, 0);
  const double t = stream.events[end - 1].timestamp;
  const auto lo = std::lower_bound(
      stream.events.begin(), stream.events.begin() + static_cast<std::ptrdiff_t>(end),
      t - w * train_span,
      [](const TemporalEvent& e, double x) { return e.timestamp < x; });
  return window_from_events(stream, static_cast<std::size_t>(lo - stream.events.begin()), end);
}

// Edges with timestamp in [t - w * train_span, t).
inline auto aggregate_window(const EventStream& stream, double t, double w,
                             double train_span) -> WindowGraph {
  if (!(w > 0.0 && w <= 1.0))
    throw ValidationError("structfeat", "window fraction must be in (0, 1]");
  if (!(train_span > 0.0))
    throw ValidationError("structfeat", "train_span must be > 0");
  return window_from_interval(stream, t - w * train_span, t);
}

// Brandes exact betweenness, unnormalized; each unordered pair counted once.
inline auto betweenness_centrality(const SimpleGraph& g) -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  std::vector<double> cb(n, 0.0);
  std::vector<double> sigma(n);
  std::vector<double> delta(n);
  std::vector<std::int64_t> dist(n);
  std::vector<std::vector<std::size_t>> pred(n);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    for (auto& p : pred) p.clear();
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      order.push_back(v);
      for (auto w : g.adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  for (auto& c : cb) c /= 2.0;
  return cb;
}

// Wasserman-Faust closeness: ((r-1)/(n-1)) * ((r-1)/sum_d) over the r nodes
// reachable from v (v included). Zero when nothing is reachable.
inline auto closeness_centrality(const SimpleGraph& g) -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<std::int64_t> dist(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[v] = 0;
    std::queue<std::size_t> q;
    q.push(v);
    double total = 0.0;
    double reach = 1.0;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto w : g.adj[u]) {
        if (dist[w] >= 0) continue;
        dist[w] = dist[u] + 1;
        total += static_cast<double>(dist[w]);
        reach += 1.0;
        q.push(w);
      }
    }
    if (total > 0.0)
      out[v] = ((reach - 1.0) / static_cast<double>(n - 1)) * ((reach - 1.0) / total);
  }
  return out;
}

inline auto clustering_coefficient(const SimpleGraph& g, std::size_t v) -> double {
  const auto& nb = g.adj[v];
  const std::size_t d = nb.size();
  if (d < 2) return 0.0;
  std::size_t tri = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (g.has_edge(nb[i], nb[j])) ++tri;
  return static_cast<double>(tri) / (static_cast<double>(d * (d - 1)) / 2.0);
}

// Return probabilities of simple random walks of length 1..steps started at v.
inline auto random_walk_return_probabilities(const SimpleGraph& g, std::size_t v,
                                             std::size_t steps)
    -> std::vector<double> {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(steps, 0.0);
  std::vector<double> p(n, 0.0);
  std::vector<double> next(n);
  p[v] = 1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      if (p[u] == 0.0 || g.adj[u].empty()) continue;
      const double share = p[u] / static_cast<double>(g.adj[u].size());
      for (auto w : g.adj[u]) next[w] += share;
    }
    std::swap(p, next);
    out[k] = p[v];
  }
  return out;
}

struct StructuralFeatureVector {
  std::vector<double> values;
  bool standardized{false};
};

// Raw features for every vertex of the window graph, one row per local id.
// Columns: degree, betweenness, closeness, clustering, rwpe_1..rwpe_{d_P}.
inline auto window_features(const WindowGraph& w, std::size_t positional_dim)
    -> Matrix {
  const auto& g = w.graph;
  const std::size_t n = g.num_nodes();
  Matrix out(n, kTopologicalFeatures + positional_dim);
  if (n == 0) return out;
  const auto bc = betweenness_centrality(g);
  const auto cc = closeness_centrality(g);
  for (std::size_t v = 0; v < n; ++v) {
    auto r = out.row(v);
    r[0] = static_cast<double>(g.degree(v));
    r[1] = bc[v];
    r[2] = cc[v];
    r[3] = clustering_coefficient(g, v);
    const auto pe = random_walk_return_probabilities(g, v, positional_dim);
    std::copy(pe.begin(), pe.end(), r.begin() + kTopologicalFeatures);
  }
  return out;
}

// Raw feature vector of stream node v; all zeros if v is absent from the
// window.
inline auto node_features(const WindowGraph& w, NodeId v,
                          std::size_t positional_dim) -> StructuralFeatureVector {
  StructuralFeatureVector f;
  f.values.assign(kTopologicalFeatures + positional_dim, 0.0);
  if (!w.contains(v)) return f;
  const auto local = static_cast<std::size_t>(w.local_of[v]);
  const auto& g = w.graph;
  const auto bc = betweenness_centrality(g);
  const auto cc = closeness_centrality(g);
  f.values[0] = static_cast<double>(g.degree(local));
  f.values[1] = bc[local];
  f.values[2] = cc[local];
  f.values[3] = clustering_coefficient(g, local);
  const auto pe = random_walk_return_probabilities(g, local, positional_dim);
  std::copy(pe.begin(), pe.end(), f.values.begin() + kTopologicalFeatures);
  return f;
}

// Raw features of the given stream nodes, one row per node, computed from a
// single pass over the window graph. Absent nodes get zero rows.
inline auto features_of(const WindowGraph& w, std::span<const NodeId> nodes,
                        std::size_t positional_dim) -> Matrix {
  Matrix out(nodes.size(), kTopologicalFeatures + positional_dim);
  bool any = false;
  for (auto v : nodes) any = any || w.contains(v);
  if (!any) return out;
  const Matrix all = window_features(w, positional_dim);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!w.contains(nodes[i])) continue;
    const auto r = all.row(static_cast<std::size_t>(w.local_of[nodes[i]]));
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

inline constexpr double kSigmaFloor = 1e-8;

// Per-column affine standardization with population statistics.
struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  [[nodiscard]] auto dim() const -> std::size_t { return mean.size(); }

  [[nodiscard]] auto apply(std::span<const double> raw) const
      -> StructuralFeatureVector {
    if (raw.size() != mean.size())
      throw ValidationError("structfeat", "feature dimension mismatch");
    StructuralFeatureVector out;
    out.values.resize(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j)
      out.values[j] = (raw[j] - mean[j]) / stddev[j];
    out.standardized = true;
    return out;
  }

  [[nodiscard]] auto apply(const StructuralFeatureVector& raw) const
      -> StructuralFeatureVector {
    if (raw.standardized)
      throw ValidationError("structfeat", "features are already standardized");
    return apply(std::span<const double>(raw.values));
  }
};

inline auto fit_standardizer(const Matrix& features) -> FeatureStandardizer {
  if (features.rows() < 2)
    throw ValidationError("structfeat", "standardizer needs at least 2 rows");
  const std::size_t d = features.cols();
  const auto n = static_cast<double>(features.rows());
  FeatureStandardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t i = 0; i < features.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += features(i, j);
  for (auto& m : s.mean) m /= n;
  for (std::size_t i = 0; i < features.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = features(i, j) - s.mean[j];
      s.stddev[j] += c * c;
    }
  for (auto& sd : s.stddev) sd = std::max(std::sqrt(sd / n), kSigmaFloor);
  return s;
}

inline auto pearson_correlation(std::span<const double> x,
                                std::span<const double> y) -> double {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw ValidationError("structfeat",
                          "undefined correlation: zero variance in distances");
  return sxy / std::sqrt(sxx * syy);
}

// 1-based ranks; ties receive the average of the ranks they span.
inline auto average_ranks(std::span<const double> x) -> std::vector<double> {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline auto spearman_correlation(std::span<const double> x,
                                 std::span<const double> y) -> double {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_correlation(rx, ry);
}

struct DistanceCorrelation {
  double pearson{};
  double spearman{};
  std::size_t pairs{};
};

inline auto euclidean(std::span<const double> a, std::span<const double> b)
    -> double {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Pearson/Spearman correlation between pairwise Euclidean distances in the
// memory space and in the feature space. Uses all pairs when
// sample_pairs >= N(N-1)/2, else that many distinct pairs drawn uniformly.
inline auto correlate_distances(const Matrix& memory, const Matrix& features,
                                std::size_t sample_pairs, Rng& rng)
    -> DistanceCorrelation {
  const std::size_t n = memory.rows();
  if (features.rows() != n)
    throw ValidationError("structfeat", "memory and feature matrices cover different node sets");
  if (n < 3) throw ValidationError("structfeat", "correlation needs N >= 3");
  const std::size_t total = n * (n - 1) / 2;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (sample_pairs >= total) {
    pairs.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::unordered_set<std::size_t> chosen;
    std::vector<std::size_t> flat;
    while (flat.size() < sample_pairs) {
      const auto k = pick(rng);
      if (chosen.insert(k).second) flat.push_back(k);
    }
    for (auto k : flat) {
      std::size_t i = 0;
      std::size_t row_len = n - 1;
      while (k >= row_len) {
        k -= row_len;
        ++i;
        --row_len;
      }
      pairs.emplace_back(i, i + 1 + k);
    }
  }

  std::vector<double> dm;
  std::vector<double> df;
  dm.reserve(pairs.size());
  df.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    dm.push_back(euclidean(memory.row(i), memory.row(j)));
    df.push_back(euclidean(features.row(i), features.row(j)));
  }
  return {pearson_correlation(dm, df), spearman_correlation(dm, df), pairs.size()};
}

}  // namespace tgnt
