#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace tgnt {

// Undirected weighted graph stored as a symmetric adjacency list. A self-loop
// on i is stored once, as the adjacency-matrix entry A_ii.
struct WeightedGraph {
  struct Arc {
    std::size_t to;
    double weight;
    friend auto operator==(const Arc&, const Arc&) -> bool = default;
  };

  std::vector<std::vector<Arc>> adj;

  WeightedGraph() = default;
  explicit WeightedGraph(std::size_t n) : adj(n) {}

  [[nodiscard]] auto num_nodes() const -> std::size_t { return adj.size(); }

  // sum_j A_ij, self-loop entry included once.
  [[nodiscard]] auto strength(std::size_t i) const -> double {
    double k = 0.0;
    for (const auto& a : adj[i]) k += a.weight;
    return k;
  }

  // 2m = sum_ij A_ij.
  [[nodiscard]] auto total_strength() const -> double {
    double s = 0.0;
    for (std::size_t i = 0; i < adj.size(); ++i) s += strength(i);
    return s;
  }

  [[nodiscard]] auto weight(std::size_t u, std::size_t v) const -> double {
    for (const auto& a : adj[u])
      if (a.to == v) return a.weight;
    return 0.0;
  }

  // Builds from an unordered edge multiset; parallel entries are summed.
  static auto from_edges(std::size_t n,
                         const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                         const std::vector<double>& weights = {})
      -> WeightedGraph {
    std::vector<std::map<std::size_t, double>> acc(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [u, v] = edges[e];
      const double w = weights.empty() ? 1.0 : weights[e];
      if (u == v) {
        acc[u][u] += 2.0 * w;
      } else {
        acc[u][v] += w;
        acc[v][u] += w;
      }
    }
    WeightedGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [j, w] : acc[i]) g.adj[i].push_back({j, w});
    return g;
  }
};

// Unweighted simple undirected graph with sorted neighbor lists.
struct SimpleGraph {
  std::vector<std::vector<std::size_t>> adj;

  SimpleGraph() = default;
  explicit SimpleGraph(std::size_t n) : adj(n) {}

  [[nodiscard]] auto num_nodes() const -> std::size_t { return adj.size(); }
  [[nodiscard]] auto degree(std::size_t v) const -> std::size_t {
    return adj[v].size();
  }
  [[nodiscard]] auto num_edges() const -> std::size_t {
    std::size_t s = 0;
    for (const auto& a : adj) s += a.size();
    return s / 2;
  }
  [[nodiscard]] auto has_edge(std::size_t u, std::size_t v) const -> bool {
    return std::binary_search(adj[u].begin(), adj[u].end(), v);
  }

  // Self-loops ignored, duplicates collapsed.
  static auto from_edges(std::size_t n,
                         const std::vector<std::pair<std::size_t, std::size_t>>& edges)
      -> SimpleGraph {
    SimpleGraph g(n);
    for (auto [u, v] : edges) {
      if (u == v) continue;
      g.adj[u].push_back(v);
      g.adj[v].push_back(u);
    }
    for (auto& a : g.adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return g;
  }
};

}  // namespace tgnt
