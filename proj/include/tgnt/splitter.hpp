#pragma once

// Louvain community detection on the time-aggregated graph and construction
// of node-disjoint train/validation/test sub-streams.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/error.hpp"
#include "tgnt/graph.hpp"

namespace tgnt {

// weight(u,v) = number of events between u and v in either direction.
inline auto aggregate_static(const EventStream& stream) -> WeightedGraph {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(stream.size());
  for (const auto& e : stream.events) edges.emplace_back(e.src, e.dst);
  return WeightedGraph::from_edges(stream.num_nodes, edges);
}

// Newman modularity. Zero for a graph without edges.
inline auto modularity(const WeightedGraph& g,
                       const std::vector<std::size_t>& community_of) -> double {
  const double two_m = g.total_strength();
  if (two_m <= 0.0) return 0.0;
  const std::size_t nc =
      community_of.empty()
          ? 0
          : *std::max_element(community_of.begin(), community_of.end()) + 1;
  std::vector<double> in(nc, 0.0);
  std::vector<double> tot(nc, 0.0);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto ci = community_of[i];
    for (const auto& a : g.adj[i]) {
      if (community_of[a.to] == ci) in[ci] += a.weight;
      tot[ci] += a.weight;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < nc; ++c)
    q += in[c] / two_m - (tot[c] / two_m) * (tot[c] / two_m);
  return q;
}

struct CommunityAssignment {
  std::vector<std::size_t> community_of;
  std::size_t num_communities{};
  double modularity{};
  // Modularity after each level; non-decreasing.
  std::vector<double> modularity_trace;
};

namespace detail {

// One level of local moves. Returns true if any node changed community.
inline auto louvain_local_moves(const WeightedGraph& g,
                                std::vector<std::size_t>& comm, Rng& rng)
    -> bool {
  const std::size_t n = g.num_nodes();
  const double two_m = g.total_strength();
  std::vector<double> k(n);
  std::vector<double> tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = g.strength(i);
    tot[comm[i]] += k[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, 0.0);
  std::vector<char> is_touched(n, 0);
  std::vector<std::size_t> touched;
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i : order) {
      const std::size_t own = comm[i];
      touched.clear();
      touched.push_back(own);
      is_touched[own] = 1;
      for (const auto& a : g.adj[i]) {
        if (a.to == i) continue;
        const auto c = comm[a.to];
        if (!is_touched[c]) {
          is_touched[c] = 1;
          touched.push_back(c);
        }
        link[c] += a.weight;
      }
      tot[own] -= k[i];
      // Gain of joining c, up to a constant factor: link_c - tot_c * k_i / 2m.
      std::size_t best = own;
      double best_gain = link[own] - tot[own] * k[i] / two_m;
      for (std::size_t c : touched) {
        const double gain = link[c] - tot[c] * k[i] / two_m;
        if (gain > best_gain + 1e-12 * std::max(1.0, std::abs(best_gain))) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k[i];
      if (best != own) {
        comm[i] = best;
        moved = true;
        any_move = true;
      }
      for (std::size_t c : touched) {
        link[c] = 0.0;
        is_touched[c] = 0;
      }
    }
  }
  return any_move;
}

inline auto relabel_contiguous(std::vector<std::size_t>& comm) -> std::size_t {
  std::vector<std::size_t> map(comm.size(), static_cast<std::size_t>(-1));
  std::size_t next = 0;
  for (auto& c : comm) {
    if (map[c] == static_cast<std::size_t>(-1)) map[c] = next++;
    c = map[c];
  }
  return next;
}

inline auto coarsen(const WeightedGraph& g, const std::vector<std::size_t>& comm,
                    std::size_t nc) -> WeightedGraph {
  WeightedGraph out(nc);
  std::vector<std::map<std::size_t, double>> acc(nc);
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (const auto& a : g.adj[i]) acc[comm[i]][comm[a.to]] += a.weight;
  for (std::size_t c = 0; c < nc; ++c)
    for (const auto& [d, w] : acc[c]) out.adj[c].push_back({d, w});
  return out;
}

}  // namespace detail

// Multi-level Louvain. Node visit order at each level is shuffled by `rng`.
inline auto louvain(const WeightedGraph& graph, Rng& rng) -> CommunityAssignment {
  CommunityAssignment out;
  const std::size_t n = graph.num_nodes();
  out.community_of.resize(n);
  std::iota(out.community_of.begin(), out.community_of.end(), 0);
  if (graph.total_strength() <= 0.0) {
    out.num_communities = n;
    out.modularity = 0.0;
    out.modularity_trace = {0.0};
    return out;
  }

  WeightedGraph level = graph;
  out.modularity_trace.push_back(modularity(graph, out.community_of));
  while (true) {
    std::vector<std::size_t> comm(level.num_nodes());
    std::iota(comm.begin(), comm.end(), 0);
    const bool moved = detail::louvain_local_moves(level, comm, rng);
    if (!moved) break;
    const auto nc = detail::relabel_contiguous(comm);
    for (auto& c : out.community_of) c = comm[c];
    const double q = modularity(graph, out.community_of);
    if (q < out.modularity_trace.back() - 1e-12)
      throw Error("splitter", "louvain: modularity decreased between levels");
    out.modularity_trace.push_back(q);
    if (nc == level.num_nodes()) break;
    level = detail::coarsen(level, comm, nc);
  }
  out.num_communities = detail::relabel_contiguous(out.community_of);
  out.modularity = modularity(graph, out.community_of);
  return out;
}

struct SplitConfig {
  // 3: train/val/test. 2: train/test only, validation left empty.
  std::size_t groups{3};
  double balance_tolerance{0.25};
};

struct TransferSplit {
  EventStream train;
  EventStream val;
  EventStream test;
  // Dense ids of the parent stream, per group, restricted to retained nodes.
  std::vector<std::size_t> train_nodes;
  std::vector<std::size_t> val_nodes;
  std::vector<std::size_t> test_nodes;
  // group_of_community[c] in {0,1,2}.
  std::vector<std::size_t> group_of_community;
  std::size_t dropped_events{};
  double balance_ratio{};
  bool balanced{};
  std::string warning;
};

inline constexpr const char* kGroupNames[3] = {"train", "val", "test"};

// Greedy balance: communities (largest first) go to the group with the
// smallest current node count. Cross-group events are dropped.
inline auto make_transfer_split(const EventStream& stream,
                                const CommunityAssignment& assignment,
                                const SplitConfig& config = {}) -> TransferSplit {
  if (config.groups != 2 && config.groups != 3)
    throw ConfigError("splitter", "split groups must be 2 or 3");
  const std::size_t nc = assignment.num_communities;
  std::vector<std::size_t> size(nc, 0);
  for (auto c : assignment.community_of) ++size[c];
  std::vector<std::size_t> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return size[a] > size[b]; });

  // Group slots: 2-way uses {train, test}.
  const std::vector<std::size_t> slots =
      config.groups == 3 ? std::vector<std::size_t>{0, 1, 2}
                         : std::vector<std::size_t>{0, 2};
  TransferSplit out;
  out.group_of_community.assign(nc, 0);
  std::vector<std::size_t> count(3, 0);
  for (auto c : order) {
    std::size_t best = slots.front();
    for (auto s : slots)
      if (count[s] < count[best]) best = s;
    out.group_of_community[c] = best;
    count[best] += size[c];
  }

  std::vector<std::size_t> group_of_node(stream.num_nodes);
  for (std::size_t v = 0; v < stream.num_nodes; ++v)
    group_of_node[v] = out.group_of_community[assignment.community_of[v]];
  std::vector<std::vector<bool>> keep(3, std::vector<bool>(stream.num_nodes));
  for (std::size_t v = 0; v < stream.num_nodes; ++v) keep[group_of_node[v]][v] = true;
  for (const auto& e : stream.events)
    if (group_of_node[e.src] != group_of_node[e.dst]) ++out.dropped_events;

  EventStream* dest[3] = {&out.train, &out.val, &out.test};
  std::vector<std::size_t>* nodes[3] = {&out.train_nodes, &out.val_nodes,
                                        &out.test_nodes};
  std::vector<std::size_t> retained(3, 0);
  for (auto s : slots) {
    *dest[s] = induced_substream(stream, keep[s]);
    if (dest[s]->empty())
      throw SplitError(kGroupNames[s], std::string("split failure: group '") +
                                           kGroupNames[s] + "' has no events");
    std::vector<bool> seen(stream.num_nodes, false);
    for (const auto& e : stream.events)
      if (group_of_node[e.src] == s && group_of_node[e.dst] == s)
        seen[e.src] = seen[e.dst] = true;
    for (std::size_t v = 0; v < stream.num_nodes; ++v)
      if (seen[v]) nodes[s]->push_back(v);
    retained[s] = nodes[s]->size();
  }
  std::size_t lo = static_cast<std::size_t>(-1);
  std::size_t hi = 0;
  for (auto s : slots) {
    lo = std::min(lo, retained[s]);
    hi = std::max(hi, retained[s]);
  }
  out.balance_ratio = static_cast<double>(hi) / static_cast<double>(lo);
  out.balanced = out.balance_ratio <= 1.0 + config.balance_tolerance + 1e-12;
  if (!out.balanced)
    out.warning = "node-count ratio " + std::to_string(out.balance_ratio) +
                  " exceeds 1 + balance_tolerance";
  return out;
}

}  // namespace tgnt
