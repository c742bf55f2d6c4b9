#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/matrix.hpp"

namespace tgnt {

inline constexpr double kNeverUpdated = -std::numeric_limits<double>::infinity();

// Per-node memory vectors plus the time of each node's last update.
// Rows of never-seen nodes are zero with last_update = kNeverUpdated.
struct MemoryStore {
  Matrix memory;
  std::vector<double> last_update;

  MemoryStore() = default;
  MemoryStore(std::size_t num_nodes, std::size_t dim)
      : memory(num_nodes, dim), last_update(num_nodes, kNeverUpdated) {}

  [[nodiscard]] auto num_nodes() const -> std::size_t { return memory.rows(); }
  [[nodiscard]] auto dim() const -> std::size_t { return memory.cols(); }
  [[nodiscard]] auto seen(NodeId v) const -> bool {
    return last_update[v] != kNeverUpdated;
  }
  // Time since the last update; 0 for nodes never updated.
  [[nodiscard]] auto elapsed(NodeId v, double t) const -> double {
    return seen(v) ? t - last_update[v] : 0.0;
  }

  friend auto operator==(const MemoryStore&, const MemoryStore&) -> bool = default;
};

// Ring buffer of the k most recent interactions per node, newest first.
struct NeighborCache {
  struct Entry {
    NodeId neighbor{};
    double timestamp{};
    std::vector<double> edge_feat;
    friend auto operator==(const Entry&, const Entry&) -> bool = default;
  };

  std::size_t capacity{10};
  std::vector<std::deque<Entry>> entries;

  NeighborCache() = default;
  NeighborCache(std::size_t num_nodes, std::size_t k) : capacity(k), entries(num_nodes) {}

  void insert(NodeId node, Entry e) {
    auto& q = entries[node];
    q.push_front(std::move(e));
    while (q.size() > capacity) q.pop_back();
  }

  // Both directions of every event, in stream order.
  void insert_events(std::span<const TemporalEvent> events) {
    for (const auto& e : events) {
      insert(e.src, {e.dst, e.timestamp, e.edge_feat});
      insert(e.dst, {e.src, e.timestamp, e.edge_feat});
    }
  }

  friend auto operator==(const NeighborCache&, const NeighborCache&) -> bool = default;
};

}  // namespace tgnt
