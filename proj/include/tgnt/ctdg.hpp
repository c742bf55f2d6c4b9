#pragma once

// Continuous-time dynamic graphs: event streams, batching, negative sampling,
// CSV ingestion and a planted-community synthetic generator.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tgnt/error.hpp"

namespace tgnt {

using NodeId = std::uint32_t;
using Rng = std::mt19937_64;

// Only edge additions are modeled. The remaining kinds are recognized so that
// ingestion can reject them explicitly instead of misreading them.
enum class EventKind : std::uint8_t {
  edge_addition,
  edge_deletion,
  node_addition,
  node_deletion,
  feature_update,
};

struct TemporalEvent {
  NodeId src{};
  NodeId dst{};
  double timestamp{};
  std::vector<double> edge_feat;
  EventKind kind{EventKind::edge_addition};

  friend auto operator==(const TemporalEvent&, const TemporalEvent&)
      -> bool = default;
};

struct EventStream {
  std::vector<TemporalEvent> events;
  std::size_t num_nodes{};
  std::size_t edge_dim{};
  // original_ids[dense] is the token the node carried in the source data.
  std::vector<std::string> original_ids;

  [[nodiscard]] auto empty() const -> bool { return events.empty(); }
  [[nodiscard]] auto size() const -> std::size_t { return events.size(); }
  [[nodiscard]] auto start_time() const -> double {
    return events.empty() ? 0.0 : events.front().timestamp;
  }
  [[nodiscard]] auto end_time() const -> double {
    return events.empty() ? 0.0 : events.back().timestamp;
  }
  [[nodiscard]] auto span() const -> double { return end_time() - start_time(); }
};

// Half-open slice [begin, end) of an EventStream.
struct EventBatch {
  std::size_t begin{};
  std::size_t end{};
  double start_time{};
  double end_time{};

  [[nodiscard]] auto size() const -> std::size_t { return end - begin; }
  [[nodiscard]] auto view(const EventStream& s) const
      -> std::span<const TemporalEvent> {
    return {s.events.data() + begin, end - begin};
  }
};

namespace detail {

inline auto trim(std::string_view s) -> std::string_view {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline auto split_fields(std::string_view line, char delim)
    -> std::vector<std::string_view> {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

inline auto parse_double(std::string_view s, double& out) -> bool {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

// Shortest representation that round-trips.
inline auto format_double(double v) -> std::string {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

inline auto parse_kind(std::string_view s, std::size_t line) -> EventKind {
  if (s == "edge_add" || s == "edge_addition" || s.empty())
    return EventKind::edge_addition;
  if (s == "edge_del" || s == "edge_deletion") return EventKind::edge_deletion;
  if (s == "node_add" || s == "node_addition") return EventKind::node_addition;
  if (s == "node_del" || s == "node_deletion") return EventKind::node_deletion;
  if (s == "feat_update" || s == "feature_update")
    return EventKind::feature_update;
  throw ParseError(line, "unknown event kind '" + std::string(s) + "'");
}

}  // namespace detail

enum class HeaderMode : std::uint8_t { automatic, present, absent };

struct IngestionConfig {
  HeaderMode header{HeaderMode::automatic};
  char delimiter{','};
};

// Validates, re-sorts (stable on timestamp) and fills num_nodes/edge_dim.
// Dense ids must already be assigned.
inline auto finalize_stream(std::vector<TemporalEvent> events,
                            std::vector<std::string> original_ids)
    -> EventStream {
  EventStream s;
  s.num_nodes = original_ids.size();
  s.original_ids = std::move(original_ids);
  s.edge_dim = events.empty() ? 0 : events.front().edge_feat.size();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.kind != EventKind::edge_addition)
      throw ValidationError("ctdg", "event " + std::to_string(i) +
                                        ": only edge additions are supported");
    if (e.src == e.dst)
      throw ValidationError("ctdg", "event " + std::to_string(i) +
                                        ": self-loop on node " +
                                        std::to_string(e.src));
    if (e.src >= s.num_nodes || e.dst >= s.num_nodes)
      throw ValidationError("ctdg", "event " + std::to_string(i) +
                                        ": node id out of range");
    if (e.edge_feat.size() != s.edge_dim)
      throw ValidationError("ctdg", "event " + std::to_string(i) +
                                        ": inconsistent edge feature arity");
    if (!std::isfinite(e.timestamp) || e.timestamp < 0.0)
      throw ValidationError("ctdg", "event " + std::to_string(i) +
                                        ": timestamp must be finite and >= 0");
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  s.events = std::move(events);
  return s;
}

// Rows: src,dst,timestamp[,f0,...]. Node tokens are arbitrary strings and are
// re-indexed densely in order of first appearance. A header may carry a
// `kind` column; non edge-addition kinds are rejected.
inline auto parse_csv(std::istream& in, const IngestionConfig& config = {})
    -> EventStream {
  std::vector<TemporalEvent> events;
  std::vector<std::string> ids;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](std::string_view tok) -> NodeId {
    auto [it, inserted] =
        index.try_emplace(std::string(tok), static_cast<NodeId>(ids.size()));
    if (inserted) ids.emplace_back(tok);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  bool first_row = true;
  std::ptrdiff_t kind_col = -1;
  std::ptrdiff_t expected_fields = -1;

  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = detail::split_fields(t, config.delimiter);

    if (first_row) {
      first_row = false;
      double probe{};
      const bool looks_like_header =
          fields.size() >= 3 && !detail::parse_double(fields[2], probe);
      const bool is_header =
          config.header == HeaderMode::present ||
          (config.header == HeaderMode::automatic && looks_like_header);
      if (is_header) {
        for (std::size_t c = 0; c < fields.size(); ++c)
          if (fields[c] == "kind") kind_col = static_cast<std::ptrdiff_t>(c);
        expected_fields = static_cast<std::ptrdiff_t>(fields.size());
        continue;
      }
    }

    if (fields.size() < 3)
      throw ParseError(lineno, "expected at least 3 columns (src,dst,timestamp)");
    if (expected_fields >= 0 &&
        static_cast<std::ptrdiff_t>(fields.size()) != expected_fields)
      throw ParseError(lineno, "column count differs from header");
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(lineno, "empty node id");

    TemporalEvent ev;
    if (!detail::parse_double(fields[2], ev.timestamp))
      throw ParseError(lineno, "bad timestamp '" + std::string(fields[2]) + "'");
    for (std::size_t c = 3; c < fields.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == kind_col) {
        ev.kind = detail::parse_kind(fields[c], lineno);
        continue;
      }
      double v{};
      if (!detail::parse_double(fields[c], v))
        throw ParseError(lineno, "bad feature value '" + std::string(fields[c]) +
                                     "'");
      ev.edge_feat.push_back(v);
    }
    if (ev.kind != EventKind::edge_addition)
      throw ValidationError("ctdg", "line " + std::to_string(lineno) +
                                        ": only edge additions are supported");
    if (fields[0] == fields[1])
      throw ValidationError("ctdg", "line " + std::to_string(lineno) +
                                        ": self-loop on node '" +
                                        std::string(fields[0]) + "'");
    if (!events.empty() && ev.edge_feat.size() != events.front().edge_feat.size())
      throw ValidationError("ctdg", "line " + std::to_string(lineno) +
                                        ": inconsistent edge feature arity");
    ev.src = intern(fields[0]);
    ev.dst = intern(fields[1]);
    events.push_back(std::move(ev));
  }
  return finalize_stream(std::move(events), std::move(ids));
}

inline auto load_csv(const std::string& path, const IngestionConfig& config = {})
    -> EventStream {
  std::ifstream in(path);
  if (!in) throw ValidationError("ctdg", "cannot open '" + path + "'");
  return parse_csv(in, config);
}

// Writes original ids; a header row is emitted unless `header` is false.
inline void write_csv(std::ostream& out, const EventStream& s,
                      bool header = true) {
  if (header) {
    out << "src,dst,timestamp";
    for (std::size_t f = 0; f < s.edge_dim; ++f) out << ",f" << f;
    out << '\n';
  }
  for (const auto& e : s.events) {
    out << s.original_ids[e.src] << ',' << s.original_ids[e.dst] << ','
        << detail::format_double(e.timestamp);
    for (double v : e.edge_feat) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

inline auto to_csv_string(const EventStream& s, bool header = true)
    -> std::string {
  std::ostringstream os;
  write_csv(os, s, header);
  return os.str();
}

// Batches over the sub-range [first, last) of the stream.
inline auto make_batches(const EventStream& stream, std::size_t batch_size,
                         std::size_t first, std::size_t last)
    -> std::vector<EventBatch> {
  if (batch_size == 0)
    throw ValidationError("ctdg", "batch_size must be >= 1");
  std::vector<EventBatch> out;
  for (std::size_t b = first; b < last; b += batch_size) {
    const auto e = std::min(last, b + batch_size);
    out.push_back({b, e, stream.events[b].timestamp,
                   stream.events[e - 1].timestamp});
  }
  return out;
}

inline auto make_batches(const EventStream& stream, std::size_t batch_size)
    -> std::vector<EventBatch> {
  return make_batches(stream, batch_size, 0, stream.size());
}

// k uniform destinations per event from [0, num_nodes) \ {true dst}.
inline auto sample_negatives(const EventStream& stream, const EventBatch& batch,
                             std::size_t num_nodes, std::size_t k, Rng& rng)
    -> std::vector<std::vector<NodeId>> {
  if (num_nodes < 2)
    throw ValidationError("ctdg", "cannot sample negatives with fewer than 2 nodes");
  if (k == 0) throw ValidationError("ctdg", "k must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, num_nodes - 2);
  std::vector<std::vector<NodeId>> out;
  out.reserve(batch.size());
  for (const auto& e : batch.view(stream)) {
    std::vector<NodeId> negs(k);
    for (auto& n : negs) {
      auto c = static_cast<NodeId>(pick(rng));
      n = c >= e.dst ? c + 1 : c;
    }
    out.push_back(std::move(negs));
  }
  return out;
}

struct GeneratorSpec {
  std::size_t num_communities{2};
  std::size_t nodes_per_community{20};
  std::size_t num_events{2000};
  double p_in{0.9};
  double p_out{0.1};
  // Zipf exponent of per-node activity weights; 0 gives uniform activity.
  double pa_strength{1.0};
  double time_span{10000.0};
  // Probability that a source re-contacts one of its recent partners.
  double repeat_prob{0.5};
  std::size_t recent_partners{5};
  std::size_t edge_dim{0};
};

inline void validate(const GeneratorSpec& spec) {
  if (spec.num_communities < 2)
    throw ValidationError("ctdg", "generator needs num_communities >= 2");
  if (spec.nodes_per_community < 2)
    throw ValidationError("ctdg", "generator needs nodes_per_community >= 2");
  if (!(spec.p_in > spec.p_out) || spec.p_out < 0.0)
    throw ValidationError("ctdg", "generator needs p_in > p_out >= 0");
  if (!(spec.time_span > 0.0))
    throw ValidationError("ctdg", "generator needs time_span > 0");
  if (spec.repeat_prob < 0.0 || spec.repeat_prob > 1.0 || spec.pa_strength < 0.0)
    throw ValidationError("ctdg", "generator probabilities out of range");
}

// Planted-partition stream. Global node g belongs to community
// g / nodes_per_community; the original id token is the decimal g.
// Activity weights are Zipf within each community, so high-activity nodes
// also end up with high degree.
inline auto generate_synthetic(const GeneratorSpec& spec, Rng& rng)
    -> EventStream {
  validate(spec);
  const std::size_t C = spec.num_communities;
  const std::size_t M = spec.nodes_per_community;
  const std::size_t n = C * M;

  std::vector<double> weight(n);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::size_t> rank(M);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    for (std::size_t j = 0; j < M; ++j)
      weight[c * M + j] =
          std::pow(static_cast<double>(rank[j] + 1), -spec.pa_strength);
  }

  std::vector<double> times(spec.num_events);
  std::uniform_real_distribution<double> unif_t(0.0, spec.time_span);
  for (auto& t : times) t = unif_t(rng);
  std::sort(times.begin(), times.end());

  std::discrete_distribution<std::size_t> pick_src(weight.begin(), weight.end());
  std::vector<std::discrete_distribution<std::size_t>> pick_in_comm;
  for (std::size_t c = 0; c < C; ++c)
    pick_in_comm.emplace_back(weight.begin() + static_cast<std::ptrdiff_t>(c * M),
                              weight.begin() + static_cast<std::ptrdiff_t>((c + 1) * M));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double p_intra = spec.p_in / (spec.p_in + spec.p_out);

  std::vector<std::vector<std::size_t>> partners(n);
  std::vector<TemporalEvent> raw;
  raw.reserve(spec.num_events);
  for (double t : times) {
    const std::size_t src = pick_src(rng);
    const std::size_t comm = src / M;
    std::size_t dst = src;
    if (!partners[src].empty() && u01(rng) < spec.repeat_prob) {
      std::uniform_int_distribution<std::size_t> pp(0, partners[src].size() - 1);
      dst = partners[src][pp(rng)];
    } else {
      std::size_t target = comm;
      if (u01(rng) >= p_intra) {
        std::uniform_int_distribution<std::size_t> other(0, C - 2);
        target = other(rng);
        if (target >= comm) ++target;
      }
      while (dst == src) dst = target * M + pick_in_comm[target](rng);
    }
    for (auto [a, b] : {std::pair{src, dst}, std::pair{dst, src}}) {
      auto& p = partners[a];
      p.insert(p.begin(), b);
      if (p.size() > spec.recent_partners) p.pop_back();
    }
    TemporalEvent ev;
    ev.src = static_cast<NodeId>(src);
    ev.dst = static_cast<NodeId>(dst);
    ev.timestamp = t;
    ev.edge_feat.resize(spec.edge_dim);
    for (auto& f : ev.edge_feat) f = gauss(rng);
    raw.push_back(std::move(ev));
  }

  // Dense re-index in order of first appearance.
  std::vector<std::int64_t> dense(n, -1);
  std::vector<std::string> ids;
  for (auto& ev : raw) {
    for (NodeId* v : {&ev.src, &ev.dst}) {
      if (dense[*v] < 0) {
        dense[*v] = static_cast<std::int64_t>(ids.size());
        ids.push_back(std::to_string(*v));
      }
      *v = static_cast<NodeId>(dense[*v]);
    }
  }
  return finalize_stream(std::move(raw), std::move(ids));
}

// Planted community of every dense node of a generated stream.
inline auto planted_communities(const EventStream& s, const GeneratorSpec& spec)
    -> std::vector<std::size_t> {
  std::vector<std::size_t> out(s.num_nodes);
  for (std::size_t v = 0; v < s.num_nodes; ++v)
    out[v] = std::stoul(s.original_ids[v]) / spec.nodes_per_community;
  return out;
}

// Builds a stream restricted to `keep` nodes (events with both endpoints kept),
// re-indexed densely in order of first appearance.
inline auto induced_substream(const EventStream& s, const std::vector<bool>& keep)
    -> EventStream {
  std::vector<std::int64_t> dense(s.num_nodes, -1);
  std::vector<std::string> ids;
  std::vector<TemporalEvent> events;
  for (const auto& e : s.events) {
    if (!keep[e.src] || !keep[e.dst]) continue;
    TemporalEvent ev = e;
    for (NodeId* v : {&ev.src, &ev.dst}) {
      if (dense[*v] < 0) {
        dense[*v] = static_cast<std::int64_t>(ids.size());
        ids.push_back(s.original_ids[*v]);
      }
      *v = static_cast<NodeId>(dense[*v]);
    }
    events.push_back(std::move(ev));
  }
  auto out = finalize_stream(std::move(events), std::move(ids));
  if (out.empty()) out.edge_dim = s.edge_dim;
  return out;
}

}  // namespace tgnt
