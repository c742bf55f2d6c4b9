#pragma once

// JSON checkpoints of a TrainedModel, and atomic file output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgnt/config.hpp"
#include "tgnt/error.hpp"
#include "tgnt/harness.hpp"
#include "tgnt/matrix.hpp"
#include "tgnt/memory.hpp"
#include "tgnt/tgn.hpp"

namespace tgnt {

using Json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "tgnt-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Writes to `path.tmp` and renames over `path`.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw Error("io", "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io", "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

inline auto read_file(const std::string& path) -> std::string {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

inline auto to_json(const Matrix& m) -> Json {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.data()}};
}

inline auto matrix_from_json(const Json& j) -> Matrix {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != m.size()) throw ValidationError("checkpoint", "matrix size mismatch");
  m.data() = values;
  return m;
}

inline auto tensors_to_json(const std::vector<std::pair<std::string, nn::Tensor*>>& named) -> Json {
  Json out = Json::object();
  for (const auto& [name, t] : named) out[name] = Json{{"shape", t->shape}, {"values", t->value}};
  return out;
}

inline void tensors_from_json(const Json& j,
                              const std::vector<std::pair<std::string, nn::Tensor*>>& named) {
  for (const auto& [name, t] : named) {
    if (!j.contains(name)) throw ValidationError("checkpoint", "missing tensor '" + name + "'");
    const auto& e = j.at(name);
    if (e.at("shape").get<std::vector<std::size_t>>() != t->shape)
      throw ValidationError("checkpoint", "shape mismatch for tensor '" + name + "'");
    auto v = e.at("values").get<std::vector<double>>();
    if (v.size() != t->size()) throw ValidationError("checkpoint", "size mismatch for '" + name + "'");
    t->value = std::move(v);
  }
}

inline auto structmap_named(StructMapParams& sm) -> std::vector<std::pair<std::string, nn::Tensor*>> {
  std::vector<std::pair<std::string, nn::Tensor*>> out;
  for (std::size_t i = 0; i < sm.mlp.layers.size(); ++i) {
    out.emplace_back("structmap.layer" + std::to_string(i) + ".weight", &sm.mlp.layers[i].weight);
    out.emplace_back("structmap.layer" + std::to_string(i) + ".bias", &sm.mlp.layers[i].bias);
  }
  return out;
}

inline auto tgn_config_to_json(const TgnConfig& c) -> Json {
  return Json{{"memory_dim", c.memory_dim},        {"embedding_dim", c.embedding_dim},
              {"time_dim", c.time_dim},            {"edge_dim", c.edge_dim},
              {"message_hidden", c.message_hidden}, {"decoder_hidden", c.decoder_hidden},
              {"num_neighbors", c.num_neighbors}};
}

inline auto tgn_config_from_json(const Json& j) -> TgnConfig {
  TgnConfig c;
  c.memory_dim = j.at("memory_dim").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.time_dim = j.at("time_dim").get<std::size_t>();
  c.edge_dim = j.at("edge_dim").get<std::size_t>();
  c.message_hidden = j.at("message_hidden").get<std::vector<std::size_t>>();
  c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
  c.num_neighbors = j.at("num_neighbors").get<std::size_t>();
  return c;
}

inline auto message_set_to_json(const MessageSet& m) -> Json {
  return Json{{"nodes", m.nodes},
              {"self_memory", to_json(m.self_memory)},
              {"other_memory", to_json(m.other_memory)},
              {"dt", m.dt},
              {"edge_feat", to_json(m.edge_feat)},
              {"timestamps", m.timestamps},
              {"messages", to_json(m.messages)}};
}

inline auto message_set_from_json(const Json& j) -> MessageSet {
  MessageSet m;
  m.nodes = j.at("nodes").get<std::vector<NodeId>>();
  m.self_memory = matrix_from_json(j.at("self_memory"));
  m.other_memory = matrix_from_json(j.at("other_memory"));
  m.dt = j.at("dt").get<std::vector<double>>();
  m.edge_feat = matrix_from_json(j.at("edge_feat"));
  m.timestamps = j.at("timestamps").get<std::vector<double>>();
  m.messages = matrix_from_json(j.at("messages"));
  return m;
}

inline auto state_to_json(const TgnState& s) -> Json {
  Json last = Json::array();
  for (double t : s.store.last_update) last.push_back(std::isfinite(t) ? Json(t) : Json(nullptr));
  Json cache = Json::array();
  for (const auto& q : s.cache.entries) {
    Json row = Json::array();
    for (const auto& e : q) row.push_back(Json{e.neighbor, e.timestamp, e.edge_feat});
    cache.push_back(std::move(row));
  }
  return Json{{"memory", to_json(s.store.memory)},
              {"last_update", std::move(last)},
              {"neighbor_capacity", s.cache.capacity},
              {"neighbors", std::move(cache)},
              {"pending", message_set_to_json(s.pending)}};
}

inline auto state_from_json(const Json& j) -> TgnState {
  TgnState s;
  s.store.memory = matrix_from_json(j.at("memory"));
  for (const auto& t : j.at("last_update"))
    s.store.last_update.push_back(t.is_null() ? kNeverUpdated : t.get<double>());
  if (s.store.last_update.size() != s.store.memory.rows())
    throw ValidationError("checkpoint", "last_update length differs from memory rows");
  s.cache.capacity = j.at("neighbor_capacity").get<std::size_t>();
  for (const auto& row : j.at("neighbors")) {
    std::deque<NeighborCache::Entry> q;
    for (const auto& e : row)
      q.push_back({e.at(0).get<NodeId>(), e.at(1).get<double>(), e.at(2).get<std::vector<double>>()});
    s.cache.entries.push_back(std::move(q));
  }
  s.pending = message_set_from_json(j.at("pending"));
  return s;
}

}  // namespace detail

inline auto checkpoint_to_json(TrainedModel& m, const RunConfig& cfg) -> Json {
  Json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config_hash"] = m.config_hash;
  j["config"] = cfg.to_kv();
  j["tgn_config"] = detail::tgn_config_to_json(m.tgn.config);
  j["tensors"] = detail::tensors_to_json(m.tgn.named_params());
  if (m.structmap) {
    j["structmap"] = Json{{"feature_dim", m.structmap->feature_dim()},
                          {"hidden", m.structmap->mlp.spec.hidden_dims.front()},
                          {"alpha", m.structmap->alpha},
                          {"coupled", m.structmap->coupled},
                          {"loss", "mse"},
                          {"tensors", detail::tensors_to_json(detail::structmap_named(*m.structmap))}};
  } else {
    j["structmap"] = nullptr;
  }
  j["standardizer"] = Json{{"mean", m.standardizer.mean}, {"stddev", m.standardizer.stddev}};
  j["positional_dim"] = m.positional_dim;
  j["window_fraction"] = m.window_fraction;
  j["train_span"] = m.train_span;
  j["state"] = detail::state_to_json(m.state);
  j["optimizer"] = Json{{"steps", m.optimizer.steps}, {"m", m.optimizer.m}, {"v", m.optimizer.v}};
  j["rng_state"] = m.rng_state;
  return j;
}

inline auto checkpoint_from_json(const Json& j) -> TrainedModel {
  if (j.value("format", std::string{}) != kCheckpointFormat)
    throw ValidationError("checkpoint", "not a tgnt checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw ValidationError("checkpoint", "unsupported checkpoint version");
  TrainedModel m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.tgn = TgnParams(detail::tgn_config_from_json(j.at("tgn_config")));
  detail::tensors_from_json(j.at("tensors"), m.tgn.named_params());
  if (!j.at("structmap").is_null()) {
    const auto& s = j.at("structmap");
    m.structmap = StructMapParams(s.at("feature_dim").get<std::size_t>(),
                                  s.at("hidden").get<std::size_t>(), m.tgn.config.memory_dim,
                                  s.at("alpha").get<double>());
    m.structmap->coupled = s.at("coupled").get<bool>();
    detail::tensors_from_json(s.at("tensors"), detail::structmap_named(*m.structmap));
  }
  m.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
  m.standardizer.stddev = j.at("standardizer").at("stddev").get<std::vector<double>>();
  m.positional_dim = j.at("positional_dim").get<std::size_t>();
  m.window_fraction = j.at("window_fraction").get<double>();
  m.train_span = j.at("train_span").get<double>();
  m.state = detail::state_from_json(j.at("state"));
  m.optimizer.steps = j.at("optimizer").at("steps").get<std::size_t>();
  m.optimizer.m = j.at("optimizer").at("m").get<std::vector<std::vector<double>>>();
  m.optimizer.v = j.at("optimizer").at("v").get<std::vector<std::vector<double>>>();
  m.rng_state = j.at("rng_state").get<std::string>();
  return m;
}

inline void save_checkpoint(const std::string& path, TrainedModel& m, const RunConfig& cfg) {
  write_file_atomic(path, checkpoint_to_json(m, cfg).dump() + "\n");
}

inline auto load_checkpoint(const std::string& path) -> TrainedModel {
  try {
    return checkpoint_from_json(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw ValidationError("checkpoint", std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace tgnt
