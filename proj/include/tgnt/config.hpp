#pragma once

// RunConfig: every tunable of a run, read from a flat `key = value` file and
// overridable by flags. The content hash covers every key (no paths live here).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tgnt/ctdg.hpp"
#include "tgnt/error.hpp"
#include "tgnt/splitter.hpp"
#include "tgnt/tgn.hpp"

namespace tgnt {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

template <class T>
auto join(const std::vector<T>& v) -> std::string {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

inline auto parse_uint(const std::string& key, const std::string& s) -> std::uint64_t {
  std::uint64_t v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("config", "key '" + key + "': expected a non-negative integer, got '" + s + "'");
  return v;
}

inline auto parse_real(const std::string& key, const std::string& s) -> double {
  double v{};
  if (!parse_double(s, v))
    throw ConfigError("config", "key '" + key + "': expected a number, got '" + s + "'");
  return v;
}

inline auto parse_bool(const std::string& key, const std::string& s) -> bool {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config", "key '" + key + "': expected a boolean, got '" + s + "'");
}

inline auto parse_uint_list(const std::string& key, const std::string& s)
    -> std::vector<std::size_t> {
  std::vector<std::size_t> out;
  if (s.empty()) return out;
  for (auto f : split_fields(s, ','))
    out.push_back(static_cast<std::size_t>(parse_uint(key, std::string(f))));
  return out;
}

inline auto fnv1a64(std::string_view s) -> std::uint64_t {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

struct RunConfig {
  // Generator.
  GeneratorSpec generator{};
  std::uint64_t data_seed{7};
  // Split.
  SplitConfig split{};
  std::uint64_t split_seed{11};
  // Model.
  TgnConfig tgn{};
  bool use_structmap{true};
  std::size_t structmap_hidden{64};
  double alpha{1.0};
  bool coupled_structmap{false};
  std::size_t positional_dim{4};
  double window_fraction{0.01};
  // Training.
  std::size_t batch_size{100};
  double lr{1e-3};
  std::size_t epochs{10};
  std::size_t patience{5};
  std::size_t train_negatives{1};
  std::uint64_t seed{1};
  // Transfer.
  std::string scenario{"no_warm_start"};
  double finetune_fraction{0.2};
  std::string finetune_scope{"all"};
  std::size_t eval_negatives{20};
  std::vector<std::size_t> hits_k{1, 3, 10};
  // Analysis.
  std::size_t sample_pairs{5000};
  double analysis_window{1.0};
  // Seed sweep.
  std::vector<std::size_t> seeds{1, 2, 3, 4, 5};

  [[nodiscard]] auto to_kv() const -> KeyValues {
    using detail::format_double;
    using detail::join;
    KeyValues kv;
    kv["communities"] = std::to_string(generator.num_communities);
    kv["nodes_per_community"] = std::to_string(generator.nodes_per_community);
    kv["events"] = std::to_string(generator.num_events);
    kv["p_in"] = format_double(generator.p_in);
    kv["p_out"] = format_double(generator.p_out);
    kv["pa_strength"] = format_double(generator.pa_strength);
    kv["time_span"] = format_double(generator.time_span);
    kv["repeat_prob"] = format_double(generator.repeat_prob);
    kv["recent_partners"] = std::to_string(generator.recent_partners);
    kv["edge_dim"] = std::to_string(generator.edge_dim);
    kv["data_seed"] = std::to_string(data_seed);
    kv["split_groups"] = std::to_string(split.groups);
    kv["balance_tolerance"] = format_double(split.balance_tolerance);
    kv["split_seed"] = std::to_string(split_seed);
    kv["memory_dim"] = std::to_string(tgn.memory_dim);
    kv["embedding_dim"] = std::to_string(tgn.embedding_dim);
    kv["time_dim"] = std::to_string(tgn.time_dim);
    kv["message_hidden"] = join(tgn.message_hidden);
    kv["decoder_hidden"] = join(tgn.decoder_hidden);
    kv["neighbors"] = std::to_string(tgn.num_neighbors);
    kv["use_structmap"] = use_structmap ? "true" : "false";
    kv["structmap_hidden"] = std::to_string(structmap_hidden);
    kv["alpha"] = format_double(alpha);
    kv["coupled_structmap"] = coupled_structmap ? "true" : "false";
    kv["positional_dim"] = std::to_string(positional_dim);
    kv["window_fraction"] = format_double(window_fraction);
    kv["batch_size"] = std::to_string(batch_size);
    kv["lr"] = format_double(lr);
    kv["epochs"] = std::to_string(epochs);
    kv["patience"] = std::to_string(patience);
    kv["train_negatives"] = std::to_string(train_negatives);
    kv["seed"] = std::to_string(seed);
    kv["scenario"] = scenario;
    kv["finetune_fraction"] = format_double(finetune_fraction);
    kv["finetune_scope"] = finetune_scope;
    kv["eval_negatives"] = std::to_string(eval_negatives);
    kv["hits_k"] = join(hits_k);
    kv["sample_pairs"] = std::to_string(sample_pairs);
    kv["analysis_window"] = format_double(analysis_window);
    kv["seeds"] = join(seeds);
    return kv;
  }

  void set(const std::string& key, const std::string& value) {
    using namespace detail;
    auto u = [&] { return static_cast<std::size_t>(parse_uint(key, value)); };
    auto r = [&] { return parse_real(key, value); };
    if (key == "communities") generator.num_communities = u();
    else if (key == "nodes_per_community") generator.nodes_per_community = u();
    else if (key == "events") generator.num_events = u();
    else if (key == "p_in") generator.p_in = r();
    else if (key == "p_out") generator.p_out = r();
    else if (key == "pa_strength") generator.pa_strength = r();
    else if (key == "time_span") generator.time_span = r();
    else if (key == "repeat_prob") generator.repeat_prob = r();
    else if (key == "recent_partners") generator.recent_partners = u();
    else if (key == "edge_dim") generator.edge_dim = u();
    else if (key == "data_seed") data_seed = parse_uint(key, value);
    else if (key == "split_groups") split.groups = u();
    else if (key == "balance_tolerance") split.balance_tolerance = r();
    else if (key == "split_seed") split_seed = parse_uint(key, value);
    else if (key == "memory_dim") tgn.memory_dim = u();
    else if (key == "embedding_dim") tgn.embedding_dim = u();
    else if (key == "time_dim") tgn.time_dim = u();
    else if (key == "message_hidden") tgn.message_hidden = parse_uint_list(key, value);
    else if (key == "decoder_hidden") tgn.decoder_hidden = parse_uint_list(key, value);
    else if (key == "neighbors") tgn.num_neighbors = u();
    else if (key == "use_structmap") use_structmap = parse_bool(key, value);
    else if (key == "structmap_hidden") structmap_hidden = u();
    else if (key == "alpha") alpha = r();
    else if (key == "coupled_structmap") coupled_structmap = parse_bool(key, value);
    else if (key == "positional_dim") positional_dim = u();
    else if (key == "window_fraction") window_fraction = r();
    else if (key == "batch_size") batch_size = u();
    else if (key == "lr") lr = r();
    else if (key == "epochs") epochs = u();
    else if (key == "patience") patience = u();
    else if (key == "train_negatives") train_negatives = u();
    else if (key == "seed") seed = parse_uint(key, value);
    else if (key == "scenario") scenario = value;
    else if (key == "finetune_fraction") finetune_fraction = r();
    else if (key == "finetune_scope") finetune_scope = value;
    else if (key == "eval_negatives") eval_negatives = u();
    else if (key == "hits_k") hits_k = parse_uint_list(key, value);
    else if (key == "sample_pairs") sample_pairs = u();
    else if (key == "analysis_window") analysis_window = r();
    else if (key == "seeds") seeds = parse_uint_list(key, value);
    else throw ConfigError("config", "unknown key '" + key + "'");
  }

  void validate() const {
    if (batch_size == 0) throw ConfigError("config", "batch_size must be >= 1");
    if (!(lr >= 0.0)) throw ConfigError("config", "lr must be >= 0");
    if (alpha < 0.0) throw ConfigError("config", "alpha must be >= 0");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
      throw ConfigError("config", "window_fraction must be in (0, 1]");
    if (!(analysis_window > 0.0 && analysis_window <= 1.0))
      throw ConfigError("config", "analysis_window must be in (0, 1]");
    if (finetune_fraction < 0.0 || finetune_fraction >= 1.0)
      throw ConfigError("config", "finetune_fraction must be in [0, 1)");
    if (finetune_scope != "all" && finetune_scope != "memory")
      throw ConfigError("config", "finetune_scope must be 'all' or 'memory'");
    if (scenario != "no_warm_start" && scenario != "warm_start" &&
        scenario != "structural_mapping")
      throw ConfigError("config", "unknown scenario '" + scenario + "'");
    if (eval_negatives == 0 || train_negatives == 0)
      throw ConfigError("config", "negative counts must be >= 1");
  }

  // Canonical serialization: sorted `key=value` lines.
  [[nodiscard]] auto canonical() const -> std::string {
    std::string out;
    for (const auto& [k, v] : to_kv()) out += k + "=" + v + "\n";
    return out;
  }

  [[nodiscard]] auto hash() const -> std::string {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(canonical())));
    return buf;
  }
};

// `key = value` lines; blank lines and `#` comments ignored.
inline void apply_kv_text(RunConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config", "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = std::string(detail::trim(t.substr(0, eq)));
    const auto value = std::string(detail::trim(t.substr(eq + 1)));
    cfg.set(key, value);
  }
}

inline auto load_config(const std::string& path) -> RunConfig {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  RunConfig cfg;
  apply_kv_text(cfg, in);
  return cfg;
}

inline auto to_kv_text(const RunConfig& cfg) -> std::string {
  std::string out = "# tgnt run configuration (hash " + cfg.hash() + ")\n";
  for (const auto& [k, v] : cfg.to_kv()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace tgnt
