// tgnt command-line driver.
//
//   tgnt_cli <subcommand> [--config FILE] [--<key> VALUE ...] [subcommand flags]
//
// Every RunConfig key is accepted as a flag (underscores become dashes) and
// overrides the config file. Exit codes: 0 ok, 1 validation/config error,
// 2 usage error, 3 divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgnt/checkpoint.hpp"
#include "tgnt/config.hpp"
#include "tgnt/ctdg.hpp"
#include "tgnt/harness.hpp"
#include "tgnt/report.hpp"
#include "tgnt/splitter.hpp"
#include "tgnt/structfeat.hpp"
#include "tgnt/tgn.hpp"

#ifndef TGNT_VERSION
#define TGNT_VERSION "0.1.0+unknown"
#endif

namespace {

using tgnt::Json;
using tgnt::RunConfig;

void log_line(const std::string& msg) { std::cerr << "[tgnt] " << msg << '\n'; }

// Config file path plus one string slot per RunConfig key.
struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("--config", path, "Run configuration file (key = value lines)");
    static const std::map<std::string, std::string> aliases = {
        {"memory_dim", "--dm"}, {"embedding_dim", "--dn"}, {"time_dim", "--dt"},
        {"neighbors", "--k"},   {"window_fraction", "--w"}};
    for (const auto& [key, value] : RunConfig{}.to_kv()) {
      std::string name = "--" + key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (auto a = aliases.find(key); a != aliases.end()) name += "," + a->second;
      values[key] = value;
      options[key] = app.add_option(name, values[key], "config key '" + key + "'");
    }
  }

  [[nodiscard]] auto build() const -> RunConfig {
    RunConfig cfg = path.empty() ? RunConfig{} : tgnt::load_config(path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values.at(key));
    cfg.validate();
    return cfg;
  }
};

auto with_hash_comment(const std::string& body, const std::string& hash) -> std::string {
  return "# config_hash=" + hash + "\n" + body;
}

auto provenance(const RunConfig& cfg) -> Json {
  return Json{{"config_hash", cfg.hash()}, {"config", cfg.to_kv()}, {"version", TGNT_VERSION}};
}

void write_json(const std::string& path, const Json& j) {
  tgnt::write_file_atomic(path, j.dump(2) + "\n");
  log_line("wrote " + path);
}

void write_text(const std::string& path, const std::string& text) {
  tgnt::write_file_atomic(path, text);
  log_line("wrote " + path);
}

// ------------------------------------------------------------ subcommands

void cmd_generate(const RunConfig& cfg, const std::string& out, const std::string& communities_out) {
  tgnt::Rng rng(cfg.data_seed);
  const auto stream = tgnt::generate_synthetic(cfg.generator, rng);
  write_text(out, with_hash_comment(tgnt::to_csv_string(stream), cfg.hash()));
  if (!communities_out.empty()) {
    const auto planted = tgnt::planted_communities(stream, cfg.generator);
    std::string csv = "node,community\n";
    for (std::size_t v = 0; v < stream.num_nodes; ++v)
      csv += stream.original_ids[v] + "," + std::to_string(planted[v]) + "\n";
    write_text(communities_out, with_hash_comment(csv, cfg.hash()));
  }
  log_line("generated " + std::to_string(stream.size()) + " events over " +
           std::to_string(stream.num_nodes) + " nodes");
}

void cmd_split(const RunConfig& cfg, const std::string& in, const std::string& out_dir) {
  const auto stream = tgnt::load_csv(in);
  tgnt::Rng rng(cfg.split_seed);
  const auto assignment = tgnt::louvain(tgnt::aggregate_static(stream), rng);
  const auto split = tgnt::make_transfer_split(stream, assignment, cfg.split);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  write_text((dir / "train.csv").string(), with_hash_comment(tgnt::to_csv_string(split.train), cfg.hash()));
  if (cfg.split.groups == 3)
    write_text((dir / "val.csv").string(), with_hash_comment(tgnt::to_csv_string(split.val), cfg.hash()));
  write_text((dir / "test.csv").string(), with_hash_comment(tgnt::to_csv_string(split.test), cfg.hash()));

  Json j = provenance(cfg);
  Json community = Json::object();
  for (std::size_t v = 0; v < stream.num_nodes; ++v)
    community[stream.original_ids[v]] = assignment.community_of[v];
  j["community_of"] = std::move(community);
  j["num_communities"] = assignment.num_communities;
  j["modularity"] = assignment.modularity;
  j["modularity_trace"] = assignment.modularity_trace;
  j["group_of_community"] = split.group_of_community;
  j["dropped_events"] = split.dropped_events;
  j["events"] = Json{{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
  j["nodes"] = Json{{"train", split.train_nodes.size()},
                    {"val", split.val_nodes.size()},
                    {"test", split.test_nodes.size()}};
  j["balance"] = Json{{"ratio", split.balance_ratio},
                      {"balanced", split.balanced},
                      {"tolerance", cfg.split.balance_tolerance},
                      {"warning", split.warning}};
  write_json((dir / "split.json").string(), j);
  if (!split.warning.empty()) log_line("warning: " + split.warning);
  log_line("louvain: " + std::to_string(assignment.num_communities) +
           " communities, modularity " + tgnt::detail::format_double(assignment.modularity));
}

void cmd_features(const RunConfig& cfg, const std::string& in, const std::string& out) {
  const auto stream = tgnt::load_csv(in);
  const auto batches = tgnt::make_batches(stream, cfg.batch_size);
  const double span = stream.span() > 0.0 ? stream.span() : 1.0;
  auto feats = tgnt::raw_batch_features(stream, batches, cfg.window_fraction, span, cfg.positional_dim);
  const std::size_t dim = tgnt::kTopologicalFeatures + cfg.positional_dim;
  const auto raw = feats;
  const auto z = tgnt::fit_batch_standardizer(feats, dim);
  tgnt::standardize_in_place(feats, z);
  std::vector<std::string> names{"degree", "betweenness", "closeness", "clustering"};
  for (std::size_t p = 1; p <= cfg.positional_dim; ++p) names.push_back("rwpe_" + std::to_string(p));
  std::string csv = "batch,node,window_start,window_end";
  for (const auto& n : names) csv += "," + n;
  for (const auto& n : names) csv += ",z_" + n;
  csv += "\n";
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const double end = batches[b].start_time;
    const double begin = end - cfg.window_fraction * span;
    for (std::size_t i = 0; i < raw[b].nodes.size(); ++i) {
      csv += std::to_string(b) + "," + stream.original_ids[raw[b].nodes[i]] + "," +
             tgnt::detail::format_double(begin) + "," + tgnt::detail::format_double(end);
      for (double v : raw[b].standardized.row(i)) csv += "," + tgnt::detail::format_double(v);
      for (double v : feats[b].standardized.row(i)) csv += "," + tgnt::detail::format_double(v);
      csv += "\n";
    }
  }
  write_text(out, with_hash_comment(csv, cfg.hash()));
}

void cmd_train(const RunConfig& cfg, const std::string& train_path, const std::string& val_path,
               const std::string& checkpoint, const std::string& metrics) {
  const auto train = tgnt::load_csv(train_path);
  std::optional<tgnt::EventStream> val;
  if (!val_path.empty()) val = tgnt::load_csv(val_path);
  auto result = tgnt::train_model(cfg, train, val ? &*val : nullptr);
  tgnt::save_checkpoint(checkpoint, result.model, cfg);
  log_line("wrote " + checkpoint);
  write_text(metrics, tgnt::training_to_csv(result, cfg.hash()));
  const auto& last = result.epochs.back();
  log_line("epochs run " + std::to_string(result.epochs.size()) + ", kept epoch " +
           std::to_string(result.best_epoch) + ", last mean TLP " +
           tgnt::detail::format_double(last.stats.mean_tlp()));
}

void cmd_transfer(const RunConfig& cfg, const std::string& checkpoint, const std::string& test_path,
                  const std::string& scenario, const std::string& out_json,
                  const std::string& out_csv) {
  const auto model = tgnt::load_checkpoint(checkpoint);
  if (model.config_hash != cfg.hash())
    log_line("note: checkpoint config hash " + model.config_hash + " differs from run hash " + cfg.hash());
  const auto test = tgnt::load_csv(test_path);
  std::vector<tgnt::ScenarioKind> kinds;
  if (scenario == "all") kinds = tgnt::all_scenarios(cfg);
  else kinds.push_back(tgnt::parse_scenario(scenario.empty() ? cfg.scenario : scenario));
  std::vector<tgnt::MetricsRecord> records;
  for (auto k : kinds) {
    records.push_back(tgnt::run_transfer(model, test, tgnt::TransferScenario::from_config(cfg, k), cfg));
    const auto& r = records.back();
    log_line(r.scenario + ": eval loss " + tgnt::detail::format_double(r.eval_loss) + ", MRR " +
             tgnt::detail::format_double(r.ranking.mrr));
  }
  Json j = provenance(cfg);
  j["checkpoint_config_hash"] = model.config_hash;
  Json recs = Json::array();
  for (const auto& r : records) recs.push_back(tgnt::metrics_to_json(r));
  j["records"] = std::move(recs);
  write_json(out_json, j);
  if (!out_csv.empty()) write_text(out_csv, tgnt::metrics_to_csv(records, cfg.hash()));
}

void cmd_analyze(const RunConfig& cfg, const std::string& checkpoint, const std::string& train_path,
                 const std::string& out) {
  const auto model = tgnt::load_checkpoint(checkpoint);
  const auto train = tgnt::load_csv(train_path);
  tgnt::Rng rng(cfg.seed ^ tgnt::kEvalSalt);
  const auto r = tgnt::analyze_memory(model, train, cfg.analysis_window, cfg.sample_pairs, rng);
  Json j = provenance(cfg);
  j["checkpoint_config_hash"] = model.config_hash;
  j["distance"] = "euclidean";
  j["nodes"] = r.nodes;
  j["pairs"] = r.correlation.pairs;
  j["analysis_window"] = cfg.analysis_window;
  j["pearson"] = r.correlation.pearson;
  j["spearman"] = r.correlation.spearman;
  write_json(out, j);
  log_line("distance correlation: pearson " + tgnt::detail::format_double(r.correlation.pearson) +
           ", spearman " + tgnt::detail::format_double(r.correlation.spearman));
}

void cmd_sweep(const RunConfig& cfg, const std::string& train_path, const std::string& val_path,
               const std::string& test_path, const std::string& out_json, const std::string& out_csv) {
  const auto train = tgnt::load_csv(train_path);
  const auto test = tgnt::load_csv(test_path);
  std::optional<tgnt::EventStream> val;
  if (!val_path.empty()) val = tgnt::load_csv(val_path);
  std::vector<std::uint64_t> seeds(cfg.seeds.begin(), cfg.seeds.end());
  const auto sweep = tgnt::seed_sweep(cfg, seeds, train, val ? &*val : nullptr, test);
  Json j = tgnt::sweep_to_json(sweep, cfg);
  j["version"] = TGNT_VERSION;
  write_json(out_json, j);
  if (!out_csv.empty()) {
    std::vector<tgnt::MetricsRecord> all;
    for (const auto& r : sweep.runs) all.insert(all.end(), r.records.begin(), r.records.end());
    write_text(out_csv, tgnt::metrics_to_csv(all, cfg.hash()));
  }
  for (const auto& s : sweep.summary)
    log_line(s.scenario + ": eval loss mean " + tgnt::detail::format_double(s.eval_loss.mean) +
             " sd " + tgnt::detail::format_double(s.eval_loss.stddev) + ", MRR mean " +
             tgnt::detail::format_double(s.mrr.mean));
}

void cmd_params(const RunConfig& cfg, std::size_t num_nodes, const std::string& out_json) {
  tgnt::TgnParams p(tgnt::make_tgn_config(cfg, cfg.generator.edge_dim));
  const auto c = tgnt::count_parameters(p, num_nodes);
  std::printf("%-22s %12s %12s\n", "component", "actual", "closed_form");
  std::printf("%-22s %12zu %12zu\n", "memory_store", c.memory_store, num_nodes * cfg.tgn.memory_dim);
  for (const auto& comp : c.components)
    std::printf("%-22s %12zu %12zu\n", comp.name.c_str(), comp.actual, comp.closed_form());
  std::printf("%-22s %12zu\n", "trainable_total", c.trainable());
  std::printf("%-22s %12zu\n", "total", c.total());
  std::printf("memory fraction: %.4f\n", c.memory_fraction());
  std::printf("node embeddings (intermediate, N x d_N): %zu\n", c.node_embedding_state);
  std::printf("reference weight counts: message MLP over d_N inputs %zu, over d_M inputs %zu, "
              "MLP updater %zu\n",
              c.message_formula_dn, c.message_formula_dm, c.updater_formula_mlp);
  if (!out_json.empty()) {
    Json j = provenance(cfg);
    j["num_nodes"] = num_nodes;
    j["memory_store"] = c.memory_store;
    Json comps = Json::array();
    for (const auto& comp : c.components)
      comps.push_back(Json{{"name", comp.name},
                           {"actual", comp.actual},
                           {"weights", comp.weights},
                           {"biases", comp.biases},
                           {"closed_form", comp.closed_form()}});
    j["components"] = std::move(comps);
    j["trainable"] = c.trainable();
    j["total"] = c.total();
    j["memory_fraction"] = c.memory_fraction();
    write_json(out_json, j);
  }
}

}  // namespace

auto main(int argc, char** argv) -> int {
  CLI::App app{"tgnt: temporal link prediction with structural cold start"};
  app.set_version_flag("--version", std::string(TGNT_VERSION));
  app.require_subcommand(1);

  std::map<std::string, std::unique_ptr<ConfigFlags>> flags;
  auto sub = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    flags[name] = std::make_unique<ConfigFlags>();
    flags[name]->attach(*s);
    return s;
  };

  std::string in, out, out_dir, communities_out, train_path, val_path, test_path, checkpoint,
      metrics, scenario, out_json, out_csv;
  std::size_t num_nodes = 10000;

  auto* gen = sub("generate", "Generate a synthetic community-structured event stream");
  gen->add_option("--out", out, "Output CSV")->required();
  gen->add_option("--communities-out", communities_out, "Planted community CSV");

  auto* split = sub("split", "Louvain node-disjoint transfer split");
  split->add_option("--in", in, "Input stream CSV")->required();
  split->add_option("--out-dir", out_dir, "Directory for train/val/test CSV and split.json")->required();

  auto* feats = sub("features", "Dump per-batch structural feature matrices");
  feats->add_option("--in", in, "Input stream CSV")->required();
  feats->add_option("--out", out, "Output CSV")->required();

  auto* train = sub("train", "Train a model and write a checkpoint");
  train->add_option("--train", train_path, "Training stream CSV")->required();
  train->add_option("--val", val_path, "Validation stream CSV (enables early stopping)");
  train->add_option("--checkpoint", checkpoint, "Checkpoint output (JSON)")->required();
  train->add_option("--metrics", metrics, "Per-batch training loss CSV")->required();

  auto* transfer = sub("transfer", "Run transfer scenarios on a test stream");
  transfer->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  transfer->add_option("--test", test_path, "Test stream CSV")->required();
  transfer->add_option("--run-scenario", scenario,
                       "no_warm_start | warm_start | structural_mapping | all (default: config scenario)");
  transfer->add_option("--out-json", out_json, "MetricsRecord JSON output")->required();
  transfer->add_option("--out-csv", out_csv, "Per-batch loss curve CSV");

  auto* analyze = sub("analyze", "Correlate memory distances with structural-feature distances");
  analyze->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  analyze->add_option("--train", train_path, "Stream the checkpoint was trained on")->required();
  analyze->add_option("--out", out, "Output JSON")->required();

  auto* sweep = sub("seed-sweep", "Train and transfer for every seed in the config");
  sweep->add_option("--train", train_path, "Training stream CSV")->required();
  sweep->add_option("--val", val_path, "Validation stream CSV");
  sweep->add_option("--test", test_path, "Test stream CSV")->required();
  sweep->add_option("--out-json", out_json, "Sweep JSON output")->required();
  sweep->add_option("--out-csv", out_csv, "Per-batch loss curves for every seed");

  auto* params = sub("params", "Parameter accounting table");
  params->add_option("--n", num_nodes, "Number of nodes");
  params->add_option("--out-json", out_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto* chosen = app.get_subcommands().front();
    const RunConfig cfg = flags.at(chosen->get_name())->build();
    log_line("tgnt " + std::string(TGNT_VERSION) + " " + chosen->get_name() + " config_hash=" + cfg.hash());
    const auto name = chosen->get_name();
    if (name == "generate") cmd_generate(cfg, out, communities_out);
    else if (name == "split") cmd_split(cfg, in, out_dir);
    else if (name == "features") cmd_features(cfg, in, out);
    else if (name == "train") cmd_train(cfg, train_path, val_path, checkpoint, metrics);
    else if (name == "transfer") cmd_transfer(cfg, checkpoint, test_path, scenario, out_json, out_csv);
    else if (name == "analyze") cmd_analyze(cfg, checkpoint, train_path, out);
    else if (name == "seed-sweep") cmd_sweep(cfg, train_path, val_path, test_path, out_json, out_csv);
    else if (name == "params") cmd_params(cfg, num_nodes, out_json);
  } catch (const tgnt::DivergenceError& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 3;
  } catch (const tgnt::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
