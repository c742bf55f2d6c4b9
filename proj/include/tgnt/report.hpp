#pragma once

// JSON and CSV renderings of training runs, transfer records and sweeps.

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgnt/config.hpp"
#include "tgnt/harness.hpp"

namespace tgnt {

using Json = nlohmann::json;

inline auto ranking_to_json(const RankingMetrics& r) -> Json {
  Json hits = Json::object();
  for (std::size_t i = 0; i < r.ks.size(); ++i) hits[std::to_string(r.ks[i])] = r.hits[i];
  return Json{{"mrr", r.mrr}, {"hits", std::move(hits)}, {"events", r.events}};
}

inline auto metrics_to_json(const MetricsRecord& r, bool include_batches = true) -> Json {
  Json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["alpha"] = r.alpha;
  j["evaluation_region"] = Json{{"first_event", r.eval_begin},
                                {"end_event", r.eval_end},
                                {"start_time", r.eval_start_time},
                                {"end_time", r.eval_end_time}};
  j["finetune_events"] = r.finetune_events;
  j["finetune_end_time"] = r.finetune_end_time ? Json(*r.finetune_end_time) : Json(nullptr);
  j["eval_loss"] = r.eval_loss;
  j["eval_total_loss"] = r.eval_total_loss;
  j["ranking"] = ranking_to_json(r.ranking);
  j["optimizer_steps"] = r.optimizer_steps;
  j["cold_starts"] = r.cold_starts;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  if (include_batches) {
    Json b = Json::array();
    for (const auto& x : r.batches)
      b.push_back(Json{{"index", x.index},
                       {"region", x.region},
                       {"first_event", x.begin},
                       {"end_event", x.end},
                       {"start_time", x.start_time},
                       {"end_time", x.end_time},
                       {"total_loss", x.total_loss},
                       {"tlp_loss", x.tlp_loss},
                       {"structmap_loss", x.has_structmap ? Json(x.structmap_loss) : Json(nullptr)},
                       {"cold_starts", x.cold_starts}});
    j["batches"] = std::move(b);
  }
  return j;
}

// Per-batch loss curve. The first line is a comment carrying the config hash.
inline auto metrics_to_csv(const std::vector<MetricsRecord>& records, const std::string& hash)
    -> std::string {
  std::string out = "# config_hash=" + hash + "\n";
  out += "scenario,seed,batch,region,first_event,end_event,start_time,end_time,total_loss,tlp_loss,structmap_loss,cold_starts\n";
  for (const auto& r : records)
    for (const auto& b : r.batches) {
      out += r.scenario + "," + std::to_string(r.seed) + "," + std::to_string(b.index) + "," +
             b.region + "," + std::to_string(b.begin) + "," + std::to_string(b.end) + "," +
             detail::format_double(b.start_time) + "," + detail::format_double(b.end_time) + "," +
             detail::format_double(b.total_loss) + "," + detail::format_double(b.tlp_loss) + "," +
             (b.has_structmap ? detail::format_double(b.structmap_loss) : std::string()) + "," +
             std::to_string(b.cold_starts) + "\n";
    }
  return out;
}

inline auto training_to_csv(const TrainResult& t, const std::string& hash) -> std::string {
  std::string out = "# config_hash=" + hash + "\n";
  out += "epoch,batch,events,total_loss,tlp_loss,structmap_loss,val_loss\n";
  for (const auto& e : t.epochs)
    for (std::size_t b = 0; b < e.stats.total.size(); ++b)
      out += std::to_string(e.epoch) + "," + std::to_string(b) + "," +
             std::to_string(e.stats.batch_sizes[b]) + "," + detail::format_double(e.stats.total[b]) +
             "," + detail::format_double(e.stats.tlp[b]) + "," +
             detail::format_double(e.stats.structmap[b]) + "," +
             (std::isnan(e.val_loss) ? std::string() : detail::format_double(e.val_loss)) + "\n";
  return out;
}

inline auto dispersion_to_json(const Dispersion& d) -> Json {
  return Json{{"count", d.count}, {"mean", d.mean}, {"stddev", d.stddev}, {"min", d.min}, {"max", d.max}};
}

inline auto sweep_to_json(const SweepResult& s, const RunConfig& cfg) -> Json {
  Json j;
  j["config_hash"] = cfg.hash();
  j["config"] = cfg.to_kv();
  Json runs = Json::array();
  for (const auto& r : s.runs) {
    Json run{{"seed", r.seed}, {"epochs_run", r.epochs_run}};
    run["error"] = r.error.empty() ? Json(nullptr) : Json(r.error);
    Json recs = Json::array();
    for (const auto& m : r.records) recs.push_back(metrics_to_json(m, false));
    run["records"] = std::move(recs);
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  Json summary = Json::array();
  for (const auto& x : s.summary)
    summary.push_back(Json{{"scenario", x.scenario},
                           {"eval_loss", dispersion_to_json(x.eval_loss)},
                           {"mrr", dispersion_to_json(x.mrr)}});
  j["summary"] = std::move(summary);
  return j;
}

}  // namespace tgnt
