#pragma once

// Experiment driver: training with optional validation early stopping, the
// three transfer scenarios, ranking metrics and the seed sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tgnt/config.hpp"
#include "tgnt/ctdg.hpp"
#include "tgnt/error.hpp"
#include "tgnt/matrix.hpp"
#include "tgnt/memory.hpp"
#include "tgnt/nn/optim.hpp"
#include "tgnt/splitter.hpp"
#include "tgnt/structfeat.hpp"
#include "tgnt/structmap.hpp"
#include "tgnt/tgn.hpp"

namespace tgnt {

// ---------------------------------------------------------------- ranking

// Rank of the true score among itself and its negatives, ties averaged:
// 1 + #(negatives above) + #(negatives tied) / 2.
inline auto tied_rank(double positive, std::span<const double> negatives) -> double {
  std::size_t above = 0;
  std::size_t tied = 0;
  for (double n : negatives) {
    if (n > positive) ++above;
    else if (n == positive) ++tied;
  }
  return 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(tied);
}

struct RankingMetrics {
  double mrr{0.0};
  std::vector<std::size_t> ks;
  std::vector<double> hits;
  std::size_t events{0};
};

// Streaming accumulator so metrics can be gathered batch by batch.
class RankingAccumulator {
 public:
  explicit RankingAccumulator(std::vector<std::size_t> ks) : ks_(std::move(ks)), hits_(ks_.size()) {}

  void add(std::span<const double> positives, const Matrix& negatives) {
    if (negatives.rows() != positives.size())
      throw ShapeError("harness: one negative row per positive required");
    if (!positives.empty() && negatives.cols() == 0)
      throw ValidationError("harness", "ranking needs k >= 1 negatives per event");
    for (std::size_t i = 0; i < positives.size(); ++i) {
      const double r = tied_rank(positives[i], negatives.row(i));
      rr_sum_ += 1.0 / r;
      for (std::size_t j = 0; j < ks_.size(); ++j)
        if (r <= static_cast<double>(ks_[j])) ++hits_[j];
      ++n_;
    }
  }

  [[nodiscard]] auto result() const -> RankingMetrics {
    RankingMetrics m;
    m.ks = ks_;
    m.events = n_;
    m.hits.assign(ks_.size(), 0.0);
    if (n_ == 0) return m;
    m.mrr = rr_sum_ / static_cast<double>(n_);
    for (std::size_t j = 0; j < ks_.size(); ++j)
      m.hits[j] = static_cast<double>(hits_[j]) / static_cast<double>(n_);
    return m;
  }

 private:
  std::vector<std::size_t> ks_;
  std::vector<std::size_t> hits_;
  double rr_sum_{0.0};
  std::size_t n_{0};
};

inline auto compute_ranking_metrics(std::span<const double> positives, const Matrix& negatives,
                                    const std::vector<std::size_t>& ks) -> RankingMetrics {
  RankingAccumulator acc(ks);
  acc.add(positives, negatives);
  return acc.result();
}

// ------------------------------------------------------- feature plumbing

// Unique endpoints of a batch in first-appearance order.
inline auto batch_endpoints(const EventStream& stream, const EventBatch& batch)
    -> std::vector<NodeId> {
  std::vector<NodeId> out;
  std::vector<bool> seen(stream.num_nodes, false);
  for (const auto& e : batch.view(stream))
    for (NodeId v : {e.src, e.dst})
      if (!seen[v]) {
        seen[v] = true;
        out.push_back(v);
      }
  return out;
}

// Raw (unstandardized) window features of each batch's endpoints, using the
// window that ends at the batch start.
inline auto raw_batch_features(const EventStream& stream, const std::vector<EventBatch>& batches,
                               double window_fraction, double train_span,
                               std::size_t positional_dim) -> std::vector<BatchFeatures> {
  std::vector<BatchFeatures> out;
  out.reserve(batches.size());
  for (const auto& b : batches) {
    BatchFeatures f;
    f.nodes = batch_endpoints(stream, b);
    const auto w = aggregate_window(stream, b.start_time, window_fraction, train_span);
    f.standardized = features_of(w, f.nodes, positional_dim);
    out.push_back(std::move(f));
  }
  return out;
}

inline auto fit_batch_standardizer(const std::vector<BatchFeatures>& raw, std::size_t dim)
    -> FeatureStandardizer {
  Matrix all(0, dim);
  for (const auto& f : raw)
    for (std::size_t i = 0; i < f.standardized.rows(); ++i) all.append_row(f.standardized.row(i));
  return fit_standardizer(all);
}

inline void standardize_in_place(std::vector<BatchFeatures>& feats, const FeatureStandardizer& s) {
  for (auto& f : feats)
    for (std::size_t i = 0; i < f.standardized.rows(); ++i) {
      const auto z = s.apply(std::span<const double>(f.standardized.row(i)));
      std::copy(z.values.begin(), z.values.end(), f.standardized.row(i).begin());
    }
}

// --------------------------------------------------------------- training

// Everything a checkpoint carries.
struct TrainedModel {
  TgnParams tgn;
  std::optional<StructMapParams> structmap;
  FeatureStandardizer standardizer;
  std::size_t positional_dim{4};
  double window_fraction{0.01};
  double train_span{1.0};
  TgnState state;  // streaming state on the training graph after the kept epoch
  nn::AdamState optimizer;
  std::string rng_state;
  std::string config_hash;
};

struct EpochRecord {
  std::size_t epoch{};
  EpochStats stats;
  double val_loss{std::numeric_limits<double>::quiet_NaN()};
};

struct TrainResult {
  TrainedModel model;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch{};
  bool early_stopped{false};
};

inline constexpr std::uint64_t kSamplingSalt = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kEvalSalt = 0xd1b54a32d192ed03ULL;

inline auto rng_state_string(const Rng& rng) -> std::string {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline auto make_tgn_config(const RunConfig& cfg, std::size_t edge_dim) -> TgnConfig {
  TgnConfig c = cfg.tgn;
  c.edge_dim = edge_dim;
  return c;
}

inline auto init_model(const RunConfig& cfg, const EventStream& train, Rng& init_rng)
    -> TrainedModel {
  if (train.size() < 2) throw ValidationError("harness", "training stream needs >= 2 events");
  TrainedModel m;
  m.tgn = TgnParams(make_tgn_config(cfg, train.edge_dim));
  m.train_span = train.span() > 0.0 ? train.span() : 1.0;
  m.tgn.init(init_rng, m.train_span);
  m.positional_dim = cfg.positional_dim;
  m.window_fraction = cfg.window_fraction;
  if (cfg.use_structmap) {
    m.structmap = StructMapParams(kTopologicalFeatures + cfg.positional_dim, cfg.structmap_hidden,
                                  cfg.tgn.memory_dim, cfg.alpha);
    m.structmap->coupled = cfg.coupled_structmap;
    m.structmap->init(init_rng);
  }
  m.state = TgnState(train.num_nodes, m.tgn.config);
  m.config_hash = cfg.hash();
  return m;
}

// Mean TLP loss of a frozen model streamed over `stream` from zero memory.
inline auto evaluate_stream(TgnParams& p, const EventStream& stream, std::size_t batch_size,
                            std::size_t num_negatives, std::uint64_t seed) -> double {
  TgnState s(stream.num_nodes, p.config);
  Rng rng(seed ^ kEvalSalt);
  double sum = 0.0;
  std::size_t n = 0;
  const auto batches = make_batches(stream, batch_size);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto negs = sample_negatives(stream, batches[b], stream.num_nodes, num_negatives, rng);
    StepOptions opt;
    opt.batch_index = b;
    const auto out = process_batch(p, s, stream, batches[b], negs, opt);
    sum += out.tlp_loss * static_cast<double>(batches[b].size());
    n += batches[b].size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Chronological multi-epoch training. With a non-empty validation stream the
// parameters of the epoch with the lowest validation loss are kept and
// training stops after `patience` epochs without improvement.
inline auto train_model(const RunConfig& cfg, const EventStream& train,
                        const EventStream* val = nullptr) -> TrainResult {
  cfg.validate();
  Rng init_rng(cfg.seed);
  Rng sample_rng(cfg.seed ^ kSamplingSalt);
  TrainResult result;
  TrainedModel model = init_model(cfg, train, init_rng);
  const auto batches = make_batches(train, cfg.batch_size);

  std::vector<BatchFeatures> features;
  if (model.structmap) {
    features = raw_batch_features(train, batches, model.window_fraction, model.train_span,
                                  model.positional_dim);
    model.standardizer =
        fit_batch_standardizer(features, kTopologicalFeatures + model.positional_dim);
    standardize_in_place(features, model.standardizer);
  }

  nn::AdamConfig adam;
  adam.lr = cfg.lr;
  nn::ParamList trainable = model.tgn.params();
  if (model.structmap)
    for (auto* t : model.structmap->params()) trainable.push_back(t);

  const bool use_val = val != nullptr && !val->empty();
  double best = std::numeric_limits<double>::infinity();
  std::optional<TrainedModel> best_model;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    model.state = TgnState(train.num_nodes, model.tgn.config);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.stats = train_epoch(model.tgn, model.structmap ? &*model.structmap : nullptr, model.state,
                            train, batches, model.structmap ? &features : nullptr,
                            model.optimizer, adam, trainable, cfg.train_negatives, sample_rng);
    if (use_val) {
      rec.val_loss =
          evaluate_stream(model.tgn, *val, cfg.batch_size, cfg.train_negatives, cfg.seed);
      if (rec.val_loss < best) {
        best = rec.val_loss;
        since_best = 0;
        result.best_epoch = epoch;
        best_model = model;
      } else if (++since_best >= cfg.patience) {
        result.epochs.push_back(rec);
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.epochs.push_back(rec);
  }
  if (best_model) model = std::move(*best_model);
  model.rng_state = rng_state_string(sample_rng);
  result.model = std::move(model);
  return result;
}

// --------------------------------------------------------------- transfer

enum class ScenarioKind { no_warm_start, warm_start, structural_mapping };

inline auto scenario_name(ScenarioKind k) -> std::string {
  switch (k) {
    case ScenarioKind::no_warm_start: return "no_warm_start";
    case ScenarioKind::warm_start: return "warm_start";
    case ScenarioKind::structural_mapping: return "structural_mapping";
  }
  return "unknown";
}

inline auto parse_scenario(const std::string& s) -> ScenarioKind {
  if (s == "no_warm_start") return ScenarioKind::no_warm_start;
  if (s == "warm_start") return ScenarioKind::warm_start;
  if (s == "structural_mapping") return ScenarioKind::structural_mapping;
  throw ConfigError("harness", "unknown scenario '" + s + "'");
}

struct TransferScenario {
  ScenarioKind kind{ScenarioKind::no_warm_start};
  double finetune_fraction{0.2};
  bool finetune_memory_only{false};
  double alpha{1.0};
  double window_fraction{0.01};

  static auto from_config(const RunConfig& cfg, ScenarioKind kind) -> TransferScenario {
    return {kind, cfg.finetune_fraction, cfg.finetune_scope == "memory", cfg.alpha,
            cfg.window_fraction};
  }
};

struct BatchRecord {
  std::size_t index{};
  std::string region;  // "finetune" or "eval"
  std::size_t begin{};
  std::size_t end{};
  double start_time{};
  double end_time{};
  double total_loss{};
  double tlp_loss{};
  double structmap_loss{};
  bool has_structmap{false};
  std::size_t cold_starts{};
};

struct MetricsRecord {
  std::string scenario;
  std::uint64_t seed{};
  std::string config_hash;
  double alpha{};
  std::vector<BatchRecord> batches;
  // Evaluation region: events [eval_begin, eval_end) of the test stream.
  std::size_t eval_begin{};
  std::size_t eval_end{};
  double eval_start_time{};
  double eval_end_time{};
  std::size_t finetune_events{0};
  std::optional<double> finetune_end_time;  // T_finetune
  double eval_loss{};        // event-weighted TLP loss over the evaluation region
  double eval_total_loss{};  // same for the total loss
  RankingMetrics ranking;
  std::size_t optimizer_steps{0};
  std::size_t cold_starts{0};
  double wall_clock_seconds{};
};

// Shared evaluation negatives for the whole test stream, one list per event.
inline auto transfer_negatives(const EventStream& test, std::size_t k, std::uint64_t seed)
    -> std::vector<std::vector<NodeId>> {
  Rng rng(seed ^ kEvalSalt);
  return sample_negatives(test, EventBatch{0, test.size(), test.start_time(), test.end_time()},
                          test.num_nodes, k, rng);
}

inline auto slice_negatives(const std::vector<std::vector<NodeId>>& all, const EventBatch& b,
                            std::size_t keep) -> std::vector<std::vector<NodeId>> {
  std::vector<std::vector<NodeId>> out;
  out.reserve(b.size());
  for (std::size_t i = b.begin; i < b.end; ++i) {
    const auto& n = all[i];
    out.emplace_back(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(std::min(keep, n.size())));
  }
  return out;
}

// First event index of the evaluation region under warm start: the
// finetune_fraction event-count mark, moved past any timestamp tie so the two
// regions are separated in time.
inline auto finetune_cut(const EventStream& test, double fraction) -> std::size_t {
  auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(test.size())));
  cut = std::min(cut, test.size());
  while (cut > 0 && cut < test.size() &&
         test.events[cut].timestamp == test.events[cut - 1].timestamp)
    ++cut;
  return cut;
}

// Adam moments of the checkpoint restricted to `subset` (tensors of the
// model's TGN parameters), so fine-tuning resumes rather than restarts the
// optimizer. A checkpoint without optimizer history yields a fresh state.
inline auto resume_optimizer(TrainedModel& m, const nn::ParamList& subset) -> nn::AdamState {
  nn::AdamState out;
  if (m.optimizer.m.empty()) return out;
  const auto all = m.tgn.params();
  for (auto* t : subset) {
    const auto it = std::find(all.begin(), all.end(), t);
    const auto i = static_cast<std::size_t>(it - all.begin());
    if (it == all.end() || i >= m.optimizer.m.size() || m.optimizer.m[i].size() != t->size())
      throw ValidationError("harness", "checkpoint optimizer state does not match the model");
    out.m.push_back(m.optimizer.m[i]);
    out.v.push_back(m.optimizer.v[i]);
  }
  out.steps = m.optimizer.steps;
  return out;
}

// Standardized window features of `nodes` (one row each).
inline auto standardized_features(const TrainedModel& m, const WindowGraph& w,
                                  std::vector<NodeId> nodes) -> BatchFeatures {
  BatchFeatures f;
  f.standardized = features_of(w, nodes, m.positional_dim);
  f.nodes = std::move(nodes);
  for (std::size_t i = 0; i < f.standardized.rows(); ++i) {
    const auto z = m.standardizer.apply(std::span<const double>(f.standardized.row(i)));
    std::copy(z.values.begin(), z.values.end(), f.standardized.row(i).begin());
  }
  return f;
}

// Cold-starts every endpoint of an already scored batch that has no memory
// yet, just before the batch is applied. Features come from the window that
// ends with the batch's last event; last_update is the node's first event
// time in the batch. Returns the number of nodes initialized.
inline auto cold_start_batch(const TrainedModel& m, TgnState& state, const EventStream& stream,
                             const EventBatch& b, double window_fraction) -> std::size_t {
  std::vector<NodeId> fresh;
  std::vector<double> first_seen;
  std::vector<bool> listed(stream.num_nodes, false);
  for (const auto& e : b.view(stream))
    for (NodeId v : {e.src, e.dst})
      if (!listed[v] && !state.store.seen(v)) {
        listed[v] = true;
        fresh.push_back(v);
        first_seen.push_back(e.timestamp);
      }
  if (fresh.empty()) return 0;
  const auto f = standardized_features(
      m, window_through(stream, b.end, window_fraction, m.train_span), fresh);
  std::size_t n = 0;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    StructuralFeatureVector z;
    z.values.assign(f.standardized.row(i).begin(), f.standardized.row(i).end());
    z.standardized = true;
    if (cold_start(state.store, fresh[i], z, first_seen[i], *m.structmap)) ++n;
  }
  return n;
}

inline auto run_transfer(const TrainedModel& checkpoint, const EventStream& test,
                         const TransferScenario& scenario, const RunConfig& cfg)
    -> MetricsRecord {
  const auto t0 = std::chrono::steady_clock::now();
  if (scenario.kind == ScenarioKind::structural_mapping && !checkpoint.structmap)
    throw ConfigError("harness", "structural_mapping requires a checkpoint with a structural map");
  if (scenario.finetune_fraction < 0.0 || scenario.finetune_fraction >= 1.0)
    throw ConfigError("harness", "finetune_fraction must be in [0, 1)");
  if (test.empty()) throw ValidationError("harness", "test stream is empty");
  if (test.edge_dim != checkpoint.tgn.config.edge_dim)
    throw ValidationError("harness", "test stream edge dimension differs from the checkpoint");

  TrainedModel m = checkpoint;
  TgnState state(test.num_nodes, m.tgn.config);
  const auto negatives = transfer_negatives(test, cfg.eval_negatives, cfg.seed);

  MetricsRecord rec;
  rec.scenario = scenario_name(scenario.kind);
  rec.seed = cfg.seed;
  rec.config_hash = cfg.hash();
  rec.alpha = scenario.alpha;

  std::size_t cut = 0;
  if (scenario.kind == ScenarioKind::warm_start) {
    cut = finetune_cut(test, scenario.finetune_fraction);
    rec.finetune_events = cut;
    if (cut < test.size()) rec.finetune_end_time = test.events[cut].timestamp;
    else rec.finetune_end_time = test.end_time();
  }
  rec.eval_begin = cut;
  rec.eval_end = test.size();
  if (cut >= test.size())
    throw ValidationError("harness", "fine-tuning region leaves no events to evaluate");
  rec.eval_start_time = test.events[cut].timestamp;
  rec.eval_end_time = test.end_time();

  std::size_t index = 0;
  // Fine-tuning region (warm start only): one chronological pass, all batches trained.
  if (cut > 0) {
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    const nn::ParamList trainable =
        scenario.finetune_memory_only ? m.tgn.memory_params() : m.tgn.params();
    nn::AdamState opt_state = resume_optimizer(m, trainable);
    const std::size_t steps_before = opt_state.steps;
    for (const auto& b : make_batches(test, cfg.batch_size, 0, cut)) {
      StepOptions opt;
      opt.train = true;
      opt.optimizer = &opt_state;
      opt.adam = adam;
      opt.trainable = trainable;
      opt.batch_index = index;
      const auto out = process_batch(m.tgn, state, test, b,
                                     slice_negatives(negatives, b, cfg.train_negatives), opt);
      rec.batches.push_back({index++, "finetune", b.begin, b.end, b.start_time, b.end_time,
                             out.total_loss, out.tlp_loss, 0.0, false, 0});
    }
    rec.optimizer_steps = opt_state.steps - steps_before;
  }

  const bool mapping = scenario.kind == ScenarioKind::structural_mapping;
  if (mapping) m.structmap->alpha = scenario.alpha;
  RankingAccumulator ranking(cfg.hits_k);
  double tlp_sum = 0.0;
  double total_sum = 0.0;
  for (const auto& b : make_batches(test, cfg.batch_size, cut, test.size())) {
    const auto negs = slice_negatives(negatives, b, cfg.eval_negatives);
    BatchFeatures feats;
    if (mapping)
      feats = standardized_features(
          m, aggregate_window(test, b.start_time, scenario.window_fraction, m.train_span),
          batch_endpoints(test, b));
    StepOptions opt;
    opt.structmap = mapping ? &*m.structmap : nullptr;
    opt.features = mapping ? &feats : nullptr;
    opt.apply_updates = !mapping;
    opt.batch_index = index;
    const auto out = process_batch(m.tgn, state, test, b, negs, opt);
    std::size_t cold = 0;
    if (mapping) {
      cold = cold_start_batch(m, state, test, b, scenario.window_fraction);
      try {
        apply_batch(state, test, b, m.tgn);
      } catch (const DivergenceError& e) {
        throw DivergenceError("harness", e.what(), index);
      }
    }
    ranking.add(out.pos_logits, out.neg_logits);
    tlp_sum += out.tlp_loss * static_cast<double>(b.size());
    total_sum += out.total_loss * static_cast<double>(b.size());
    rec.cold_starts += cold;
    rec.batches.push_back({index++, "eval", b.begin, b.end, b.start_time, b.end_time,
                           out.total_loss, out.tlp_loss, out.structmap_loss, out.has_structmap,
                           cold});
  }
  const auto n_eval = static_cast<double>(rec.eval_end - rec.eval_begin);
  rec.eval_loss = tlp_sum / n_eval;
  rec.eval_total_loss = total_sum / n_eval;
  rec.ranking = ranking.result();
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

inline auto all_scenarios(const RunConfig& cfg) -> std::vector<ScenarioKind> {
  std::vector<ScenarioKind> out{ScenarioKind::no_warm_start, ScenarioKind::warm_start};
  if (cfg.use_structmap) out.push_back(ScenarioKind::structural_mapping);
  return out;
}

// ------------------------------------------------------------- seed sweep

struct SeedRun {
  std::uint64_t seed{};
  std::vector<MetricsRecord> records;  // one per scenario, in all_scenarios order
  std::string error;                   // non-empty when the run diverged
  std::size_t epochs_run{};
};

struct Dispersion {
  std::size_t count{};
  double mean{};
  double stddev{};  // sample standard deviation (n - 1)
  double min{};
  double max{};
};

inline auto dispersion(const std::vector<double>& v) -> Dispersion {
  Dispersion d;
  d.count = v.size();
  if (v.empty()) return d;
  d.min = *std::min_element(v.begin(), v.end());
  d.max = *std::max_element(v.begin(), v.end());
  for (double x : v) d.mean += x;
  d.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - d.mean) * (x - d.mean);
    d.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return d;
}

struct ScenarioSummary {
  std::string scenario;
  Dispersion eval_loss;
  Dispersion mrr;
};

struct SweepResult {
  std::vector<SeedRun> runs;
  std::vector<ScenarioSummary> summary;
};

// Trains on `train` and runs every scenario on `test` for one seed.
inline auto run_pipeline(RunConfig cfg, std::uint64_t seed, const EventStream& train,
                         const EventStream* val, const EventStream& test) -> SeedRun {
  cfg.seed = seed;
  SeedRun run;
  run.seed = seed;
  const auto trained = train_model(cfg, train, val);
  run.epochs_run = trained.epochs.size();
  for (auto kind : all_scenarios(cfg))
    run.records.push_back(
        run_transfer(trained.model, test, TransferScenario::from_config(cfg, kind), cfg));
  return run;
}

inline auto seed_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                       const EventStream& train, const EventStream* val,
                       const EventStream& test) -> SweepResult {
  if (seeds.size() < 2) throw ValidationError("harness", "seed sweep needs at least 2 seeds");
  SweepResult out;
  for (auto s : seeds) {
    try {
      out.runs.push_back(run_pipeline(cfg, s, train, val, test));
    } catch (const DivergenceError& e) {
      SeedRun failed;
      failed.seed = s;
      failed.error = e.what();
      out.runs.push_back(std::move(failed));
    }
  }
  const auto kinds = all_scenarios(cfg);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::vector<double> loss;
    std::vector<double> mrr;
    for (const auto& r : out.runs) {
      if (!r.error.empty()) continue;
      loss.push_back(r.records[k].eval_loss);
      mrr.push_back(r.records[k].ranking.mrr);
    }
    out.summary.push_back({scenario_name(kinds[k]), dispersion(loss), dispersion(mrr)});
  }
  return out;
}

// -------------------------------------------------------------- analysis

struct AnalysisResult {
  DistanceCorrelation correlation;
  std::size_t nodes{};
};

// Correlates pairwise memory distances with pairwise distances of the
// structural features of the same nodes. Features come from the window
// covering the last `window_fraction` of the stream's span and are z-scored
// over the analyzed nodes.
inline auto analyze_memory(const TrainedModel& model, const EventStream& stream,
                           double window_fraction, std::size_t sample_pairs, Rng& rng)
    -> AnalysisResult {
  if (model.state.store.num_nodes() != stream.num_nodes)
    throw ValidationError("harness", "checkpoint memory and stream cover different node sets");
  const double end = std::nextafter(stream.end_time(), std::numeric_limits<double>::infinity());
  const auto window =
      window_from_interval(stream, end - window_fraction * (end - stream.start_time()), end);
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < stream.num_nodes; ++v)
    if (model.state.store.seen(v)) nodes.push_back(v);
  const Matrix raw = features_of(window, nodes, model.positional_dim);
  const auto z = fit_standardizer(raw);
  Matrix feats(nodes.size(), raw.cols());
  Matrix mem(nodes.size(), model.state.store.dim());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto f = z.apply(std::span<const double>(raw.row(i)));
    std::copy(f.values.begin(), f.values.end(), feats.row(i).begin());
    const auto r = model.state.store.memory.row(nodes[i]);
    std::copy(r.begin(), r.end(), mem.row(i).begin());
  }
  return {correlate_distances(mem, feats, sample_pairs, rng), nodes.size()};
}

}  // namespace tgnt
