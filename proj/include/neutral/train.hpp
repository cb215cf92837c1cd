#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "neutral/data.hpp"
#include "neutral/losses.hpp"
#include "neutral/metrics.hpp"
#include "neutral/optim.hpp"
#include "neutral/registry.hpp"

namespace neutral {

enum class Objective { dcl, tp_fixed };

inline std::string_view to_string(Objective o) { return o == Objective::dcl ? "dcl" : "tp_fixed"; }

inline Objective parse_objective(std::string_view s) {
  if (s == "dcl") return Objective::dcl;
  if (s == "tp_fixed") return Objective::tp_fixed;
  throw ConfigError("unknown objective '" + std::string(s) + "' (expected dcl or tp_fixed)");
}

// Hyperparameters of one training session. K = 0 and an unset mode mean
// "dataset default": 12 transformations for time series, 11 for tabular;
// multiplicative masks on KDD/KDDRev, residual elsewhere. select_mode
// trains every parametrization and keeps the best on validation AUC.
struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  double temperature = 0.1;
  std::size_t K = 0;
  std::optional<Parametrization> mode;
  bool select_mode = false;
  std::uint64_t seed = 0;
  std::size_t patience = 20;
  Objective objective = Objective::dcl;
  bool standardize = true;

  void validate(bool time_series) const {
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (patience == 0) throw ConfigError("patience must be positive");
    if (K == 1) throw ConfigError("K must be >= 2: with a single transformation the contrastive denominator is empty");
    if (objective == Objective::tp_fixed) {
      if (!time_series) throw ConfigError("objective tp_fixed needs time-series data");
      if (K != 0 && K != FixedTransforms::kCount)
        throw ConfigError("objective tp_fixed uses exactly " + std::to_string(FixedTransforms::kCount) +
                          " fixed transformations");
    }
  }

  // Copy with dataset defaults filled in.
  TrainConfig resolved(std::string_view dataset, bool time_series) const {
    TrainConfig c = *this;
    if (c.K == 0) c.K = c.objective == Objective::tp_fixed ? FixedTransforms::kCount : (time_series ? 12 : 11);
    if (!c.mode) {
      const auto key = canonical_dataset_name(dataset);
      c.mode = (key == "kdd" || key == "kddrev") ? Parametrization::multiplicative : Parametrization::residual;
    }
    return c;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"temperature", c.temperature},
       {"K", c.K},
       {"mode", c.select_mode ? std::string("auto") : c.mode ? std::string(to_string(*c.mode)) : std::string("default")},
       {"seed", c.seed},
       {"patience", c.patience},
       {"objective", std::string(to_string(c.objective))},
       {"standardize", c.standardize}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::vector<std::string> known{"epochs", "batch_size", "learning_rate", "temperature", "K",    "mode",
                                              "seed",   "patience",   "objective",     "standardize", "tau", "lr"};
  for (auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");
  try {
    auto positive_int = [&](const char* key, std::size_t& out) {
      if (!j.contains(key)) return;
      const auto v = j[key].get<long long>();
      if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
      out = static_cast<std::size_t>(v);
    };
    positive_int("epochs", c.epochs);
    positive_int("batch_size", c.batch_size);
    positive_int("K", c.K);
    positive_int("patience", c.patience);
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("lr")) c.learning_rate = j["lr"].get<double>();
    if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
    if (j.contains("tau")) c.temperature = j["tau"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("objective")) c.objective = parse_objective(j["objective"].get<std::string>());
    if (j.contains("standardize")) c.standardize = j["standardize"].get<bool>();
    if (j.contains("mode")) {
      const auto m = j["mode"].get<std::string>();
      c.select_mode = m == "auto";
      if (m == "auto" || m == "default")
        c.mode.reset();
      else
        c.mode = parse_parametrization(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

// A trained detector: encoder plus either a learned transformation stack
// (DCL) or the fixed views (transformation prediction baseline).
struct Model {
  std::string dataset;
  Objective objective = Objective::dcl;
  EncoderNet encoder;
  std::optional<TransformStack> stack;
  double temperature = 0.1;
  std::size_t K = 0;
  Standardization standardization;
  std::uint64_t seed = 0;

  Shape input_shape() const { return encoder.input_shape(); }

  // Every trainable tensor in a stable order with its path.
  std::vector<std::pair<std::string, Tensor*>> named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < encoder.parameters().size(); ++i)
      out.emplace_back("encoder." + encoder.parameter_names()[i], &encoder.parameters()[i]);
    if (stack)
      for (std::size_t k = 0; k < stack->size(); ++k) {
        auto& m = stack->mask(k);
        for (std::size_t i = 0; i < m.parameters().size(); ++i)
          out.emplace_back("mask" + std::to_string(k) + "." + m.parameter_names()[i], &m.parameters()[i]);
      }
    return out;
  }

  std::vector<Tensor> parameter_values() {
    std::vector<Tensor> v;
    for (auto& [n, p] : named_parameters()) v.push_back(*p);
    return v;
  }

  void set_parameters(const std::vector<Tensor>& values) {
    auto named = named_parameters();
    if (named.size() != values.size()) throw DimensionError("parameter count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].shape() != named[i].second->shape())
        throw DimensionError("parameter " + named[i].first + " has shape " + to_string(named[i].second->shape()) +
                             ", got " + to_string(values[i].shape()));
      *named[i].second = values[i].detach(true);
    }
  }

  // Loss on an already standardized batch.
  Tensor loss(const Tensor& batch) const {
    if (objective == Objective::tp_fixed) return tp_loss(encoder, FixedTransforms{}, batch, K);
    return dcl_loss(encoder, *stack, batch, DclConfig{temperature, K});
  }

  std::vector<ScoreBreakdown> score_batch(const Tensor& batch) const {
    if (objective == Objective::tp_fixed) return tp_scores(encoder, FixedTransforms{}, batch, K);
    return anomaly_scores(encoder, *stack, batch, DclConfig{temperature, K});
  }
};

// Mask hidden width for tabular data: the input width, except on the 2-D
// toy set where two ReLUs die too often at random init.
inline std::size_t default_mask_hidden(std::string_view dataset, std::size_t features) {
  return canonical_dataset_name(dataset) == "synthetic" ? 16 : features;
}

// Fresh model with seeded initialization.
inline Model make_model(std::string dataset, const Shape& sample_shape, const TrainConfig& cfg) {
  const bool ts = sample_shape.size() == 2;
  const auto c = cfg.resolved(dataset, ts);
  EncoderSpec spec = default_encoder_spec(dataset, sample_shape);
  if (c.objective == Objective::tp_fixed) spec.embedding_dim = c.K;  // classifier head: one logit per view
  Model m{dataset, c.objective, EncoderNet(spec), std::nullopt, c.temperature, c.K, {}, c.seed};
  init_params(m.encoder, c.seed * 2 + 1);
  if (c.objective == Objective::dcl) {
    m.stack = ts ? TransformStack::conv(c.K, sample_shape[0], *c.mode)
                 : TransformStack::mlp(c.K, sample_shape[0], *c.mode, default_mask_hidden(dataset, sample_shape[0]));
    init_params(*m.stack, c.seed * 2 + 2);
  }
  return m;
}

struct ScoreSet {
  std::vector<double> totals;
  std::vector<ScoreBreakdown> breakdowns;
};

inline constexpr std::size_t kScoreChunk = 64;

namespace detail {

inline ScoreSet score_prepared(const Model& model, const SampleSet& samples) {
  ScoreSet out;
  out.totals.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kScoreChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(samples.size(), start + kScoreChunk); ++i) idx.push_back(i);
    for (auto& b : model.score_batch(samples.batch(idx))) {
      out.totals.push_back(b.total);
      out.breakdowns.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace detail

// Scores raw samples: the model's standardization is applied first. Each
// sample's score depends only on that sample.
inline ScoreSet score_all(const Model& model, const SampleSet& samples) {
  if (samples.empty()) return {};
  if (samples.sample_shape != model.input_shape())
    throw DimensionError("model expects samples of shape " + to_string(model.input_shape()) + ", got " +
                         to_string(samples.sample_shape));
  SampleSet prepared = samples;
  model.standardization.apply(prepared);
  return detail::score_prepared(model, prepared);
}

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;
  std::vector<double> validation_auc;  // empty when validation lacks a class
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::string selected_by;  // validation_auc or final_epoch
  Parametrization mode = Parametrization::residual;
};

namespace detail {

inline bool has_both_classes(const SampleSet& s) { return s.anomalies() > 0 && s.anomalies() < s.size(); }

inline TrainResult train_one(const TrainConfig& cfg, const DatasetSplit& raw, const std::string& dataset) {
  if (raw.train.empty()) throw ConfigError("training partition is empty");
  if (raw.train.anomalies() != 0) throw ContractError("training partition contains anomalies");
  DatasetSplit split = raw;
  Standardization st;
  if (cfg.standardize) {
    st = fit_standardization(split.train);
    st.apply(split.train);
    st.apply(split.validation);
  }
  TrainResult res{make_model(dataset, split.train.sample_shape, cfg)};
  res.model.standardization = st;
  res.mode = *cfg.mode;

  auto params = res.model.parameter_values();
  auto adam = AdamState::for_params(params, AdamOptions{cfg.learning_rate});
  const bool use_val = has_both_classes(split.validation);
  res.selected_by = use_val ? "validation_auc" : "final_epoch";
  double best = -1.0;
  std::vector<Tensor> best_params = params;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::min(cfg.batch_size, order.size());
  CounterRng shuffle_rng(cfg.seed, 0x5eed);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Tensor loss;
      try {
        loss = res.model.loss(split.train.batch(idx));
      } catch (const ContractError& e) {
        // non-finite activations surface as contract violations in the ops
        throw DivergenceError(std::string("forward pass failed at epoch ") + std::to_string(epoch + 1) + ": " +
                              e.what() + " (learning rate " + std::to_string(cfg.learning_rate) + ")");
      }
      const double value = loss.item();
      if (!std::isfinite(value))
        throw DivergenceError("loss became " + std::to_string(value) + " at epoch " + std::to_string(epoch + 1) +
                              " (learning rate " + std::to_string(cfg.learning_rate) + ")");
      backward(loss);
      params = res.model.parameter_values();
      std::vector<Tensor> grads;
      for (const auto& p : params) grads.push_back(p.has_grad() ? p.grad_tensor() : Tensor());
      res.model.set_parameters(adam_step(params, grads, adam));
      loss_sum += value * static_cast<double>(end - start);
    }
    res.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    res.epochs_run = epoch + 1;

    if (use_val) {
      const auto s = detail::score_prepared(res.model, split.validation);
      for (double v : s.totals)
        if (!std::isfinite(v)) throw DivergenceError("non-finite validation score at epoch " + std::to_string(epoch + 1));
      const double a = auc(s.totals, split.validation.labels);
      res.validation_auc.push_back(a);
      if (a > best) {
        best = a;
        best_params = res.model.parameter_values();
        res.best_epoch = epoch + 1;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (use_val)
    res.model.set_parameters(best_params);
  else
    res.best_epoch = res.epochs_run;
  res.model.encoder.freeze();
  if (res.model.stack) res.model.stack->freeze();
  return res;
}

}  // namespace detail

// Joint optimization of masks and encoder with Adam. The parameters with
// the best validation AUC are kept (validation labels only; test labels are
// never read). With select_mode every parametrization is trained and the
// best on validation wins.
inline TrainResult train(const TrainConfig& config, const DatasetSplit& split, const std::string& dataset) {
  const bool ts = split.train.sample_shape.size() == 2;
  config.validate(ts);
  const auto cfg = config.resolved(dataset, ts);
  if (!cfg.select_mode || cfg.objective == Objective::tp_fixed) return detail::train_one(cfg, split, dataset);
  std::optional<TrainResult> best;
  double best_auc = -1.0;
  for (auto m : {Parametrization::feed_forward, Parametrization::residual, Parametrization::multiplicative}) {
    auto c = cfg;
    c.mode = m;
    auto r = detail::train_one(c, split, dataset);
    const double a = r.validation_auc.empty() ? -1.0 : *std::max_element(r.validation_auc.begin(), r.validation_auc.end());
    if (!best || a > best_auc) {
      best_auc = a;
      best = std::move(r);
    }
  }
  return std::move(*best);
}

// ---------------------------------------------------------------- protocols

enum class Protocol { one_vs_rest, n_vs_rest, tabular };

inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::one_vs_rest: return "one_vs_rest";
    case Protocol::n_vs_rest: return "n_vs_rest";
    case Protocol::tabular: return "tabular";
  }
  return "?";
}

struct ProtocolSpec {
  Protocol kind = Protocol::one_vs_rest;
  std::size_t n = 1;                          // n_vs_rest window size
  std::vector<std::size_t> classes;           // restrict to these normal classes / window starts; empty = all
};

// Outcome of one (class set, seed) session.
struct SubRun {
  std::vector<std::size_t> normal_classes;
  std::uint64_t seed = 0;
  double auc = 0.0;
  std::optional<double> f1;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::string mode;
  std::vector<double> test_scores;
  std::vector<int> test_labels;
  std::vector<double> epoch_loss;
  std::vector<double> validation_auc;
};

struct TaskSummary {
  std::vector<std::size_t> normal_classes;
  std::vector<double> per_seed;  // primary metric
  MeanStd metric;
};

// Aggregated protocol run. Per-seed macro-averages over tasks give the
// headline mean and (population) std over seeds.
struct RunReport {
  std::string dataset;
  std::string protocol;
  std::string metric;  // auc or f1
  std::vector<std::uint64_t> seeds;
  TrainConfig config;
  std::vector<SubRun> runs;
  std::vector<TaskSummary> tasks;
  std::vector<double> macro_per_seed;
  MeanStd overall;
};

inline std::vector<std::vector<std::size_t>> protocol_tasks(const Dataset& data, const ProtocolSpec& spec) {
  std::vector<std::vector<std::size_t>> tasks;
  if (spec.kind == Protocol::tabular) {
    if (is_time_series(data)) throw ConfigError("tabular protocol needs a tabular dataset");
    return {{0}};
  }
  if (!is_time_series(data)) throw ConfigError(std::string(to_string(spec.kind)) + " needs a time-series dataset");
  const auto& ts = std::get<TimeSeriesDataset>(data);
  const std::size_t N = ts.num_classes();
  const std::size_t n = spec.kind == Protocol::one_vs_rest ? 1 : spec.n;
  if (spec.kind == Protocol::n_vs_rest && (n < 1 || n >= N))
    throw ConfigError("n-vs-rest needs 1 <= n < N = " + std::to_string(N));
  std::vector<std::size_t> starts = spec.classes;
  if (starts.empty())
    for (std::size_t c = 0; c < N; ++c) starts.push_back(c);
  for (auto s : starts) {
    if (s >= N) throw ConfigError("class " + std::to_string(s) + " out of range (N = " + std::to_string(N) + ")");
    std::vector<std::size_t> t;
    for (std::size_t j = 0; j < n; ++j) t.push_back((s + j) % N);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

inline DatasetSplit make_split(const Dataset& data, const std::vector<std::size_t>& normal, std::uint64_t seed) {
  if (!is_time_series(data)) return split_tabular(std::get<TabularDataset>(data), seed);
  const auto& ts = std::get<TimeSeriesDataset>(data);
  return split_n_vs_rest(ts, normal.front(), normal.size(), seed);
}

struct Session {
  SubRun run;
  Model model;
};

// Split, train, and score the test partition for one (class set, seed).
inline Session run_session_with_model(const Dataset& data, const std::string& name,
                                      const std::vector<std::size_t>& normal, const TrainConfig& config,
                                      std::uint64_t seed) {
  auto split = make_split(data, normal, seed);
  TrainConfig cfg = config;
  cfg.seed = seed;
  auto result = train(cfg, split, name);
  auto scores = score_all(result.model, split.test);
  SubRun r;
  r.normal_classes = normal;
  r.seed = seed;
  r.auc = auc(scores.totals, split.test.labels);
  if (!is_time_series(data)) r.f1 = f1_at_contamination(scores.totals, split.test.labels);
  r.best_epoch = result.best_epoch;
  r.epochs_run = result.epochs_run;
  r.mode = std::string(to_string(result.mode));
  r.test_scores = std::move(scores.totals);
  r.test_labels = split.test.labels;
  r.epoch_loss = std::move(result.epoch_loss);
  r.validation_auc = std::move(result.validation_auc);
  return {std::move(r), std::move(result.model)};
}

inline SubRun run_session(const Dataset& data, const std::string& name, const std::vector<std::size_t>& normal,
                          const TrainConfig& config, std::uint64_t seed) {
  return run_session_with_model(data, name, normal, config, seed).run;
}

// Runs jobs on up to `threads` workers; results land at their job index.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Fills tasks, macro_per_seed and overall from runs laid out task-major.
inline void aggregate(RunReport& rep, const std::vector<std::vector<std::size_t>>& tasks) {
  const auto& seeds = rep.seeds;
  rep.tasks.clear();
  rep.macro_per_seed.assign(seeds.size(), 0.0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    TaskSummary ts{tasks[t]};
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& r = rep.runs[t * seeds.size() + s];
      const double m = rep.metric == "auc" ? r.auc : *r.f1;
      ts.per_seed.push_back(m);
      rep.macro_per_seed[s] += m / static_cast<double>(tasks.size());
    }
    ts.metric = mean_std(ts.per_seed);
    rep.tasks.push_back(std::move(ts));
  }
  rep.overall = mean_std(rep.macro_per_seed);
}

// Every (class set, seed) session of a protocol, aggregated as in the
// result tables: mean +- std over seeds of the macro-average over tasks.
inline RunReport run_protocol(const Dataset& data, const std::string& name, const ProtocolSpec& spec,
                              const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                              std::size_t threads = default_threads()) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  const auto tasks = protocol_tasks(data, spec);
  RunReport rep;
  rep.dataset = name;
  rep.protocol = std::string(to_string(spec.kind));
  rep.metric = is_time_series(data) ? "auc" : "f1";
  rep.seeds = seeds;
  rep.config = config;
  rep.runs.resize(tasks.size() * seeds.size());
  parallel_for(rep.runs.size(), threads, [&](std::size_t i) {
    rep.runs[i] = run_session(data, name, tasks[i / seeds.size()], config, seeds[i % seeds.size()]);
  });
  aggregate(rep, tasks);
  return rep;
}

inline nlohmann::json to_json(const RunReport& r, bool include_scores = true) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["protocol"] = r.protocol;
  j["metric"] = r.metric;
  j["seeds"] = r.seeds;
  j["config"] = r.config;
  j["mean"] = r.overall.mean;
  j["std"] = r.overall.stddev;
  j["macro_per_seed"] = r.macro_per_seed;
  j["validation_note"] =
      "validation is a 10% slice of the test pool used for model selection; test scores are not independent of it";
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : r.tasks)
    j["tasks"].push_back({{"normal_classes", t.normal_classes}, {"per_seed", t.per_seed}, {"mean", t.metric.mean},
                          {"std", t.metric.stddev}});
  j["runs"] = nlohmann::json::array();
  for (const auto& s : r.runs) {
    nlohmann::json e{{"normal_classes", s.normal_classes}, {"seed", s.seed},          {"auc", s.auc},
                     {"best_epoch", s.best_epoch},         {"epochs_run", s.epochs_run}, {"mode", s.mode},
                     {"epoch_loss", s.epoch_loss},         {"validation_auc", s.validation_auc}};
    if (s.f1) e["f1"] = *s.f1;
    if (include_scores) {
      e["test_scores"] = s.test_scores;
      e["test_labels"] = s.test_labels;
    }
    j["runs"].push_back(std::move(e));
  }
  return j;
}

// ---------------------------------------------------------------- K sweep

struct SweepCell {
  std::size_t K = 0;
  Parametrization mode = Parametrization::residual;
  std::vector<double> per_seed;
  MeanStd metric;
  double variance = 0.0;  // population variance over seeds
};

struct SweepTable {
  std::string dataset;
  std::string metric;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;

  const SweepCell* find(std::size_t K, Parametrization m) const {
    for (const auto& c : cells)
      if (c.K == K && c.mode == m) return &c;
    return nullptr;
  }
};

// Metric for every (K, parametrization, seed) on one class set.
inline SweepTable k_sweep(const Dataset& data, const std::string& name, const std::vector<std::size_t>& normal,
                          const std::vector<std::size_t>& Ks, const std::vector<Parametrization>& modes,
                          const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                          std::size_t threads = default_threads()) {
  for (auto K : Ks)
    if (K < 2) throw ConfigError("sweep K values must be >= 2");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  SweepTable table{name, is_time_series(data) ? "auc" : "f1", seeds, {}};
  for (auto K : Ks)
    for (auto m : modes) table.cells.push_back({K, m, std::vector<double>(seeds.size(), 0.0)});
  parallel_for(table.cells.size() * seeds.size(), threads, [&](std::size_t i) {
    auto& cell = table.cells[i / seeds.size()];
    TrainConfig c = config;
    c.K = cell.K;
    c.mode = cell.mode;
    c.select_mode = false;
    const auto r = run_session(data, name, normal, c, seeds[i % seeds.size()]);
    cell.per_seed[i % seeds.size()] = table.metric == "auc" ? r.auc : *r.f1;
  });
  for (auto& c : table.cells) {
    c.metric = mean_std(c.per_seed);
    c.variance = c.metric.stddev * c.metric.stddev;
  }
  return table;
}

inline std::string sweep_csv(const SweepTable& t) {
  std::ostringstream os;
  os << std::setprecision(17) << "K,mode,mean,std";
  for (auto s : t.seeds) os << ",seed_" << s;
  os << '\n';
  for (const auto& c : t.cells) {
    os << c.K << ',' << to_string(c.mode) << ',' << c.metric.mean << ',' << c.metric.stddev;
    for (double v : c.per_seed) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

}  // namespace neutral
