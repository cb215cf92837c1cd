#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "neutral/checkpoint.hpp"
#include "neutral/plot.hpp"
#include "neutral/registry.hpp"
#include "neutral/synthetic.hpp"
#include "neutral/theory.hpp"
#include "neutral/train.hpp"

namespace neutral::cli {

namespace fs = std::filesystem;

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kTheoryFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kDivergence = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = "neutral_out";
  std::string registry;
  std::size_t threads = 0;
};

// Hyperparameter flags shared by train, reproduce and sweep.
struct TrainFlags {
  std::optional<std::size_t> epochs, batch_size, K, patience;
  std::optional<double> learning_rate, temperature;
  std::optional<std::string> mode, objective;
  std::optional<bool> standardize;

  void attach(CLI::App* app) {
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch-size", batch_size, "minibatch size");
    app->add_option("--K", K, "number of learned transformations (>= 2)");
    app->add_option("--patience", patience, "early-stop patience in epochs");
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--tau", temperature, "contrastive temperature");
    app->add_option("--mode", mode, "feed_forward | residual | multiplicative | auto");
    app->add_option("--objective", objective, "dcl | tp_fixed");
    app->add_option("--standardize", standardize, "z-score inputs with train statistics (true/false)");
  }

  void apply(TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (K) c.K = *K;
    if (patience) c.patience = *patience;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (temperature) c.temperature = *temperature;
    if (objective) c.objective = parse_objective(*objective);
    if (standardize) c.standardize = *standardize;
    if (mode) {
      c.select_mode = *mode == "auto";
      if (c.select_mode)
        c.mode.reset();
      else
        c.mode = parse_parametrization(*mode);
    }
  }
};

// Dataset selection within a time-series set: one class or an n-window.
struct ClassFlags {
  std::size_t normal_class = 0;
  std::size_t n = 1;

  void attach(CLI::App* app) {
    app->add_option("--normal-class", normal_class, "first normal class (time series)");
    app->add_option("--n", n, "number of consecutive normal classes (time series)");
  }
};

namespace detail {

inline bool is_synthetic(std::string_view name) { return canonical_dataset_name(name) == "synthetic"; }

inline Registry open_registry(const Globals& g) {
  return Registry(g.registry.empty() ? Registry::default_path() : fs::path(g.registry));
}

// Registered dataset, NEUTRAL_DATA_DIR discovery, or the built-in 2-D toy set.
inline std::optional<Dataset> find_dataset(const Globals& g, const std::string& name) {
  const auto reg = open_registry(g);
  if (auto e = resolve_dataset(reg, name)) return load_dataset(*e, g.seed);
  if (is_synthetic(name)) return Dataset(make_two_gaussians({}, 0));
  return std::nullopt;
}

inline Dataset require_dataset(const Globals& g, const std::string& name) {
  if (auto d = find_dataset(g, name)) return std::move(*d);
  throw ConfigError("dataset '" + name + "' is not registered; use register-dataset or set NEUTRAL_DATA_DIR");
}

inline TrainConfig base_config(const Globals& g, const std::string& dataset, const TrainFlags& flags) {
  TrainConfig c = is_synthetic(dataset) ? synthetic_benchmark_config() : TrainConfig{};
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw ConfigError("cannot read config file " + g.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + g.config + " is not valid JSON: " + e.what());
    }
    from_json(j, c);
  }
  flags.apply(c);
  c.seed = g.seed;
  return c;
}

inline std::vector<std::size_t> single_task(const Dataset& data, const ClassFlags& cf) {
  if (!is_time_series(data)) return {0};
  const ProtocolSpec spec{cf.n == 1 ? Protocol::one_vs_rest : Protocol::n_vs_rest, cf.n, {cf.normal_class}};
  return protocol_tasks(data, spec).front();
}

inline void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::optional<double> to_number(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Samples to score: a UEA .ts file, or CSV with one flattened sample per
// row (an optional non-numeric header is skipped).
inline SampleSet read_samples(const fs::path& path, const Model& model) {
  const Shape shape = model.input_shape();
  SampleSet s{shape};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read input file " + path.string());
  if (path.extension() == ".ts") {
    const auto ds = parse_uea_ts(in, model.dataset);
    if (ds.sample_shape() != shape)
      throw DimensionError("input series have shape " + to_string(ds.sample_shape()) + ", model expects " +
                           to_string(shape));
    for (std::size_t i = 0; i < ds.size(); ++i) s.push_back(ds.samples[i], 0, i);
    return s;
  }
  std::string line;
  std::size_t lineno = 0, id = 0, nonblank = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++nonblank;
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      const auto v = to_number(c);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (nonblank == 1) continue;  // header
      throw ParseError("line " + std::to_string(lineno) + ": non-numeric value");
    }
    if (row.size() != s.sample_size())
      throw DimensionError("line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                           " values, model expects " + std::to_string(s.sample_size()) + " (shape " +
                           to_string(shape) + ")");
    s.push_back(row, 0, id++);
  }
  return s;
}

inline SweepTable read_sweep_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep table " + path.string());
  SweepTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("sweep table is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "K" || header[1] != "mode") throw ParseError("not a sweep table: " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != header.size()) throw ParseError("ragged sweep table row");
    SweepCell cell{static_cast<std::size_t>(std::stoul(c[0])), parse_parametrization(c[1])};
    cell.metric = {std::stod(c[2]), std::stod(c[3])};
    for (std::size_t i = 4; i < c.size(); ++i) cell.per_seed.push_back(std::stod(c[i]));
    t.cells.push_back(std::move(cell));
  }
  return t;
}

inline std::size_t threads_of(const Globals& g) { return g.threads ? g.threads : default_threads(); }

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------- commands

inline int cmd_register(const Globals& g, const std::string& name, const std::string& format,
                        const std::vector<std::string>& files, std::ostream& out) {
  RegistryEntry e{name, format, {}};
  for (const auto& f : files) {
    if (!fs::exists(f)) throw ConfigError("file " + f + " does not exist");
    e.files.push_back(fs::absolute(f));
  }
  auto reg = detail::open_registry(g);
  reg.add(e);
  reg.save();
  out << "registered " << name << " (" << format << ", " << files.size() << " file" << (files.size() == 1 ? "" : "s")
      << ") in " << reg.path().string() << '\n';
  return kOk;
}

inline int cmd_train(const Globals& g, const std::string& name, const ClassFlags& cf, const TrainFlags& flags,
                     std::ostream& out) {
  const auto cfg = detail::base_config(g, name, flags);
  const Dataset data = detail::require_dataset(g, name);
  const auto task = detail::single_task(data, cf);
  auto session = run_session_with_model(data, name, task, cfg, g.seed);

  RunReport rep;
  rep.dataset = name;
  rep.protocol = is_time_series(data) ? (task.size() == 1 ? "one_vs_rest" : "n_vs_rest") : "tabular";
  rep.metric = is_time_series(data) ? "auc" : "f1";
  rep.seeds = {g.seed};
  rep.config = cfg;
  rep.runs = {session.run};
  aggregate(rep, {task});

  const fs::path dir(g.out);
  save_checkpoint(session.model, dir / "checkpoint");
  detail::write_file(dir / "report.json", to_json(rep).dump(2) + "\n");
  out << "checkpoint: " << (dir / "checkpoint").string() << '\n'
      << "report: " << (dir / "report.json").string() << '\n'
      << "test auc: " << detail::fmt(session.run.auc) << '\n';
  if (session.run.f1) out << "test f1: " << detail::fmt(*session.run.f1) << '\n';
  return kOk;
}

inline int cmd_score(const std::string& checkpoint, const std::string& input, const std::string& output,
                     std::ostream& out) {
  const auto model = load_checkpoint(checkpoint);
  const auto samples = detail::read_samples(input, model);
  const auto scores = score_all(model, samples);
  std::ostringstream os;
  os << std::setprecision(17);
  if (!samples.empty()) {
    os << "id,total";
    for (std::size_t k = 0; k < model.K; ++k) os << ",term_" << k + 1;
    os << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
      os << samples.ids[i] << ',' << scores.totals[i];
      for (double v : scores.breakdowns[i].per_transformation) os << ',' << v;
      os << '\n';
    }
  }
  if (output.empty() || output == "-")
    out << os.str();
  else
    detail::write_file(output, os.str());
  return kOk;
}

inline const std::vector<std::string>& reproduce_tables() {
  static const std::vector<std::string> t{"ts_one_vs_rest", "ts_n_vs_rest", "tabular"};
  return t;
}

// Result table for one of the evaluation protocols over the datasets that are
// available; unavailable ones keep an empty row marked "missing".
inline int cmd_reproduce(const Globals& g, const std::string& table, std::vector<std::string> datasets,
                         std::optional<std::size_t> n, std::vector<std::uint64_t> seeds, const TrainFlags& flags,
                         std::ostream& out, std::ostream& err) {
  const auto& tables = reproduce_tables();
  if (std::find(tables.begin(), tables.end(), table) == tables.end())
    throw ConfigError("unknown table '" + table + "' (expected ts_one_vs_rest, ts_n_vs_rest or tabular)");
  const bool ts = table != "tabular";
  if (datasets.empty())
    datasets = ts ? std::vector<std::string>{"sad", "natops", "ct", "epilepsy", "rs"}
                  : std::vector<std::string>{"arrhythmia", "thyroid", "kdd", "kddrev"};
  if (seeds.empty()) seeds = {0, 1, 2, 3, 4};

  std::ostringstream csv;
  csv << "table,dataset,metric,n,tasks,mean,std,status\n";
  std::vector<std::string> missing;
  for (const auto& name : datasets) {
    const auto data = detail::find_dataset(g, name);
    if (!data) {
      missing.push_back(name);
      csv << table << ',' << name << ',' << (ts ? "auc" : "f1") << ",,,,,missing\n";
      continue;
    }
    if (is_time_series(*data) != ts)
      throw ConfigError("dataset " + name + " does not fit table " + table);
    ProtocolSpec spec{Protocol::tabular};
    if (table == "ts_one_vs_rest") spec = {Protocol::one_vs_rest, 1};
    if (table == "ts_n_vs_rest")
      spec = {Protocol::n_vs_rest, n ? *n : std::get<TimeSeriesDataset>(*data).num_classes() - 1};
    const auto cfg = detail::base_config(g, name, flags);
    const auto rep = run_protocol(*data, name, spec, cfg, seeds, detail::threads_of(g));
    detail::write_file(fs::path(g.out) / (table + "_" + canonical_dataset_name(name) + ".json"),
                       to_json(rep).dump(2) + "\n");
    csv << table << ',' << name << ',' << rep.metric << ',' << (ts ? std::to_string(spec.n) : "") << ','
        << rep.tasks.size() << ',' << detail::fmt(rep.overall.mean) << ',' << detail::fmt(rep.overall.stddev)
        << ",ok\n";
  }
  detail::write_file(fs::path(g.out) / (table + ".csv"), csv.str());
  out << csv.str();
  if (!missing.empty()) {
    err << "missing datasets:";
    for (const auto& m : missing) err << ' ' << m;
    err << '\n';
  }
  return missing.size() == datasets.size() ? kUsage : kOk;
}

inline int cmd_sweep(const Globals& g, const std::string& name, const ClassFlags& cf, std::vector<std::size_t> Ks,
                     std::vector<std::string> mode_names, std::vector<std::uint64_t> seeds, const TrainFlags& flags,
                     std::ostream& out) {
  const auto cfg = detail::base_config(g, name, flags);
  const Dataset data = detail::require_dataset(g, name);
  if (Ks.empty())
    for (std::size_t k = 2; k <= 15; ++k) Ks.push_back(k);
  if (mode_names.empty()) mode_names = {"feed_forward", "residual", "multiplicative"};
  std::vector<Parametrization> modes;
  for (const auto& m : mode_names) modes.push_back(parse_parametrization(m));
  if (seeds.empty()) seeds = {0, 1, 2, 3, 4};
  const auto table = k_sweep(data, name, detail::single_task(data, cf), Ks, modes, cfg, seeds, detail::threads_of(g));
  const auto csv = sweep_csv(table);
  const fs::path dir(g.out);
  const auto stem = "sweep_" + canonical_dataset_name(name);
  detail::write_file(dir / (stem + ".csv"), csv);
  const auto curve = sweep_curve(table);
  detail::write_file(dir / (stem + "_curve.csv"), curve.to_csv());
  detail::write_file(dir / (stem + "_curve.svg"), render_svg(curve));
  out << csv;
  return kOk;
}

inline int cmd_verify_theory(const TheoryGrid& grid, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  const auto reports = run_theory_grid(grid, seed);
  out << "loss,edge_case,K,C,tau,analytic,numeric,grad_norm,resamples,status\n";
  std::size_t failed = 0;
  for (const auto& r : reports) {
    out << r.loss_name << ',' << r.edge_case << ',' << r.K << ',' << detail::fmt(r.C) << ',' << detail::fmt(r.tau) << ','
        << detail::fmt(r.analytic_value) << ',' << detail::fmt(r.numeric_value) << ',' << detail::fmt(r.gradient_norm)
        << ',' << r.resamples << ',' << (r.passed ? "PASS" : "FAIL") << '\n';
    if (!r.passed) {
      ++failed;
      err << "FAILED: " << r.loss_name << ' ' << r.edge_case << " K=" << r.K << " C=" << r.C << " tau=" << r.tau
          << (r.note.empty() ? "" : " (" + r.note + ")") << '\n';
    }
  }
  err << reports.size() - failed << '/' << reports.size() << " edge cases passed\n";
  return failed ? kTheoryFailure : kOk;
}

struct PlotFlags {
  std::string report, checkpoint, dataset, sweep;
  std::vector<std::size_t> samples{0};
  std::size_t bins = 30;
  bool no_svg = false;
};

inline int cmd_plot(const Globals& g, const std::string& kind, const PlotFlags& pf, const ClassFlags& cf,
                    std::ostream& out) {
  static const std::vector<std::string> kinds{"score_histogram", "pca_projection", "mask_heatmap", "simplex_scores",
                                              "sweep_curve"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw ConfigError("unknown plot kind '" + kind +
                      "' (expected score_histogram, pca_projection, mask_heatmap, simplex_scores or sweep_curve)");
  PlotData p;
  if (kind == "score_histogram") {
    if (pf.report.empty()) throw ConfigError("score_histogram needs --report (a train or reproduce report)");
    std::ifstream in(pf.report);
    if (!in) throw ConfigError("cannot read report " + pf.report);
    const auto j = nlohmann::json::parse(in);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : j.at("runs")) {
      const auto s = r.at("test_scores").get<std::vector<double>>();
      const auto l = r.at("test_labels").get<std::vector<int>>();
      scores.insert(scores.end(), s.begin(), s.end());
      labels.insert(labels.end(), l.begin(), l.end());
    }
    p = score_histogram(scores, labels, pf.bins);
    p.metadata["report"] = pf.report;
  } else if (kind == "sweep_curve") {
    if (pf.sweep.empty()) throw ConfigError("sweep_curve needs --sweep (a table written by the sweep command)");
    auto t = detail::read_sweep_csv(pf.sweep);
    t.dataset = pf.sweep;
    t.metric = "metric";
    p = sweep_curve(t);
  } else {
    if (pf.checkpoint.empty() || pf.dataset.empty()) throw ConfigError(kind + " needs --checkpoint and --dataset");
    const auto model = load_checkpoint(pf.checkpoint);
    const Dataset data = detail::require_dataset(g, pf.dataset);
    const auto split = make_split(data, detail::single_task(data, cf), g.seed);
    if (kind == "pca_projection") {
      p = pca_projection(model, split.test);
    } else if (kind == "mask_heatmap") {
      p = mask_heatmap(model, split.test, pf.samples);
    } else {
      const auto s = score_all(model, split.test);
      p = simplex_scores(s.breakdowns, split.test.labels);
    }
  }
  const fs::path dir(g.out);
  detail::write_file(dir / (kind + ".csv"), p.to_csv());
  out << "wrote " << (dir / (kind + ".csv")).string() << '\n';
  if (!pf.no_svg) {
    detail::write_file(dir / (kind + ".svg"), render_svg(p));
    out << "wrote " << (dir / (kind + ".svg")).string() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- entry

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Neural transformation learning for anomaly detection"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON training config");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--registry", g.registry, "dataset registry file (default: $NEUTRAL_REGISTRY or neutral_registry.json)");
  app.add_option("--threads", g.threads, "worker threads for protocol runs (0 = all cores)");

  std::string name, format;
  std::vector<std::string> files;
  auto* reg = app.add_subcommand("register-dataset", "add a dataset to the registry");
  reg->add_option("--name", name, "dataset name")->required();
  reg->add_option("--format", format, "uea | arrhythmia | thyroid | kdd | kddrev | csv")->required();
  reg->add_option("--files", files, "data files (uea: train then test)")->required();

  TrainFlags tf;
  ClassFlags cf;
  std::string dataset;
  auto* tr = app.add_subcommand("train", "train one model and write checkpoint + report");
  tr->add_option("--dataset", dataset, "registered dataset (or 'synthetic')")->required();
  cf.attach(tr);
  tf.attach(tr);

  std::string checkpoint, input, output;
  auto* sc = app.add_subcommand("score", "score samples with a checkpoint");
  sc->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  sc->add_option("--input", input, "samples: .ts file or CSV, one flattened sample per row")->required();
  sc->add_option("--output", output, "CSV destination (default: stdout)");

  std::string table;
  std::vector<std::string> datasets;
  std::optional<std::size_t> n;
  std::vector<std::uint64_t> seeds;
  auto* rp = app.add_subcommand("reproduce", "run a result table's protocol on the available datasets");
  rp->add_option("table", table, "ts_one_vs_rest | ts_n_vs_rest | tabular")->required();
  rp->add_option("--datasets,--dataset", datasets, "dataset subset")->delimiter(',');
  rp->add_option("--n", n, "normal classes per window for ts_n_vs_rest (default N-1)");
  rp->add_option("--seeds", seeds, "seeds (default 0,1,2,3,4)")->delimiter(',');
  TrainFlags rtf;
  rtf.attach(rp);

  std::vector<std::size_t> Ks;
  std::vector<std::string> modes;
  std::vector<std::uint64_t> sweep_seeds;
  TrainFlags stf;
  ClassFlags scf;
  auto* sw = app.add_subcommand("sweep", "metric across K and parametrizations");
  sw->add_option("--dataset", dataset, "registered dataset (or 'synthetic')")->required();
  sw->add_option("--K-values", Ks, "K values (default 2..15)")->delimiter(',');
  sw->add_option("--modes", modes, "parametrizations (default all three)")->delimiter(',');
  sw->add_option("--seeds", sweep_seeds, "seeds (default 0,1,2,3,4)")->delimiter(',');
  scf.attach(sw);
  stf.attach(sw);
  // K is swept, so the single-K flag is not offered here
  sw->remove_option(sw->get_option("--K"));

  TheoryGrid grid;
  auto* vt = app.add_subcommand("verify-theory", "check the loss edge cases against closed forms");
  vt->add_option("--K", grid.K, "K values")->delimiter(',');
  vt->add_option("--C", grid.C, "constants C")->delimiter(',');
  vt->add_option("--tau", grid.tau, "temperatures")->delimiter(',');

  std::string plot_kind;
  PlotFlags pf;
  ClassFlags pcf;
  auto* pl = app.add_subcommand("plot", "emit figure data (CSV) and a static SVG");
  pl->add_option("kind", plot_kind, "score_histogram | pca_projection | mask_heatmap | simplex_scores | sweep_curve")
      ->required();
  pl->add_option("--report", pf.report, "report JSON (score_histogram)");
  pl->add_option("--checkpoint", pf.checkpoint, "checkpoint directory");
  pl->add_option("--dataset", pf.dataset, "dataset whose test split is plotted");
  pl->add_option("--sweep", pf.sweep, "sweep CSV (sweep_curve)");
  pl->add_option("--samples", pf.samples, "test sample indices (mask_heatmap)")->delimiter(',');
  pl->add_option("--bins", pf.bins, "histogram bins");
  pl->add_flag("--no-svg", pf.no_svg, "skip the SVG");
  pcf.attach(pl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*reg) return cmd_register(g, name, format, files, out);
    if (*tr) return cmd_train(g, dataset, cf, tf, out);
    if (*sc) return cmd_score(checkpoint, input, output, out);
    if (*rp) return cmd_reproduce(g, table, datasets, n, seeds, rtf, out, err);
    if (*sw) return cmd_sweep(g, dataset, scf, Ks, modes, sweep_seeds, stf, out);
    if (*vt) return cmd_verify_theory(grid, g.seed, out, err);
    if (*pl) return cmd_plot(g, plot_kind, pf, pcf, out);
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace neutral::cli
