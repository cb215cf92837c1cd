#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "neutral/train.hpp"

namespace neutral {

// A named numeric table behind one figure, written as CSV. metadata goes
// into leading "# key: value" comment lines.
struct PlotData {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> metadata;

  std::vector<double> column(std::string_view name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("plot data has no column '" + std::string(name) + "'");
    const auto c = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "# kind: " << kind << '\n';
    for (const auto& [k, v] : metadata) os << "# " << k << ": " << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }
};

// ---------------------------------------------------------------- histogram

// Equal-width bins over the full score range; counts per label.
inline PlotData score_histogram(std::span<const double> scores, std::span<const int> labels, std::size_t bins = 30) {
  if (scores.size() != labels.size()) throw DimensionError("histogram: scores and labels differ in length");
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  PlotData p{"score_histogram", {"bin_low", "bin_high", "inliers", "anomalies"}, {}, {}};
  if (scores.empty()) return p;
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it > *lo_it ? *hi_it : *lo_it + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> in(bins, 0.0), out(bins, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto b = static_cast<std::size_t>((scores[i] - lo) / width);
    b = std::min(b, bins - 1);
    (labels[i] ? out : in)[b] += 1.0;
  }
  for (std::size_t b = 0; b < bins; ++b)
    p.rows.push_back({lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1), in[b], out[b]});
  return p;
}

// ---------------------------------------------------------------- PCA

struct Pca {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;        // D x components, orthonormal columns
  Eigen::VectorXd eigenvalues;  // descending

  Eigen::MatrixXd project(const Eigen::MatrixXd& X) const { return (X.rowwise() - mean.transpose()) * basis; }
};

// Covariance eigendecomposition; rows of X are observations.
inline Pca fit_pca(const Eigen::MatrixXd& X, std::size_t components = 3) {
  const auto D = static_cast<std::size_t>(X.cols());
  if (D < components)
    throw ConfigError("PCA needs at least " + std::to_string(components) + " dimensions, data has " + std::to_string(D));
  if (X.rows() < 2) throw ConfigError("PCA needs at least two observations");
  Pca p;
  p.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw ContractError("PCA eigendecomposition failed");
  const auto n = static_cast<Eigen::Index>(components);
  // ascending order from the solver
  p.basis = es.eigenvectors().rightCols(n).rowwise().reverse();
  p.eigenvalues = es.eigenvalues().tail(n).reverse();
  // sign convention: largest-magnitude entry positive
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index arg;
    p.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (p.basis(arg, c) < 0) p.basis.col(c) *= -1.0;
  }
  return p;
}

namespace detail {

// View k of every sample (k = 0 is the sample itself) in data space and
// embedding space, on standardized inputs.
struct ViewTable {
  std::vector<std::size_t> sample, view;
  std::vector<int> label;
  Eigen::MatrixXd data, embedding;
};

inline ViewTable collect_views(const Model& model, const SampleSet& raw) {
  SampleSet samples = raw;
  model.standardization.apply(samples);
  const std::size_t n = samples.size(), K = model.K, S = samples.sample_size(), E = model.encoder.embedding_dim();
  ViewTable t;
  t.data.resize(static_cast<Eigen::Index>(n * (K + 1)), static_cast<Eigen::Index>(S));
  t.embedding.resize(static_cast<Eigen::Index>(n * (K + 1)), static_cast<Eigen::Index>(E));
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor x = samples.batch(std::vector<std::size_t>{i});
    std::vector<Tensor> views{x};
    auto extra = model.objective == Objective::tp_fixed ? FixedTransforms{}.apply_all(x) : model.stack->apply_all(x);
    for (auto& v : extra) views.push_back(std::move(v));
    const Tensor z = model.objective == Objective::tp_fixed ? encode_views(model.encoder, FixedTransforms{}, x)
                                                            : encode_views(model.encoder, *model.stack, x);
    const auto zd = z.data();
    for (std::size_t k = 0; k <= K; ++k) {
      const auto row = static_cast<Eigen::Index>(i * (K + 1) + k);
      const auto vd = views[k].data();
      for (std::size_t j = 0; j < S; ++j) t.data(row, static_cast<Eigen::Index>(j)) = vd[j];
      for (std::size_t j = 0; j < E; ++j) t.embedding(row, static_cast<Eigen::Index>(j)) = zd[k * E + j];
      t.sample.push_back(i);
      t.view.push_back(k);
      t.label.push_back(samples.labels[i]);
    }
  }
  return t;
}

}  // namespace detail

// Top-3 principal components of the original and transformed samples, in
// data space (space = 0) and embedding space (space = 1). The basis is fit
// on inlier views only; anomaly views are projected into the same frame.
inline PlotData pca_projection(const Model& model, const SampleSet& samples) {
  if (samples.anomalies() == samples.size()) throw ConfigError("PCA projection needs inlier samples to fit on");
  const auto t = detail::collect_views(model, samples);
  PlotData p{"pca_projection", {"sample", "label", "view", "space", "pc1", "pc2", "pc3"}, {}, {}};
  p.metadata["dataset"] = model.dataset;
  p.metadata["K"] = std::to_string(model.K);
  p.metadata["fit_population"] = "inlier views";
  for (int space = 0; space < 2; ++space) {
    const Eigen::MatrixXd& X = space == 0 ? t.data : t.embedding;
    std::vector<Eigen::Index> inl;
    for (std::size_t r = 0; r < t.label.size(); ++r)
      if (t.label[r] == 0) inl.push_back(static_cast<Eigen::Index>(r));
    Eigen::MatrixXd fit(static_cast<Eigen::Index>(inl.size()), X.cols());
    for (std::size_t r = 0; r < inl.size(); ++r) fit.row(static_cast<Eigen::Index>(r)) = X.row(inl[r]);
    const auto pca = fit_pca(fit, 3);
    const Eigen::MatrixXd Y = pca.project(X);
    for (Eigen::Index r = 0; r < Y.rows(); ++r) {
      const auto u = static_cast<std::size_t>(r);
      p.rows.push_back({static_cast<double>(samples.ids[t.sample[u]]), static_cast<double>(t.label[u]),
                        static_cast<double>(t.view[u]), static_cast<double>(space), Y(r, 0), Y(r, 1), Y(r, 2)});
    }
  }
  return p;
}

// ---------------------------------------------------------------- masks

// M_k(x) for the chosen samples (standardized input). Time series give one
// row per (sample, k, channel, t); tabular rows use t = 0.
inline PlotData mask_heatmap(const Model& model, const SampleSet& raw, std::span<const std::size_t> which) {
  if (!model.stack) throw ConfigError("mask heatmaps need a model with learned transformations");
  SampleSet samples = raw;
  model.standardization.apply(samples);
  PlotData p{"mask_heatmap", {"sample", "k", "channel", "t", "value"}, {}, {}};
  p.metadata["dataset"] = model.dataset;
  p.metadata["mode"] = std::string(to_string(model.stack->mode()));
  const auto& shape = samples.sample_shape;
  const std::size_t C = shape[0], L = shape.size() == 2 ? shape[1] : 1;
  for (std::size_t i : which) {
    if (i >= samples.size()) throw IndexError("sample " + std::to_string(i) + " out of range");
    const auto xs = samples.sample(i);
    const Tensor x(shape, {xs.begin(), xs.end()});
    for (std::size_t k = 0; k < model.K; ++k) {
      const Tensor m = model.stack->mask(k).forward(x);
      const auto d = m.data();
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < L; ++t)
          p.rows.push_back({static_cast<double>(samples.ids[i]), static_cast<double>(k + 1), static_cast<double>(c),
                            static_cast<double>(t), d[c * L + t]});
    }
  }
  return p;
}

// ---------------------------------------------------------------- simplex

// Each sample's per-transformation terms divided by their total: a point on
// the (K-1)-simplex. A zero total maps to the barycenter.
inline PlotData simplex_scores(std::span<const ScoreBreakdown> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("simplex: scores and labels differ in length");
  PlotData p{"simplex_scores", {"sample", "label"}, {}, {}};
  const std::size_t K = scores.empty() ? 0 : scores[0].per_transformation.size();
  for (std::size_t k = 0; k < K; ++k) p.columns.push_back("share_" + std::to_string(k + 1));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& terms = scores[i].per_transformation;
    if (terms.size() != K) throw DimensionError("simplex: inconsistent K");
    double sum = 0.0;
    for (double v : terms) {
      if (v < 0.0) throw ContractError("simplex: negative score term");
      sum += v;
    }
    std::vector<double> row{static_cast<double>(i), static_cast<double>(labels[i])};
    for (double v : terms) row.push_back(sum > 0.0 ? v / sum : 1.0 / static_cast<double>(K));
    p.rows.push_back(std::move(row));
  }
  return p;
}

// ---------------------------------------------------------------- sweep

// Metric against K, one mean/std column pair per parametrization.
inline PlotData sweep_curve(const SweepTable& t) {
  PlotData p{"sweep_curve", {"K"}, {}, {{"dataset", t.dataset}, {"metric", t.metric}}};
  std::vector<Parametrization> modes;
  std::vector<std::size_t> Ks;
  for (const auto& c : t.cells) {
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) modes.push_back(c.mode);
    if (std::find(Ks.begin(), Ks.end(), c.K) == Ks.end()) Ks.push_back(c.K);
  }
  std::sort(Ks.begin(), Ks.end());
  for (auto m : modes) {
    p.columns.push_back(std::string(to_string(m)) + "_mean");
    p.columns.push_back(std::string(to_string(m)) + "_std");
  }
  for (auto K : Ks) {
    std::vector<double> row{static_cast<double>(K)};
    for (auto m : modes) {
      const auto* c = t.find(K, m);
      row.push_back(c ? c->metric.mean : std::numeric_limits<double>::quiet_NaN());
      row.push_back(c ? c->metric.stddev : std::numeric_limits<double>::quiet_NaN());
    }
    p.rows.push_back(std::move(row));
  }
  return p;
}

// ---------------------------------------------------------------- SVG

namespace svg {

inline constexpr double kW = 640, kH = 420, kPad = 50;
inline const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
                                 "#8c6d31", "#843c39", "#7b4173", "#3182bd"};

inline std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kPad + (x - x0) / (x1 - x0 == 0 ? 1 : x1 - x0) * (kW - 2 * kPad); }
  double sy(double y) const { return kH - kPad - (y - y0) / (y1 - y0 == 0 ? 1 : y1 - y0) * (kH - 2 * kPad); }
};

inline Frame frame_of(std::span<const double> xs, std::span<const double> ys) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : xs)
    if (std::isfinite(x)) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
  for (double y : ys)
    if (std::isfinite(y)) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
  if (!std::isfinite(f.x0)) f.x0 = 0, f.x1 = 1;
  if (!std::isfinite(f.y0)) f.y0 = 0, f.y1 = 1;
  return f;
}

inline std::string open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
  return os.str();
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << std::setprecision(4);
  os << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
     << "\" stroke=\"black\"/>\n";
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s << "</text>\n";
  };
  std::ostringstream a, b, c, d;
  a << std::setprecision(4) << f.x0;
  b << std::setprecision(4) << f.x1;
  c << std::setprecision(4) << f.y0;
  d << std::setprecision(4) << f.y1;
  text(kPad, kH - kPad + 15, a.str(), "middle");
  text(kW - kPad, kH - kPad + 15, b.str(), "middle");
  text(kPad - 5, kH - kPad, c.str(), "end");
  text(kPad - 5, kPad + 4, d.str(), "end");
  text(kW / 2, kH - 12, xlabel, "middle");
  text(14, kH / 2, ylabel, "middle");
  return os.str();
}

}  // namespace svg

// Static rendering of a PlotData table: bars for histograms, scatter for
// PCA (pc1 vs pc2, data space) and simplex points, a grid for the first
// sample's masks, lines for sweeps.
inline std::string render_svg(const PlotData& p) {
  using namespace svg;
  std::ostringstream os;
  os << std::setprecision(5);
  os << open(p.kind);
  if (p.kind == "score_histogram") {
    const auto lo = p.column("bin_low"), hi = p.column("bin_high"), in = p.column("inliers"), an = p.column("anomalies");
    std::vector<double> xs = lo;
    xs.insert(xs.end(), hi.begin(), hi.end());
    std::vector<double> ys = in;
    ys.insert(ys.end(), an.begin(), an.end());
    ys.push_back(0);
    const auto f = frame_of(xs, ys);
    for (std::size_t b = 0; b < lo.size(); ++b)
      for (int s = 0; s < 2; ++s) {
        const double v = s ? an[b] : in[b];
        if (v <= 0) continue;
        os << "<rect x=\"" << f.sx(lo[b]) << "\" y=\"" << f.sy(v) << "\" width=\"" << f.sx(hi[b]) - f.sx(lo[b])
           << "\" height=\"" << f.sy(0) - f.sy(v) << "\" fill=\"" << color(static_cast<std::size_t>(s))
           << "\" fill-opacity=\"0.6\"/>\n";
      }
    os << axes(f, "anomaly score", "count");
  } else if (p.kind == "pca_projection") {
    std::vector<double> xs, ys, view, label;
    const auto space = p.column("space"), pc1 = p.column("pc1"), pc2 = p.column("pc2"), v = p.column("view"),
               l = p.column("label");
    for (std::size_t i = 0; i < space.size(); ++i)
      if (space[i] == 0) xs.push_back(pc1[i]), ys.push_back(pc2[i]), view.push_back(v[i]), label.push_back(l[i]);
    const auto f = frame_of(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << "<circle cx=\"" << f.sx(xs[i]) << "\" cy=\"" << f.sy(ys[i]) << "\" r=\"" << (label[i] ? 3 : 2)
         << "\" fill=\"" << color(static_cast<std::size_t>(view[i])) << "\" fill-opacity=\"" << (label[i] ? 0.9 : 0.4)
         << "\"/>\n";
    os << axes(f, "pc1 (data space)", "pc2");
  } else if (p.kind == "simplex_scores") {
    const std::size_t K = p.columns.size() - 2;
    std::vector<std::pair<double, double>> vertex;
    for (std::size_t k = 0; k < K; ++k) {
      const double a = 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(K) - std::numbers::pi / 2;
      vertex.emplace_back(std::cos(a), std::sin(a));
    }
    const Frame f{-1.1, 1.1, -1.1, 1.1};
    for (std::size_t k = 0; k < K; ++k) {
      const auto& [a, b] = vertex[k];
      const auto& [c, d] = vertex[(k + 1) % K];
      os << "<line x1=\"" << f.sx(a) << "\" y1=\"" << f.sy(b) << "\" x2=\"" << f.sx(c) << "\" y2=\"" << f.sy(d)
         << "\" stroke=\"#999\"/>\n";
    }
    for (const auto& r : p.rows) {
      double x = 0, y = 0;
      for (std::size_t k = 0; k < K; ++k) x += r[2 + k] * vertex[k].first, y += r[2 + k] * vertex[k].second;
      os << "<circle cx=\"" << f.sx(x) << "\" cy=\"" << f.sy(y) << "\" r=\"2\" fill=\"" << color(r[1] ? 1 : 0)
         << "\" fill-opacity=\"0.6\"/>\n";
    }
  } else if (p.kind == "mask_heatmap") {
    const auto sample = p.column("sample"), k = p.column("k"), c = p.column("channel"), t = p.column("t"),
               v = p.column("value");
    if (!sample.empty()) {
      double K = 0, C = 0, L = 0, lo = v[0], hi = v[0];
      for (std::size_t i = 0; i < v.size(); ++i)
        if (sample[i] == sample[0])
          K = std::max(K, k[i]), C = std::max(C, c[i] + 1), L = std::max(L, t[i] + 1), lo = std::min(lo, v[i]),
          hi = std::max(hi, v[i]);
      const double cw = (kW - 2 * kPad) / L, ch = (kH - 2 * kPad) / (K * C);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (sample[i] != sample[0]) continue;
        const double g = hi > lo ? (v[i] - lo) / (hi - lo) : 0.5;
        const int shade = static_cast<int>(std::lround(255 * g));
        os << "<rect x=\"" << kPad + t[i] * cw << "\" y=\"" << kPad + ((k[i] - 1) * C + c[i]) * ch << "\" width=\""
           << cw << "\" height=\"" << ch << "\" fill=\"rgb(" << shade << "," << shade << "," << shade << ")\"/>\n";
      }
    }
  } else if (p.kind == "sweep_curve") {
    const auto K = p.column("K");
    std::vector<double> ys;
    for (std::size_t c = 1; c < p.columns.size(); c += 2) {
      const auto m = p.column(p.columns[c]);
      ys.insert(ys.end(), m.begin(), m.end());
    }
    const auto f = frame_of(K, ys);
    for (std::size_t c = 1; c < p.columns.size(); c += 2) {
      const auto m = p.column(p.columns[c]);
      os << "<polyline fill=\"none\" stroke=\"" << color(c / 2) << "\" points=\"";
      for (std::size_t i = 0; i < K.size(); ++i)
        if (std::isfinite(m[i])) os << f.sx(K[i]) << ',' << f.sy(m[i]) << ' ';
      os << "\"/>\n";
      os << "<text x=\"" << kW - kPad << "\" y=\"" << kPad + 14.0 * static_cast<double>(c / 2)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color(c / 2) << "\">"
         << p.columns[c].substr(0, p.columns[c].size() - 5) << "</text>\n";
    }
    os << axes(f, "K", p.metadata.count("metric") ? p.metadata.at("metric") : "metric");
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace neutral
