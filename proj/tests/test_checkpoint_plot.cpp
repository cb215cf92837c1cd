#include <gtest/gtest.h>

#include <Eigen/QR>
#include <filesystem>

#include "neutral/checkpoint.hpp"
#include "neutral/plot.hpp"
#include "neutral/synthetic.hpp"

using namespace neutral;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("neutral_test_" + name);
  fs::remove_all(p);
  return p;
}

TrainConfig quick(std::size_t epochs) {
  auto c = synthetic_benchmark_config();
  c.epochs = epochs;
  return c;
}

void expect_relative(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), tol * std::max(1.0, std::abs(b[i]))) << i;
}

}  // namespace

TEST(Checkpoint, TabularRoundTripWithinSinglePrecision) {
  const auto split = split_tabular(make_two_gaussians({}, 0), 0);
  auto c = quick(3);
  c.standardize = true;
  auto r = train(c, split, "synthetic");
  const auto dir = scratch("ckpt_tab");
  save_checkpoint(r.model, dir);
  const auto loaded = load_checkpoint(dir);
  EXPECT_EQ(loaded.K, r.model.K);
  EXPECT_EQ(loaded.standardization.mean, r.model.standardization.mean);
  expect_relative(score_all(loaded, split.test).totals, score_all(r.model, split.test).totals, 1e-6);
}

TEST(Checkpoint, TimeSeriesRoundTripBothObjectives) {
  const auto ds = make_toy_series(3, 10, 2, 16, 0);
  const auto split = split_one_vs_rest(ds, 1, 0);
  for (auto obj : {Objective::dcl, Objective::tp_fixed}) {
    auto c = quick(2);
    c.objective = obj;
    c.mode = Parametrization::multiplicative;
    auto r = train(c, split, "toy");
    const auto dir = scratch("ckpt_ts");
    save_checkpoint(r.model, dir);
    const auto loaded = load_checkpoint(dir);
    EXPECT_EQ(loaded.objective, obj);
    expect_relative(score_all(loaded, split.test).totals, score_all(r.model, split.test).totals, 1e-6);
  }
}

TEST(Checkpoint, RefusesOtherVersionsAndDamagedFiles) {
  auto m = make_model("synthetic", {2}, TrainConfig{});
  const auto dir = scratch("ckpt_bad");
  save_checkpoint(m, dir);
  {
    std::ifstream in(dir / "manifest.json");
    auto j = nlohmann::json::parse(in);
    j["version"] = 2;
    std::ofstream(dir / "manifest.json") << j.dump();
  }
  EXPECT_THROW(load_checkpoint(dir), ConfigError);

  save_checkpoint(m, dir);
  const auto bin = dir / "encoder.fc0.weight.bin";
  ASSERT_TRUE(fs::exists(bin));
  fs::resize_file(bin, fs::file_size(bin) - 4);
  EXPECT_THROW(load_checkpoint(dir), ConfigError);
  EXPECT_THROW(load_checkpoint(scratch("ckpt_missing")), ConfigError);
}

TEST(Checkpoint, FloatFilesAreLittleEndian) {
  auto m = make_model("synthetic", {2}, TrainConfig{});
  auto named = m.named_parameters();
  std::vector<Tensor> values;
  for (auto& [n, p] : named) values.push_back(Tensor::full(p->shape(), 0.0));
  values[0] = Tensor::full(named[0].second->shape(), 1.0);  // 0x3f800000
  m.set_parameters(values);
  const auto dir = scratch("ckpt_le");
  save_checkpoint(m, dir);
  std::ifstream in(dir / (named[0].first + ".bin"), std::ios::binary);
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  EXPECT_EQ(b[0], 0x00);
  EXPECT_EQ(b[1], 0x00);
  EXPECT_EQ(b[2], 0x80);
  EXPECT_EQ(b[3], 0x3f);
}

TEST(Plot, HistogramOfSeparatedScoresHasNoOverlap) {
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) s.push_back(i * 0.01), y.push_back(0);
  for (int i = 0; i < 20; ++i) s.push_back(5 + i * 0.01), y.push_back(1);
  const auto h = score_histogram(s, y, 20);
  ASSERT_EQ(h.rows.size(), 20u);
  double total = 0;
  for (const auto& r : h.rows) {
    EXPECT_FALSE(r[2] > 0 && r[3] > 0);
    total += r[2] + r[3];
  }
  EXPECT_EQ(total, 70.0);
}

TEST(Plot, PcaRecoversKnownEigenvectors) {
  // Points +-a_j q_j for an orthonormal Q: mean zero and covariance exactly
  // sum_j 2 a_j^2 q_j q_j^T / (n - 1), so q_1..q_3 are the top eigenvectors.
  const int D = 7;
  CounterRng rng(11, 0);
  Eigen::MatrixXd R(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) R(i, j) = rng.normal();
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(R).householderQ();
  const std::vector<double> a{5.0, 3.0, 2.0, 1.0, 0.5, 0.3, 0.1};
  Eigen::MatrixXd X(2 * D, D);
  for (int j = 0; j < D; ++j) {
    X.row(2 * j) = a[j] * Q.col(j).transpose();
    X.row(2 * j + 1) = -a[j] * Q.col(j).transpose();
  }
  const auto pca = fit_pca(X, 3);
  const Eigen::MatrixXd gram = pca.basis.transpose() * pca.basis;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
  // principal angles between span(V) and span(q_1..q_3)
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q.leftCols(3).transpose() * pca.basis);
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::sqrt(std::max(0.0, 1.0 - std::pow(svd.singularValues()(i), 2))), 1e-6);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(std::abs(Q.col(j).dot(pca.basis.col(j))), 1.0, 1e-10);
    EXPECT_NEAR(pca.eigenvalues(j), 2 * a[j] * a[j] / (2 * D - 1), 1e-10);
  }
  // projection is exactly (X - mean) V
  const Eigen::MatrixXd Y = pca.project(X);
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < 3; ++c) {
      double v = 0;
      for (int d = 0; d < D; ++d) v += (X(r, d) - pca.mean(d)) * pca.basis(d, c);
      EXPECT_NEAR(Y(r, c), v, 1e-14);
    }
  EXPECT_THROW(fit_pca(X.leftCols(2), 3), ConfigError);
}

TEST(Plot, PcaProjectionOfViews) {
  const auto ds = make_toy_series(2, 8, 2, 16, 0);
  const auto split = split_one_vs_rest(ds, 0, 0);
  auto r = train(quick(1), split, "toy");
  const auto p = pca_projection(r.model, split.test);
  EXPECT_EQ(p.rows.size(), split.test.size() * (r.model.K + 1) * 2);
  const auto views = p.column("view");
  EXPECT_EQ(*std::max_element(views.begin(), views.end()), static_cast<double>(r.model.K));

  // 2-D samples have no 3-dimensional data space
  auto m = make_model("synthetic", {2}, TrainConfig{});
  SampleSet s{{2}};
  for (int i = 0; i < 5; ++i) s.push_back(std::vector<double>{1.0 + i, 2.0 - i}, 0, i);
  EXPECT_THROW(pca_projection(m, s), ConfigError);
}

TEST(Plot, SimplexRowsAreBarycentric) {
  const auto split = split_tabular(make_two_gaussians({}, 3), 3);
  auto r = train(quick(2), split, "synthetic");
  const auto s = score_all(r.model, split.test);
  const auto p = simplex_scores(s.breakdowns, split.test.labels);
  ASSERT_EQ(p.columns.size(), 2 + r.model.K);
  for (const auto& row : p.rows) {
    double sum = 0;
    for (std::size_t k = 2; k < row.size(); ++k) {
      EXPECT_GE(row[k], 0.0);
      sum += row[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  ScoreBreakdown zero{0.0, {0.0, 0.0, 0.0, 0.0}};
  const auto z = simplex_scores(std::vector<ScoreBreakdown>{zero}, std::vector<int>{0});
  EXPECT_DOUBLE_EQ(z.rows[0][2], 0.25);
}

TEST(Plot, MaskHeatmapShapeAndRange) {
  const auto ds = make_toy_series(2, 8, 3, 12, 0);
  const auto split = split_one_vs_rest(ds, 0, 0);
  auto c = quick(1);
  c.K = 4;
  c.mode = Parametrization::multiplicative;
  auto r = train(c, split, "toy");
  const std::vector<std::size_t> which{0, 2};
  const auto p = mask_heatmap(r.model, split.test, which);
  EXPECT_EQ(p.rows.size(), 2u * 4 * 3 * 12);
  for (double v : p.column("value")) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Plot, SweepCurveAndSvg) {
  SweepTable t{"toy", "auc", {0}, {}};
  for (std::size_t K : {2u, 4u})
    for (auto m : {Parametrization::residual, Parametrization::multiplicative})
      t.cells.push_back({K, m, {0.5 + 0.1 * static_cast<double>(K)}, {0.5 + 0.1 * static_cast<double>(K), 0.0}, 0.0});
  const auto p = sweep_curve(t);
  EXPECT_EQ(p.columns, (std::vector<std::string>{"K", "residual_mean", "residual_std", "multiplicative_mean",
                                                 "multiplicative_std"}));
  ASSERT_EQ(p.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(p.rows[1][1], 0.9);
  for (const auto& plot : {p, score_histogram(std::vector<double>{1, 2, 3}, std::vector<int>{0, 1, 0}, 3)}) {
    const auto svg = render_svg(plot);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
  }
  EXPECT_NE(p.to_csv().find("# metric: auc"), std::string::npos);
}
