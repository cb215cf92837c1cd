#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "neutral/grad_check.hpp"
#include "neutral/losses.hpp"

using namespace neutral;

namespace {

using Vec = std::vector<double>;

Tensor random_tensor(Shape shape, std::uint64_t seed, double sd = 1.0) {
  CounterRng rng(seed, 3);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.normal(0.0, sd);
  return Tensor(std::move(shape), std::move(v));
}

double cos_sim(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
  return ab / std::sqrt(aa * bb);
}

// Direct evaluation of the ratio form with plain exp (small, well-scaled
// inputs only): sum_k -log h(z_k,z_0) / sum_{l != k} h(z_k,z_l).
Vec dcl_oracle(const std::vector<Vec>& z, double tau) {
  const std::size_t K = z.size() - 1;
  Vec terms(K);
  for (std::size_t k = 1; k <= K; ++k) {
    double denom = 0;
    for (std::size_t l = 0; l <= K; ++l)
      if (l != k) denom += std::exp(cos_sim(z[k], z[l]) / tau);
    terms[k - 1] = -std::log(std::exp(cos_sim(z[k], z[0]) / tau) / denom);
  }
  return terms;
}

Tensor pack(const std::vector<std::vector<Vec>>& batch) {
  std::vector<double> flat;
  for (const auto& s : batch)
    for (const auto& v : s) flat.insert(flat.end(), v.begin(), v.end());
  return Tensor({batch.size(), batch[0].size(), batch[0][0].size()}, flat);
}

std::vector<Vec> random_views(std::size_t n, std::size_t e, std::uint64_t seed) {
  CounterRng rng(seed, 5);
  std::vector<Vec> z(n, Vec(e));
  for (auto& v : z)
    for (auto& x : v) x = rng.normal();
  return z;
}

// Brute-force minibatch contrastive loss.
double simclr_oracle(const std::vector<Vec>& u, const std::vector<Vec>& v, double tau) {
  auto h = [&](const Vec& a, const Vec& b) { return std::exp(cos_sim(a, b) / tau); };
  auto dir = [&](const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double denom = 0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        denom += h(a[i], b[j]);
        if (j != i) denom += h(a[i], a[j]);
      }
      total += -std::log(h(a[i], b[i]) / denom);
    }
    return total;
  };
  return dir(u, v) + dir(v, u);
}

Tensor rows(const std::vector<Vec>& z) {
  std::vector<double> flat;
  for (const auto& v : z) flat.insert(flat.end(), v.begin(), v.end());
  return Tensor({z.size(), z[0].size()}, flat);
}

}  // namespace

TEST(ScoreH, ReferenceValues) {
  const Vec a{1, 0, 0}, b{0, 1, 0}, c{-1, 0, 0};
  EXPECT_NEAR(score_h(a, a, 1.0), std::numbers::e, 1e-12);
  EXPECT_NEAR(score_h(a, b, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(score_h(a, c, 1.0), 1.0 / std::numbers::e, 1e-12);
}

TEST(ScoreH, SymmetricAndBounded) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto z = random_views(2, 5, s);
    const double tau = 0.1 + 0.2 * static_cast<double>(s % 5);
    const double h = score_h(z[0], z[1], tau);
    EXPECT_DOUBLE_EQ(h, score_h(z[1], z[0], tau));
    EXPECT_GE(h, std::exp(-1 / tau) * (1 - 1e-12));
    EXPECT_LE(h, std::exp(1 / tau) * (1 + 1e-12));
  }
}

TEST(Dcl, IdentityTransformsGiveKLogK) {
  for (std::size_t K : {2u, 3u, 7u, 12u}) {
    Vec z0{0.3, -1.2, 2.0, 0.5};
    std::vector<Vec> z(K + 1, z0);
    const double loss = dcl_from_embeddings(pack({z}), 0.1).item();
    EXPECT_NEAR(loss, static_cast<double>(K) * std::log(static_cast<double>(K)), 1e-9);
  }
  std::vector<Vec> z(3, Vec{1, 2});
  EXPECT_NEAR(dcl_from_embeddings(pack({z}), 1.0).item(), 1.386, 5e-4);
}

TEST(Dcl, TwoViewCounterexample) {
  // z1, z2 orthogonal to z0 and opposite to each other, tau = 1.
  std::vector<Vec> z{{1, 0}, {0, 1}, {0, -1}};
  const double loss = dcl_from_embeddings(pack({z}), 1.0).item();
  EXPECT_NEAR(loss, -2.0 * std::log(1.0 / (1.0 + std::exp(-1.0))), 1e-12);
  EXPECT_NEAR(loss, 0.627, 5e-4);
  EXPECT_LT(loss, 2.0 * std::log(2.0));
}

TEST(Dcl, ThreeViewEnumeration) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto z = random_views(4, 6, 100 + s);
    const auto terms = dcl_terms(pack({z}), 0.5);
    const auto expected = dcl_oracle(z, 0.5);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(terms.at(k), expected[k], 1e-10);
    EXPECT_NEAR(dcl_from_embeddings(pack({z}), 0.5).item(), std::accumulate(expected.begin(), expected.end(), 0.0),
                1e-10);
  }
}

TEST(Dcl, BatchMeanOfSampleTerms) {
  std::vector<std::vector<Vec>> batch;
  double total = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    batch.push_back(random_views(5, 4, 200 + s));
    for (double t : dcl_oracle(batch.back(), 0.7)) total += t;
  }
  EXPECT_NEAR(dcl_from_embeddings(pack(batch), 0.7).item(), total / 5, 1e-10);
}

TEST(Dcl, SmallTemperatureStaysFinite) {
  std::vector<Vec> z{{1, 0}, {-1, 0}, {0, 1}};
  const double loss = dcl_from_embeddings(pack({z}), 1e-3).item();
  EXPECT_TRUE(std::isfinite(loss));
  // term_1 ~ 2/tau dominated by the l=2 and l=0 competition
  EXPECT_GT(loss, 900.0);
}

TEST(Dcl, ScaleInvariance) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto z = pack({random_views(5, 8, 300 + s)});
    const double base = dcl_from_embeddings(z, 0.2).item();
    for (double c : {1e-3, 0.5, 7.0, 1e4}) EXPECT_NEAR(dcl_from_embeddings(scale(z, c), 0.2).item(), base, 1e-9);
  }
}

TEST(Dcl, PermutationEquivariance) {
  auto z = random_views(5, 6, 400);
  const std::vector<std::size_t> perm{3, 1, 4, 2};  // new view k takes old view perm[k]
  std::vector<Vec> zp{z[0]};
  for (auto p : perm) zp.push_back(z[p]);
  auto a = breakdowns_from_terms(dcl_terms(pack({z}), 0.3)).front();
  auto b = breakdowns_from_terms(dcl_terms(pack({zp}), 0.3)).front();
  EXPECT_NEAR(a.total, b.total, 1e-12);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(b.per_transformation[k], a.per_transformation[perm[k] - 1], 1e-12);
}

TEST(Dcl, NonNegative) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto terms = dcl_terms(pack({random_views(4, 3, 500 + s)}), 0.05 + 0.1 * static_cast<double>(s % 7));
    for (double t : terms.data()) EXPECT_GE(t, 0.0);
  }
}

TEST(Dcl, RejectsSingleTransformation) {
  EXPECT_THROW(dcl_terms(pack({random_views(2, 3, 1)}), 1.0), DimensionError);
  DclConfig cfg{0.1, 1};
  EXPECT_THROW(cfg.validate(), ConfigError);
  DclConfig bad_tau{0.0, 3};
  EXPECT_THROW(bad_tau.validate(), ConfigError);
}

TEST(Dcl, EmbeddingGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto z = random_tensor({2, 4, 5}, 600 + s);
    const double err = grad_check([](const Tensor& t) { return dcl_from_embeddings(t, 0.5); }, z);
    EXPECT_LT(err, 1e-6);
  }
}

TEST(Dcl, ParameterGradientsMatchFiniteDifferences) {
  // Tiny tabular model; perturb each parameter tensor in turn.
  EncoderNet enc(mlp_encoder_spec(4, 3, 2));
  auto stack = TransformStack::mlp(2, 4, Parametrization::residual);
  init_params(enc, 1);
  init_params(stack, 2);
  const auto x = random_tensor({3, 4}, 700);
  const DclConfig cfg{0.5, 2};
  auto check_param = [&](auto& net, std::size_t i) {
    const Tensor original = net.parameters()[i];
    auto f = [&](const Tensor& p) {
      net.parameters()[i] = p;
      auto out = dcl_loss(enc, stack, x, cfg);
      net.parameters()[i] = original;
      return out;
    };
    const double err = grad_check(f, original.detach());
    EXPECT_LT(err, 1e-4);
  };
  for (std::size_t i = 0; i < enc.parameters().size(); ++i) check_param(enc, i);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < stack.mask(k).parameters().size(); ++i) check_param(stack.mask(k), i);
}

TEST(Dcl, ConstantEdgeGradientDoesNotVanish) {
  for (std::size_t K : {3u, 12u})
    for (double C : {1.0, 5.0, 20.0}) {
      auto z0 = random_views(1, K, 800 + K)[0];
      std::vector<Vec> z{z0};
      for (std::size_t k = 0; k < K; ++k) {
        Vec e(K, 0.0);
        e[k] = C;
        z.push_back(e);
      }
      auto t = pack({z}).detach(true);
      backward(dcl_from_embeddings(t, 1.0));
      double norm = 0;
      for (double g : t.grad()) norm += g * g;
      EXPECT_GT(std::sqrt(norm), 1e-6);
    }
}

TEST(AnomalyScore, IdentityTransformsSplitEvenly) {
  // Feed-forward masks at zero weights would collapse; a residual stack at
  // zero weights is the identity.
  EncoderNet enc(mlp_encoder_spec(4, 3, 2));
  init_params(enc, 3);
  auto stack = TransformStack::mlp(2, 4, Parametrization::residual);
  auto s = anomaly_score(enc, stack, random_tensor({4}, 1), DclConfig{0.1, 2});
  EXPECT_NEAR(s.total, 2 * std::log(2.0), 1e-9);
  ASSERT_EQ(s.per_transformation.size(), 2u);
  EXPECT_NEAR(s.per_transformation[0], std::log(2.0), 1e-9);
  EXPECT_NEAR(s.per_transformation[1], std::log(2.0), 1e-9);
}

TEST(AnomalyScore, DeterministicAndBatchIndependent) {
  EncoderNet enc(default_encoder_spec("rs", {6, 30}));
  auto stack = TransformStack::conv(4, 6, Parametrization::multiplicative);
  init_params(enc, 5);
  init_params(stack, 6);
  const DclConfig cfg{0.1, 4};
  auto batch = random_tensor({3, 6, 30}, 900);
  auto scores = anomaly_scores(enc, stack, batch, cfg);
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor x({6, 30}, std::vector<double>(batch.data().begin() + b * 180, batch.data().begin() + (b + 1) * 180));
    auto a = anomaly_score(enc, stack, x, cfg), a2 = anomaly_score(enc, stack, x, cfg);
    EXPECT_EQ(a, a2);
    EXPECT_NEAR(a.total, scores[b].total, 1e-10);
    EXPECT_LT(std::abs(a.total - dcl_loss(enc, stack, x, cfg).item()), 1e-12);
    double sum_terms = 0;
    for (double t : a.per_transformation) {
      EXPECT_GE(t, 0.0);
      sum_terms += t;
    }
    EXPECT_NEAR(sum_terms, a.total, 1e-9);
  }
}

TEST(AnomalyScore, RejectsMismatchedK) {
  EncoderNet enc(mlp_encoder_spec(4, 3, 2));
  auto stack = TransformStack::mlp(3, 4, Parametrization::residual);
  EXPECT_THROW(anomaly_score(enc, stack, random_tensor({4}, 1), DclConfig{0.1, 2}), ConfigError);
}

TEST(TransformationPrediction, IdenticalLogitsGiveKLogK) {
  const std::size_t K = 5;
  auto logits = Tensor::full({2, K, K}, 0.7);
  auto terms = tp_terms_from_logits(logits);
  for (std::size_t b = 0; b < 2; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < K; ++k) s += terms.at(b * K + k);
    EXPECT_NEAR(s, K * std::log(static_cast<double>(K)), 1e-12);
  }
}

TEST(TransformationPrediction, ConstantEdgeClosedForm) {
  for (std::size_t K : {2u, 5u, 12u})
    for (double C : {0.0, 1.0, 5.0, 20.0}) {
      std::vector<double> v(K * K, 0.0);
      for (std::size_t k = 0; k < K; ++k) v[k * K + k] = C;
      double loss = 0;
      const auto terms = tp_terms_from_logits(Tensor({1, K, K}, v));
      for (double t : terms.data()) loss += t;
      const double closed = static_cast<double>(K) * std::log1p((K - 1.0) * std::exp(-C));
      EXPECT_NEAR(loss, closed, 1e-12);
      // equivalent form -KC + K log(e^C + K - 1)
      EXPECT_NEAR(closed, -static_cast<double>(K) * C + K * std::log(std::exp(C) + K - 1.0), 1e-9);
    }
  std::vector<double> v(144, 0.0);
  for (std::size_t k = 0; k < 12; ++k) v[k * 12 + k] = 20.0;
  double loss = 0;
  const auto terms = tp_terms_from_logits(Tensor({1, 12, 12}, v));
      for (double t : terms.data()) loss += t;
  EXPECT_LT(loss, 3e-7);
}

TEST(TransformationPrediction, DecreasesInC) {
  for (std::size_t K = 2; K <= 16; ++K) {
    double prev = INFINITY;
    for (double C = 0; C <= 20; C += 0.5) {
      std::vector<double> v(K * K, 0.0);
      for (std::size_t k = 0; k < K; ++k) v[k * K + k] = C;
      double loss = 0;
      const auto terms = tp_terms_from_logits(Tensor({1, K, K}, v));
      for (double t : terms.data()) loss += t;
      EXPECT_LT(loss, prev);
      prev = loss;
    }
  }
}

TEST(TransformationPrediction, ClassifierDimensionMustEqualK) {
  EncoderNet classifier(conv_encoder_spec(2, 8, 4, {8}, 4, 5));
  EXPECT_THROW(tp_loss(classifier, FixedTransforms{}, random_tensor({2, 2, 8}, 1), 12), DimensionError);
}

TEST(TransformationPrediction, FixedViewsEndToEnd) {
  EncoderNet classifier(conv_encoder_spec(2, 8, 4, {8}, 4, 12));
  init_params(classifier, 3);
  auto x = random_tensor({3, 2, 8}, 2);
  const double loss = tp_loss(classifier, FixedTransforms{}, x, 12).item();
  EXPECT_GE(loss, 0.0);
  auto scores = tp_scores(classifier, FixedTransforms{}, x, 12);
  double mean = 0;
  for (const auto& s : scores) mean += s.total / 3.0;
  EXPECT_NEAR(loss, mean, 1e-10);
}

TEST(Simclr, SingletonIsZero) {
  auto u = random_tensor({1, 4}, 1), v = random_tensor({1, 4}, 2);
  EXPECT_NEAR(simclr_from_embeddings(u, v, 0.5).item(), 0.0, 1e-12);
}

TEST(Simclr, OrthogonalPairsClosedForm) {
  Tensor u({2, 2}, {1, 0, 0, 1});
  const double total = simclr_from_embeddings(u, u, 1.0).item();
  const double term = -1.0 + std::log(std::numbers::e + 2.0);
  EXPECT_NEAR(term, 0.551, 5e-4);
  EXPECT_NEAR(total, 4 * term, 1e-12);
  EXPECT_NEAR(total, 2.205, 1e-3);
}

TEST(Simclr, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 8; ++s) {
    auto u = random_views(4, 5, 1000 + s), v = random_views(4, 5, 2000 + s);
    EXPECT_NEAR(simclr_from_embeddings(rows(u), rows(v), 0.8).item(), simclr_oracle(u, v, 0.8), 1e-10);
  }
}

TEST(Simclr, IdentityTransformsReachAlignment) {
  EncoderNet enc(mlp_encoder_spec(4, 3, 2));
  init_params(enc, 4);
  auto stack = TransformStack::mlp(2, 4, Parametrization::residual);  // zero masks: both views = x
  auto x = random_tensor({3, 4}, 5);
  auto z = enc.forward(x);
  EXPECT_NEAR(simclr_loss(enc, stack, x, {0, 1}, 0.5).item(), simclr_from_embeddings(z, z, 0.5).item(), 1e-12);
}

TEST(Simclr, GradientMatchesFiniteDifferences) {
  auto v = random_tensor({3, 4}, 9);
  auto u = random_tensor({3, 4}, 10);
  EXPECT_LT(grad_check([&](const Tensor& t) { return simclr_from_embeddings(t, v, 0.5); }, u), 1e-6);
}

TEST(Simclr, PairsAreDistinctAndCoverAll) {
  CounterRng rng(1, 1);
  std::vector<int> seen(5 * 5, 0);
  for (int i = 0; i < 2000; ++i) {
    auto [a, b] = sample_transformation_pair(5, rng);
    ASSERT_NE(a, b);
    ASSERT_LT(a, 5u);
    ASSERT_LT(b, 5u);
    seen[a * 5 + b]++;
  }
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b)
      if (a != b) EXPECT_GT(seen[a * 5 + b], 40);
  EXPECT_THROW(sample_transformation_pair(1, rng), ConfigError);
}
