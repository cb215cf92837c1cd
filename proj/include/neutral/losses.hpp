#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "neutral/nn.hpp"

namespace neutral {

struct DclConfig {
  double temperature = 0.1;
  std::size_t K = 0;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (K < 2) throw ConfigError("K >= 2 transformations are required (with K = 1 the contrastive denominator is empty)");
  }
};

// Per-sample anomaly score and its split over the K transformations.
struct ScoreBreakdown {
  double total = 0.0;
  std::vector<double> per_transformation;

  bool operator==(const ScoreBreakdown&) const = default;
};

// Anything that produces K views of a batch: TransformStack, FixedTransforms.
template <class V>
concept ViewSource = requires(const V& v, const Tensor& x) {
  { v.size() } -> std::convertible_to<std::size_t>;
  { v.apply_all(x) } -> std::same_as<std::vector<Tensor>>;
};

// h(z_a, z_b) = exp(sim(z_a, z_b) / tau).
inline double score_h(std::span<const double> za, std::span<const double> zb, double tau) {
  if (za.size() != zb.size()) throw DimensionError("score_h: embedding dimensions differ");
  const auto s = cosine_similarity(Tensor::vector({za.begin(), za.end()}), Tensor::vector({zb.begin(), zb.end()}));
  return std::exp(s.item() / tau);
}

namespace detail {

inline Shape with_leading(std::size_t n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

// Constant [rows x n x n] tensor: -inf on each diagonal, 0 elsewhere.
inline Tensor diagonal_mask(std::size_t rows, std::size_t n) {
  std::vector<double> m(rows * n * n, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < n; ++i) m[(r * n + i) * n + i] = -std::numeric_limits<double>::infinity();
  return Tensor(Shape{rows, n, n}, std::move(m));
}

// Flat indices of column `col` in rows 1..n-1 of each [n x n] block.
inline std::vector<std::size_t> column_below_first(std::size_t rows, std::size_t n, std::size_t col) {
  std::vector<std::size_t> idx;
  idx.reserve(rows * (n - 1));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 1; k < n; ++k) idx.push_back((r * n + k) * n + col);
  return idx;
}

}  // namespace detail

// Interleaves each sample with its views and encodes them in one pass.
// batch: [B x sample...]; returns embeddings [B x (K+1) x E], index 0 being
// the untransformed sample.
template <ViewSource V>
Tensor encode_views(const EncoderNet& encoder, const V& views, const Tensor& batch) {
  const Shape sample = encoder.input_shape();
  const Tensor x = batch.shape() == sample ? reshape(batch, detail::with_leading(1, sample)) : batch;
  const std::size_t B = x.dim(0), K = views.size(), S = numel(sample);
  std::vector<Tensor> all{x};
  for (auto& v : views.apply_all(x)) all.push_back(std::move(v));
  auto stacked = reshape(stack(all), {K + 1, B, S});
  auto per_sample = reshape(transpose01(stacked), detail::with_leading(B * (K + 1), sample));
  auto z = encoder.forward(per_sample);
  return reshape(z, {B, K + 1, encoder.embedding_dim()});
}

// DCL terms from embeddings z [B x (K+1) x E] (index 0 = original):
//   term_k = -log h(x_k, x) / (h(x_k, x) + sum_{l != k} h(x_k, x_l)),
// evaluated in log space. Returns [B x K].
inline Tensor dcl_terms(const Tensor& embeddings, double tau) {
  if (embeddings.rank() != 3 || embeddings.dim(1) < 3)
    throw DimensionError("dcl needs embeddings [B x (K+1) x E] with K >= 2, got " + to_string(embeddings.shape()));
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  const std::size_t B = embeddings.dim(0), n = embeddings.dim(1), K = n - 1;
  auto zn = normalize_last(embeddings);
  auto logits = scale(batched_matmul_nt(zn, zn), 1.0 / tau);              // [B x n x n]
  auto masked = add(logits, detail::diagonal_mask(B, n));                  // drop l == k
  auto lse = logsumexp_last(masked);                                       // [B x n]
  std::vector<std::size_t> rows_idx;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 1; k < n; ++k) rows_idx.push_back(b * n + k);
  auto denom = take(lse, std::move(rows_idx), {B, K});
  auto numer = take(logits, detail::column_below_first(B, n, 0), {B, K});  // sim(z_k, z_0) / tau
  return sub(denom, numer);
}

// Mean over the batch of the per-sample DCL from precomputed embeddings.
inline Tensor dcl_from_embeddings(const Tensor& embeddings, double tau) {
  const auto terms = dcl_terms(embeddings, tau);
  return scale(sum(terms), 1.0 / static_cast<double>(embeddings.dim(0)));
}

inline std::vector<ScoreBreakdown> breakdowns_from_terms(const Tensor& terms) {
  const std::size_t B = terms.dim(0), K = terms.dim(1);
  std::vector<ScoreBreakdown> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b].per_transformation.assign(terms.data().begin() + b * K, terms.data().begin() + (b + 1) * K);
    for (double v : out[b].per_transformation) out[b].total += v;
  }
  return out;
}

inline void check_stack(const TransformStack& stack, const DclConfig& cfg) {
  cfg.validate();
  if (stack.size() != cfg.K)
    throw ConfigError("stack has " + std::to_string(stack.size()) + " transformations, config says K = " + std::to_string(cfg.K));
}

// Deterministic contrastive loss averaged over the batch.
inline Tensor dcl_loss(const EncoderNet& encoder, const TransformStack& stack, const Tensor& batch, const DclConfig& cfg) {
  check_stack(stack, cfg);
  return dcl_from_embeddings(encode_views(encoder, stack, batch), cfg.temperature);
}

// Scores for every sample of a batch. Each sample's score depends only on
// itself and the parameters.
inline std::vector<ScoreBreakdown> anomaly_scores(const EncoderNet& encoder, const TransformStack& stack,
                                                  const Tensor& batch, const DclConfig& cfg) {
  check_stack(stack, cfg);
  return breakdowns_from_terms(dcl_terms(encode_views(encoder, stack, batch), cfg.temperature));
}

inline ScoreBreakdown anomaly_score(const EncoderNet& encoder, const TransformStack& stack, const Tensor& x,
                                    const DclConfig& cfg) {
  if (x.shape() != encoder.input_shape())
    throw DimensionError("anomaly_score expects one sample of shape " + to_string(encoder.input_shape()));
  return anomaly_scores(encoder, stack, x, cfg).front();
}

// Transformation-prediction cross-entropy from classifier logits
// [B x K(views) x K(classes)]; returns per-view terms [B x K].
inline Tensor tp_terms_from_logits(const Tensor& logits) {
  if (logits.rank() != 3 || logits.dim(1) != logits.dim(2))
    throw DimensionError("transformation prediction needs logits [B x K x K], got " + to_string(logits.shape()));
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  std::vector<std::size_t> diag;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) diag.push_back((b * K + k) * K + k);
  return sub(logsumexp_last(logits), take(logits, std::move(diag), {B, K}));
}

// Logits of a K-way classifier for every view: [B x K x K].
template <ViewSource V>
Tensor tp_logits(const EncoderNet& classifier, const V& views, const Tensor& batch, std::size_t K) {
  if (classifier.embedding_dim() != K)
    throw DimensionError("classifier outputs " + std::to_string(classifier.embedding_dim()) + " logits, expected K = " +
                         std::to_string(K));
  if (views.size() != K) throw ConfigError("view source size differs from K");
  auto z = encode_views(classifier, views, batch);  // [B x (K+1) x K]
  const std::size_t B = z.dim(0);
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 1; k <= K; ++k)
      for (std::size_t c = 0; c < K; ++c) idx.push_back((b * (K + 1) + k) * K + c);
  return take(z, std::move(idx), {B, K, K});
}

// Softmax transformation-prediction loss, mean over the batch of the
// per-sample sum over views.
template <ViewSource V>
Tensor tp_loss(const EncoderNet& classifier, const V& views, const Tensor& batch, std::size_t K) {
  auto terms = tp_terms_from_logits(tp_logits(classifier, views, batch, K));
  return scale(sum(terms), 1.0 / static_cast<double>(terms.dim(0)));
}

template <ViewSource V>
std::vector<ScoreBreakdown> tp_scores(const EncoderNet& classifier, const V& views, const Tensor& batch, std::size_t K) {
  return breakdowns_from_terms(tp_terms_from_logits(tp_logits(classifier, views, batch, K)));
}

// Minibatch contrastive loss from the two views' embeddings u, v [N x E]:
//   sum_i L(u_i, v_i) + L(v_i, u_i),
//   L(a_i, b_i) = -log h(a_i, b_i)
//                 + log[ sum_j h(a_i, b_j) + sum_{j != i} h(a_i, a_j) ].
inline Tensor simclr_from_embeddings(const Tensor& u, const Tensor& v, double tau) {
  if (u.rank() != 2 || u.shape() != v.shape())
    throw DimensionError("simclr needs two [N x E] embedding matrices");
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  const std::size_t N = u.dim(0), E = u.dim(1);
  auto un = reshape(normalize_last(u), {1, N, E});
  auto vn = reshape(normalize_last(v), {1, N, E});
  auto direction = [&](const Tensor& a, const Tensor& b) {
    auto cross = scale(batched_matmul_nt(a, b), 1.0 / tau);                          // [1 x N x N]
    auto self = add(scale(batched_matmul_nt(a, a), 1.0 / tau), detail::diagonal_mask(1, N));
    auto lse = logsumexp_last(concat_last(cross, self));                              // [1 x N]
    std::vector<std::size_t> diag;
    for (std::size_t i = 0; i < N; ++i) diag.push_back(i * N + i);
    auto positive = take(cross, std::move(diag), {1, N});
    return sum(sub(lse, positive));
  };
  return add(direction(un, vn), direction(vn, un));
}

// Two distinct transformation indices drawn uniformly from [0, K).
inline std::pair<std::size_t, std::size_t> sample_transformation_pair(std::size_t K, CounterRng& rng) {
  if (K < 2) throw ConfigError("need K >= 2 to draw two distinct transformations");
  const std::size_t a = rng() % K;
  std::size_t b = rng() % (K - 1);
  if (b >= a) ++b;
  return {a, b};
}

inline Tensor simclr_loss(const EncoderNet& encoder, const TransformStack& stack, const Tensor& minibatch,
                          std::pair<std::size_t, std::size_t> pair, double tau) {
  const Shape sample = encoder.input_shape();
  const Tensor x = minibatch.shape() == sample ? reshape(minibatch, detail::with_leading(1, sample)) : minibatch;
  auto u = encoder.forward(stack.transform(x, pair.first));
  auto v = encoder.forward(stack.transform(x, pair.second));
  return simclr_from_embeddings(u, v, tau);
}

}  // namespace neutral
