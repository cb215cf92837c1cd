#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "neutral/losses.hpp"

namespace neutral {

// One closed-form check of a loss at a hand-built embedding configuration.
// The checks inject embeddings straight into the loss formulas; no network
// is involved.
struct EdgeCaseReport {
  std::string loss_name;  // DCL, L_P, L_C
  std::string edge_case;  // constant, identity, counterexample
  std::size_t K = 0;      // transformations (minibatch size N for L_C)
  double C = 0.0;
  double tau = 1.0;
  double analytic_value = 0.0;
  double numeric_value = 0.0;
  double gradient_norm = 0.0;
  std::size_t resamples = 0;
  bool passed = false;
  std::string note;

  bool agrees(double tol = 1e-8) const {
    return !std::isfinite(analytic_value) || std::abs(analytic_value - numeric_value) < tol;
  }
};

inline constexpr double kGradientFloor = 1e-6;

namespace detail {

inline double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline Tensor one_hot_logits(std::size_t K, double C) {
  std::vector<double> v(K * K, 0.0);
  for (std::size_t k = 0; k < K; ++k) v[k * K + k] = C;
  return Tensor({1, K, K}, std::move(v));
}

inline double lp_value(std::size_t K, double C) {
  return sum(tp_terms_from_logits(one_hot_logits(K, C))).item();
}

}  // namespace detail

// L_P with classifier outputs f(T_k(x)) = C c_k. Closed form
// K log(1 + (K-1) e^{-C}), strictly decreasing in C towards 0.
inline EdgeCaseReport lp_constant_edge(std::size_t K, double C) {
  if (K < 2) throw ConfigError("lp_constant_edge needs K >= 2");
  if (!(C >= 0.0)) throw ConfigError("lp_constant_edge needs C >= 0");
  EdgeCaseReport r{"L_P", "constant", K, C, 1.0};
  r.analytic_value = static_cast<double>(K) * std::log1p((static_cast<double>(K) - 1.0) * std::exp(-C));
  auto logits = detail::one_hot_logits(K, C).detach(true);
  auto loss = sum(tp_terms_from_logits(logits));
  backward(loss);
  r.numeric_value = loss.item();
  r.gradient_norm = detail::l2(logits.grad());
  const bool decreasing = detail::lp_value(K, C + 1.0) < r.numeric_value;
  r.passed = r.agrees() && decreasing;
  if (!decreasing) r.note = "not decreasing at C+1";
  return r;
}

// L_C with both transformations the identity and an encoder mapping the N
// samples to mutually orthogonal unit vectors. Every positive pair is
// perfectly aligned, which is the alignment optimum for this minibatch:
//   2N (-1/tau + log(e^{1/tau} + 2(N-1))).
inline EdgeCaseReport lc_identity_edge(std::size_t N, double tau) {
  if (N < 1) throw ConfigError("lc_identity_edge needs N >= 1");
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  EdgeCaseReport r{"L_C", "identity", N, 0.0, tau};
  const double n = static_cast<double>(N);
  r.analytic_value = 2.0 * n * (-1.0 / tau + std::log(std::exp(1.0 / tau) + 2.0 * (n - 1.0)));
  std::vector<double> eye(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) eye[i * N + i] = 1.0;
  auto u = Tensor({N, N}, eye, true);
  auto v = u.detach();  // T_1 = T_2 = identity: the second view is the same embedding
  auto loss = simclr_from_embeddings(u, v, tau);
  backward(loss);
  r.numeric_value = loss.item();
  r.gradient_norm = detail::l2(u.grad());
  r.passed = r.agrees();
  return r;
}

// Three DCL checks at (K, C, tau):
//   identity: every view embeds onto z_0, value K log K;
//   counterexample: K = 2, z_1 = -z_2, both orthogonal to z_0, value
//     2 log(1 + e^{-1/tau}) (0.627 at tau = 1), below the identity value;
//   constant: z_k = C c_k with random unit z_0 in R^K, value
//     sum_k log(1 + (K-1) e^{-z0_k / tau}); the gradient with respect to the
//     embeddings must stay above kGradientFloor for every sampled z_0.
// A z_0 whose gradient falls below the floor is resampled (up to
// max_resamples in total) and counted in the report.
inline std::vector<EdgeCaseReport> dcl_edge_suite(std::size_t K, double C, double tau, std::uint64_t seed = 0,
                                                  std::size_t z0_samples = 20, std::size_t max_resamples = 100) {
  if (K < 2) throw ConfigError("dcl_edge_suite needs K >= 2");
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  CounterRng rng(seed, 0xd0c1);
  std::vector<EdgeCaseReport> out;

  auto unit_vector = [&rng](std::size_t d) {
    std::vector<double> v(d);
    double n = 0.0;
    while (n < 1e-3) {
      for (auto& x : v) x = rng.normal();
      n = detail::l2(v);
    }
    for (auto& x : v) x /= n;
    return v;
  };
  auto evaluate = [tau](std::size_t n_views, std::size_t dim, std::vector<double> flat, double& grad_norm) {
    auto z = Tensor({1, n_views, dim}, std::move(flat), true);
    auto loss = dcl_from_embeddings(z, tau);
    backward(loss);
    grad_norm = detail::l2(z.grad());
    return loss.item();
  };

  {
    EdgeCaseReport r{"DCL", "identity", K, C, tau};
    auto z0 = unit_vector(K);
    std::vector<double> flat;
    for (std::size_t k = 0; k <= K; ++k) flat.insert(flat.end(), z0.begin(), z0.end());
    r.analytic_value = static_cast<double>(K) * std::log(static_cast<double>(K));
    r.numeric_value = evaluate(K + 1, K, std::move(flat), r.gradient_norm);
    r.passed = r.agrees();
    out.push_back(r);
  }

  {
    EdgeCaseReport r{"DCL", "counterexample", 2, C, tau};
    r.analytic_value = 2.0 * std::log1p(std::exp(-1.0 / tau));
    r.numeric_value = evaluate(3, 2, {1, 0, 0, 1, 0, -1}, r.gradient_norm);
    r.passed = r.agrees() && r.numeric_value < 2.0 * std::log(2.0);
    out.push_back(r);
  }

  {
    EdgeCaseReport r{"DCL", "constant", K, C, tau};
    r.gradient_norm = std::numeric_limits<double>::infinity();
    bool all_agree = true;
    for (std::size_t s = 0; s < z0_samples; ++s) {
      while (true) {
        auto z0 = unit_vector(K);
        std::vector<double> flat(z0);
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t d = 0; d < K; ++d) flat.push_back(k == d ? C : 0.0);
        double analytic = 0.0;
        // Zero embeddings have no direction; their cosine is taken as 0.
        for (std::size_t k = 0; k < K; ++k)
          analytic += std::log1p((static_cast<double>(K) - 1.0) * std::exp(-(C > 0.0 ? z0[k] : 0.0) / tau));
        double g = 0.0;
        const double numeric = evaluate(K + 1, K, std::move(flat), g);
        if (g <= kGradientFloor && C > 0.0 && r.resamples < max_resamples) {
          ++r.resamples;
          continue;
        }
        if (s == 0) {
          r.analytic_value = analytic;
          r.numeric_value = numeric;
        }
        all_agree = all_agree && std::abs(analytic - numeric) < 1e-8;
        r.gradient_norm = std::min(r.gradient_norm, g);
        break;
      }
    }
    r.passed = all_agree && (C == 0.0 || r.gradient_norm > kGradientFloor);
    if (!all_agree) r.note = "closed form disagrees for some sampled z0";
    if (C == 0.0) r.note = "C = 0: all views are the zero vector, cosine taken as 0";
    if (r.resamples) r.note += (r.note.empty() ? "" : "; ") + std::to_string(r.resamples) + " z0 resampled";
    out.push_back(r);
  }
  return out;
}

struct TheoryGrid {
  std::vector<std::size_t> K{2, 3, 4, 12};
  std::vector<double> C{0.0, 1.0, 5.0, 20.0};
  std::vector<double> tau{0.1, 1.0};
};

// Every edge case over the grid; L_C uses a minibatch of N = K samples.
inline std::vector<EdgeCaseReport> run_theory_grid(const TheoryGrid& grid, std::uint64_t seed = 0) {
  std::vector<EdgeCaseReport> out;
  for (auto K : grid.K)
    for (auto C : grid.C) out.push_back(lp_constant_edge(K, C));
  for (auto K : grid.K)
    for (auto tau : grid.tau) out.push_back(lc_identity_edge(K, tau));
  for (auto K : grid.K)
    for (auto C : grid.C)
      for (auto tau : grid.tau)
        for (auto& r : dcl_edge_suite(K, C, tau, seed)) out.push_back(std::move(r));
  return out;
}

}  // namespace neutral
