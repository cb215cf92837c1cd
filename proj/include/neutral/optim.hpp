#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "neutral/tensor.hpp"

namespace neutral {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::size_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(std::span<const Tensor> params, const AdamOptions& opt = {}) {
    AdamState s;
    s.learning_rate = opt.learning_rate;
    s.beta1 = opt.beta1;
    s.beta2 = opt.beta2;
    s.epsilon = opt.epsilon;
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.size(), 0.0);
      s.second_moment.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

// One bias-corrected Adam update. Returns fresh leaf tensors (requiring
// gradients) in place of `params`; `grads` may be empty tensors for
// parameters that received no gradient.
inline std::vector<Tensor> adam_step(std::span<const Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size())
    throw DimensionError("adam_step: parameter, gradient and moment counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].defined() && grads[i].shape() != params[i].shape())
      throw DimensionError("adam_step: gradient shape " + to_string(grads[i].shape()) + " for parameter " +
                           to_string(params[i].shape()));
    if (state.first_moment[i].size() != params[i].size() || state.second_moment[i].size() != params[i].size())
      throw DimensionError("adam_step: moment size mismatch for parameter " + std::to_string(i));
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  std::vector<Tensor> updated;
  updated.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    std::vector<double> next(p.begin(), p.end());
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const bool has = grads[i].defined();
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double g = has ? grads[i].at(j) : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      next[j] -= state.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.epsilon);
    }
    updated.emplace_back(params[i].shape(), std::move(next), true);
  }
  return updated;
}

}  // namespace neutral
