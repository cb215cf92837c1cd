#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "neutral/tensor.hpp"

namespace neutral {

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a scalar-valued graph builder evaluated at `point`.
inline double grad_check(const std::function<Tensor(const Tensor&)>& function, const Tensor& point, double h = 1e-5) {
  Tensor leaf = point.detach(true);
  Tensor out = function(leaf);
  if (out.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
  backward(out);
  const Tensor analytic = leaf.grad_tensor();

  std::vector<double> x = point.to_vector();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = function(Tensor(point.shape(), x)).item();
    x[i] = orig - h;
    const double fm = function(Tensor(point.shape(), x)).item();
    x[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic.at(i);
    worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

}  // namespace neutral
