#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "neutral/data.hpp"
#include "neutral/rng.hpp"
#include "neutral/train.hpp"

namespace neutral {

// Two isotropic 2-D Gaussians: an inlier cluster and an anomaly cluster.
// Both sit away from the origin. The bias-free networks are positively
// homogeneous, so a sample's score depends on its direction only; the
// clusters must therefore differ in angle, not just in radius, and the
// data should be fed without centering (standardize = false).
struct TwoGaussianSpec {
  std::size_t inliers = 400;
  std::size_t anomalies = 100;
  std::array<double, 2> inlier_center{4.0, 4.0};
  std::array<double, 2> anomaly_center{4.0, -4.0};
  double inlier_sigma = 0.5;
  double anomaly_sigma = 0.5;
};

inline TabularDataset make_two_gaussians(const TwoGaussianSpec& spec, std::uint64_t seed) {
  TabularDataset ds;
  ds.name = "synthetic";
  ds.features = 2;
  CounterRng rng(seed, 0x2d6a);
  auto draw = [&](const std::array<double, 2>& c, double sigma, int label) {
    ds.rows.push_back({rng.normal(c[0], sigma), rng.normal(c[1], sigma)});
    ds.labels.push_back(label);
  };
  for (std::size_t i = 0; i < spec.inliers; ++i) draw(spec.inlier_center, spec.inlier_sigma, 0);
  for (std::size_t i = 0; i < spec.anomalies; ++i) draw(spec.anomaly_center, spec.anomaly_sigma, 1);
  return ds;
}

// Small multivariate series: class c is a sine of frequency c + 1 cycles
// per window with random phase and amplitude plus noise. Half of each
// class lands in the test partition.
inline TimeSeriesDataset make_toy_series(std::size_t classes, std::size_t per_class, std::size_t channels,
                                         std::size_t length, std::uint64_t seed) {
  TimeSeriesDataset ds;
  ds.name = "toy";
  ds.channels = channels;
  ds.length = length;
  CounterRng rng(seed, 0x70f);
  for (std::size_t c = 0; c < classes; ++c) {
    ds.class_names.push_back("c" + std::to_string(c));
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> x(channels * length);
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const double phase = rng.uniform() * 2.0 * std::numbers::pi;
        const double amp = 1.0 + 0.2 * rng.normal();
        for (std::size_t t = 0; t < length; ++t)
          x[ch * length + t] =
              amp * std::sin(2.0 * std::numbers::pi * static_cast<double>((c + 1) * t) / static_cast<double>(length) +
                             phase) +
              0.1 * rng.normal();
      }
      ds.samples.push_back(std::move(x));
      ds.labels.push_back(c);
      ds.test_partition.push_back(i % 2 == 1);
    }
  }
  return ds;
}

// Training setup for the toy benchmark. The 200 training points give four
// steps per epoch, so the default 1e-4 step size barely moves the weights;
// raw coordinates are kept for the reason above.
inline TrainConfig synthetic_benchmark_config() {
  TrainConfig c;
  c.epochs = 50;
  c.learning_rate = 1e-3;
  c.standardize = false;
  return c;
}

}  // namespace neutral
