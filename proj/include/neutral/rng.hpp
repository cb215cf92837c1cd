#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace neutral {

// Counter-based 64-bit generator: the n-th output is a pure function of
// (key, n), so streams can be forked and replayed without shared state.
// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (counter_++) * kGolden); }

  // Independent generator derived from this one's key; does not advance *this.
  CounterRng fork(std::uint64_t stream) const {
    CounterRng r;
    r.key_ = mix(key_ ^ mix(stream + kGolden));
    return r;
  }

  std::uint64_t counter() const { return counter_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(*this); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(*this);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace neutral
