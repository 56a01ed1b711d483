#ifndef GSP_RANDOM_HPP
#define GSP_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace gsp {

// Seeded random source used by every stochastic routine in the library.
//
// All draws are derived from raw mt19937_64 output through the helpers
// below instead of <random> distribution objects, whose output is
// implementation-defined.  Fixed seed => bit-identical streams.
class RandomEngine {
 public:
  explicit RandomEngine(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi], inclusive.  Unbiased via rejection.
  int uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = gen_();
    } while (draw >= limit);
    return lo + static_cast<int>(draw % span);
  }

  // Unit-exponential draw.
  double exponential() { return -std::log(1.0 - uniform01()); }

  // Uniform point on the probability simplex of dimension k
  // (normalized independent unit exponentials).
  std::vector<double> simplex(int k) {
    if (k <= 0) throw std::invalid_argument("simplex: k must be positive");
    std::vector<double> w(k);
    double total = 0.0;
    for (double& wi : w) {
      wi = exponential();
      total += wi;
    }
    if (total <= 0.0) {  // all draws were exactly zero; fall back to uniform
      for (double& wi : w) wi = 1.0 / k;
      return w;
    }
    for (double& wi : w) wi /= total;
    return w;
  }

  // Index drawn from an unnormalized weight vector.
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: zero total weight");
    double u = uniform01() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
      std::swap(values[i], values[uniform_int(0, i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gsp

#endif  // GSP_RANDOM_HPP
