#ifndef ADVREC_CORE_RNG_HPP
#define ADVREC_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace advrec {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream key from a seed and an ordered tuple of ids.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t k = splitmix64(seed);
  for (std::uint64_t id : ids) k = splitmix64(k ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return k;
}

// Stream tags. Keep these stable: they are part of the reproducibility contract.
namespace streams {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t episode = 2;
inline constexpr std::uint64_t reward_noise = 3;
inline constexpr std::uint64_t policy_init = 4;
inline constexpr std::uint64_t critic_init = 5;
inline constexpr std::uint64_t training = 6;
inline constexpr std::uint64_t attack = 7;
inline constexpr std::uint64_t detector_init = 8;
inline constexpr std::uint64_t detector_train = 9;
inline constexpr std::uint64_t mmd = 10;
inline constexpr std::uint64_t split = 11;
inline constexpr std::uint64_t sampling = 12;
}  // namespace streams

/// mt19937_64 with distribution helpers written out explicitly so values do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box–Muller (no cached second value).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Draws index i with probability weights[i] / Σ weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  /// Fisher–Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace advrec

#endif  // ADVREC_CORE_RNG_HPP
