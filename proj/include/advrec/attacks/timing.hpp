#ifndef ADVREC_ATTACKS_TIMING_HPP
#define ADVREC_ATTACKS_TIMING_HPP

#include <vector>

#include "advrec/core/linalg.hpp"
#include "advrec/core/rng.hpp"

namespace advrec {

struct TimingMask {
  std::vector<bool> c;
  double realized_freq = 0.0;

  static TimingMask from_bits(std::vector<bool> bits) {
    TimingMask m{std::move(bits), 0.0};
    std::size_t on = 0;
    for (bool b : m.c) on += b ? 1 : 0;
    m.realized_freq = m.c.empty() ? 0.0 : static_cast<double>(on) / static_cast<double>(m.c.size());
    return m;
  }
};

/// p₀ − p₁ for the two largest probabilities.
inline double top2_gap(const Vec& probs) {
  require(probs.dim() >= 2, ErrorKind::config, "strategic timing needs at least two items");
  double p0 = -1.0, p1 = -1.0;
  for (double p : probs) {
    if (p > p0) {
      p1 = p0;
      p0 = p;
    } else if (p > p1) {
      p1 = p;
    }
  }
  return p0 - p1;
}

/// c_t = (p₀ − p₁) > threshold
inline bool strategic_bit(const Vec& probs, double threshold) { return top2_gap(probs) > threshold; }

inline TimingMask strategic_mask(const std::vector<Vec>& probs_seq, double threshold) {
  std::vector<bool> bits;
  bits.reserve(probs_seq.size());
  for (const auto& p : probs_seq) bits.push_back(strategic_bit(p, threshold));
  return TimingMask::from_bits(std::move(bits));
}

/// i.i.d. Bernoulli(p_freq) bits.
inline TimingMask random_mask(std::size_t horizon, double p_freq, Rng& rng) {
  require(p_freq >= 0.0 && p_freq <= 1.0, ErrorKind::config, "p_freq must lie in [0, 1]");
  std::vector<bool> bits(horizon);
  for (std::size_t t = 0; t < horizon; ++t) bits[t] = rng.bernoulli(p_freq);
  return TimingMask::from_bits(std::move(bits));
}

}  // namespace advrec

#endif  // ADVREC_ATTACKS_TIMING_HPP
