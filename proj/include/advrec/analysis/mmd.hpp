#ifndef ADVREC_ANALYSIS_MMD_HPP
#define ADVREC_ANALYSIS_MMD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "advrec/core/linalg.hpp"
#include "advrec/core/parallel.hpp"
#include "advrec/core/rng.hpp"

namespace advrec {

struct SampleSet {
  std::string label;
  std::vector<Vec> vectors;

  void validate() const {
    require(!vectors.empty(), ErrorKind::data, "sample set '" + label + "' is empty");
    for (const auto& v : vectors)
      require(v.dim() == vectors.front().dim(), ErrorKind::dimension, "sample set '" + label + "' mixes dimensions");
  }
};

inline double squared_distance(const Vec& x, const Vec& y) {
  require(x.dim() == y.dim(), ErrorKind::dimension, "kernel arguments differ in dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

/// exp(−‖x−y‖² / (2σ²))
inline double rbf_kernel(const Vec& x, const Vec& y, double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::config, "RBF bandwidth must be positive");
  return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

/// Median pairwise distance of the pooled points; 1 when every point
/// coincides (any bandwidth then gives zero discrepancy).
inline double median_bandwidth(const std::vector<const Vec*>& pooled) {
  std::vector<double> d;
  d.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) d.push_back(std::sqrt(squared_distance(*pooled[i], *pooled[j])));
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

/// Biased squared-MMD on two point lists, clamped at 0 and square-rooted.
inline double mmd_biased(const std::vector<const Vec*>& a, const std::vector<const Vec*>& b, double sigma) {
  require(!a.empty() && !b.empty(), ErrorKind::data, "MMD needs nonempty samples");
  auto mean_k = [sigma](const std::vector<const Vec*>& x, const std::vector<const Vec*>& y) {
    double s = 0.0;
    for (auto* p : x)
      for (auto* q : y) s += rbf_kernel(*p, *q, sigma);
    return s / static_cast<double>(x.size() * y.size());
  };
  const double sq = mean_k(a, a) + mean_k(b, b) - 2.0 * mean_k(a, b);
  return std::sqrt(std::max(sq, 0.0));
}

struct MmdParams {
  std::size_t batch_count = 40;
  std::size_t batch_size = 500;
  /// 0 selects the median heuristic per batch.
  double bandwidth = 0.0;
  std::uint64_t seed = 31;

  void validate() const {
    require(batch_count >= 1, ErrorKind::config, "mmd batch_count must be >= 1");
    require(batch_size >= 1, ErrorKind::config, "mmd batch_size must be >= 1");
    require(bandwidth >= 0.0 && std::isfinite(bandwidth), ErrorKind::config, "mmd bandwidth must be >= 0");
  }
};

namespace detail {

inline std::uint64_t label_key(const std::string& label) {
  // FNV-1a; std::hash is not stable across standard libraries.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// n indices without replacement. Keyed by the set's own label so each
/// side's batch is independent of argument order.
inline std::vector<const Vec*> draw_batch(const SampleSet& s, std::size_t n, std::uint64_t seed, std::size_t batch) {
  std::vector<std::size_t> idx(s.vectors.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(stream_key(seed, {streams::mmd, batch, label_key(s.label)}));
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<const Vec*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&s.vectors[idx[i]]);
  return out;
}

}  // namespace detail

/// Average of per-batch MMD over `batch_count` batches.
inline double mmd(const SampleSet& a_in, const SampleSet& b_in, const MmdParams& p, std::size_t jobs = 1) {
  // Label order fixes the summation order, so swapping arguments is bit-exact.
  const bool swap = b_in.label < a_in.label;
  const SampleSet& a = swap ? b_in : a_in;
  const SampleSet& b = swap ? a_in : b_in;
  p.validate();
  a.validate();
  b.validate();
  require(a.vectors.front().dim() == b.vectors.front().dim(), ErrorKind::dimension, "MMD sets differ in dimension");
  const std::size_t n = std::min({p.batch_size, a.vectors.size(), b.vectors.size()});
  std::vector<double> per_batch(p.batch_count);
  parallel_for(p.batch_count, jobs, [&](std::size_t k) {
    auto xa = detail::draw_batch(a, n, p.seed, k);
    auto xb = detail::draw_batch(b, n, p.seed, k);
    double sigma = p.bandwidth;
    if (sigma == 0.0) {
      std::vector<const Vec*> pooled = xa;
      pooled.insert(pooled.end(), xb.begin(), xb.end());
      sigma = median_bandwidth(pooled);
    }
    per_batch[k] = mmd_biased(xa, xb, sigma);
  });
  double total = 0.0;
  for (double v : per_batch) total += v;
  return total / static_cast<double>(p.batch_count);
}

/// Deterministic halves of a set, used as the within-distribution baseline.
inline std::pair<SampleSet, SampleSet> split_halves(const SampleSet& s, std::uint64_t seed) {
  s.validate();
  require(s.vectors.size() >= 2, ErrorKind::data, "self-split needs at least two vectors in '" + s.label + "'");
  std::vector<std::size_t> idx(s.vectors.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(stream_key(seed, {streams::mmd, ~std::uint64_t{0}, detail::label_key(s.label)}));
  rng.shuffle(idx);
  SampleSet h1{s.label + "#1", {}}, h2{s.label + "#2", {}};
  const std::size_t half = idx.size() / 2;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < half ? h1 : h2).vectors.push_back(s.vectors[idx[i]]);
  return {std::move(h1), std::move(h2)};
}

struct MmdPair {
  std::string a;
  std::string b;  // equal to a for the self-split baseline
  double mmd = 0.0;

  friend bool operator==(const MmdPair&, const MmdPair&) = default;
};

struct MmdReport {
  std::vector<MmdPair> pairs;
  std::size_t batch_count = 0;
  std::size_t batch_size = 0;

  /// Symmetric lookup; throws a lookup error for unknown pairs.
  double at(const std::string& a, const std::string& b) const {
    for (const auto& p : pairs)
      if ((p.a == a && p.b == b) || (p.a == b && p.b == a)) return p.mmd;
    fail(ErrorKind::lookup, "no MMD entry for (" + a + ", " + b + ")");
  }

  friend bool operator==(const MmdReport&, const MmdReport&) = default;
};

/// Self-split baseline for every set, then every unordered pair. Each cell
/// compares the first half of one set with the second half of the other,
/// so all cells use the same sample sizes as the baseline.
inline MmdReport mmd_matrix(const std::vector<SampleSet>& sets, const MmdParams& p, std::size_t jobs = 1) {
  require(!sets.empty(), ErrorKind::data, "mmd_matrix needs at least one sample set");
  std::vector<std::pair<SampleSet, SampleSet>> halves;
  for (const auto& s : sets) halves.push_back(split_halves(s, p.seed));
  MmdReport r;
  r.batch_count = p.batch_count;
  r.batch_size = p.batch_size;
  for (std::size_t i = 0; i < sets.size(); ++i)
    r.pairs.push_back({sets[i].label, sets[i].label, mmd(halves[i].first, halves[i].second, p, jobs)});
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      r.pairs.push_back({sets[i].label, sets[j].label, mmd(halves[i].first, halves[j].second, p, jobs)});
    }
  }
  return r;
}

}  // namespace advrec

#endif  // ADVREC_ANALYSIS_MMD_HPP
