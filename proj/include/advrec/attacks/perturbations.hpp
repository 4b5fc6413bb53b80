#ifndef ADVREC_ATTACKS_PERTURBATIONS_HPP
#define ADVREC_ATTACKS_PERTURBATIONS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advrec/agent/networks.hpp"
#include "advrec/core/linalg.hpp"
#include "advrec/core/rng.hpp"

namespace advrec {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// δ = ε · sign(∇)
inline Vec fgsm_inf(const Vec& grad, double epsilon) {
  grad.require_finite("fgsm gradient");
  Vec d(grad.dim());
  for (std::size_t i = 0; i < grad.dim(); ++i) d[i] = epsilon * sign(grad[i]);
  return d;
}

/// δ = ε √d ∇/‖∇‖₂; zero gradient gives zero δ.
inline Vec fgsm_l2(const Vec& grad, double epsilon) {
  grad.require_finite("fgsm gradient");
  const double n = norm2(grad);
  if (n == 0.0) return Vec(grad.dim());
  return grad * (epsilon * std::sqrt(static_cast<double>(grad.dim())) / n);
}

/// All mass ε·d on the coordinate of largest |∇| (lowest index on ties).
inline Vec fgsm_l1(const Vec& grad, double epsilon) {
  grad.require_finite("fgsm gradient");
  Vec d(grad.dim());
  std::size_t best = 0;
  for (std::size_t i = 1; i < grad.dim(); ++i)
    if (std::abs(grad[i]) > std::abs(grad[best])) best = i;
  if (grad.empty() || grad[best] == 0.0) return d;
  d[best] = epsilon * static_cast<double>(grad.dim()) * sign(grad[best]);
  return d;
}

struct CraftResult {
  Vec delta;
  /// JSMA: no admissible coordinate. DeepFool: no label flip.
  bool degenerate = false;
};

/// Saliency-map attack from the clean state toward `target`. Coordinates
/// where raising s_i raises π(target) and lowers π(current) are scored by
/// the product of the two gradients; the top k get ε·d/k each.
inline CraftResult jsma(const Vec& state, const PolicyNet& policy, std::size_t target, std::size_t k, double epsilon) {
  require(k >= 1, ErrorKind::config, "jsma_k must be >= 1");
  const std::size_t current = policy.greedy(state);
  require(target != current, ErrorKind::config, "jsma target equals current greedy action");
  const Vec g_target = policy.prob_grad(state, target);
  const Vec g_current = policy.prob_grad(state, current);

  std::vector<std::pair<double, std::size_t>> admissible;
  for (std::size_t i = 0; i < state.dim(); ++i)
    if (g_target[i] > 0.0 && g_current[i] < 0.0) admissible.emplace_back(g_target[i] * -g_current[i], i);

  CraftResult res{Vec(state.dim()), admissible.empty()};
  if (admissible.empty() || epsilon == 0.0) return res;
  std::stable_sort(admissible.begin(), admissible.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t n = std::min(k, admissible.size());
  const double step = epsilon * static_cast<double>(state.dim()) / static_cast<double>(k);
  for (std::size_t j = 0; j < n; ++j) res.delta[admissible[j].second] = step * sign(g_target[admissible[j].second]);
  return res;
}

/// Candidate classes for sampled DeepFool: m distinct labels other than
/// `exclude`, uniformly without replacement, in ascending order.
inline std::vector<std::size_t> sample_candidates(std::size_t n_classes, std::size_t exclude, std::size_t m, Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < n_classes; ++c)
    if (c != exclude) pool.push_back(c);
  if (m < pool.size()) {
    for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
  }
  return pool;
}

struct DeepFoolOptions {
  std::size_t samples = 16;
  std::size_t max_iters = 20;
  double overshoot = 0.02;
};

/// DeepFool restricted to a sampled label subset: repeatedly step onto the
/// nearest linearised boundary among the candidates until the greedy label
/// of the overshot point changes.
inline CraftResult deepfool(const Vec& state, const PolicyNet& policy, const DeepFoolOptions& opt, Rng& rng) {
  require(opt.samples >= 1, ErrorKind::config, "deepfool needs at least one sampled class");
  const std::size_t n = policy.n_items();
  const std::size_t original = policy.greedy(state);
  const auto candidates = sample_candidates(n, original, opt.samples, rng);

  Vec total(state.dim());
  Vec x = state;
  bool flipped = false;
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    auto fwd = policy.forward(x);
    if (argmax(fwd.out) != original) {
      flipped = true;
      break;
    }
    const Vec g0 = policy.net().input_vjp(fwd, one_hot(n, original));
    double best_dist = INFINITY;
    Vec best_w;
    double best_f = 0.0;
    for (std::size_t k : candidates) {
      Vec w = policy.net().input_vjp(fwd, one_hot(n, k)) - g0;
      const double f = fwd.out[k] - fwd.out[original];
      const double wn = norm2(w);
      if (wn == 0.0) continue;
      const double dist = std::abs(f) / wn;
      if (dist < best_dist) {
        best_dist = dist;
        best_w = std::move(w);
        best_f = f;
      }
    }
    if (best_w.empty()) break;
    const double wn2 = dot(best_w, best_w);
    total += best_w * ((std::abs(best_f) + 1e-4) / wn2);
    x = state + total * (1.0 + opt.overshoot);
  }
  if (!flipped) flipped = policy.greedy(x) != original;
  return {total * (1.0 + opt.overshoot), !flipped};
}

}  // namespace advrec

#endif  // ADVREC_ATTACKS_PERTURBATIONS_HPP
