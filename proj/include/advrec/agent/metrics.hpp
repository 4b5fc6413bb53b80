#ifndef ADVREC_AGENT_METRICS_HPP
#define ADVREC_AGENT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advrec/agent/networks.hpp"
#include "advrec/agent/rollout.hpp"
#include "advrec/env/environment.hpp"

namespace advrec {

/// Ranking quality, each value ×100.
struct RankingMetrics {
  double ndcg = 0.0;
  double recall = 0.0;
  double hr = 0.0;
  double precision = 0.0;

  friend bool operator==(const RankingMetrics&, const RankingMetrics&) = default;
};

/// Items sorted by descending score; ties keep the lower index first.
inline std::vector<std::size_t> rank_by_score(const Vec& scores) {
  std::vector<std::size_t> idx(scores.dim());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

inline std::size_t relevant_count(std::size_t n_items) { return (n_items + 9) / 10; }

/// Top ⌈n/10⌉ items by true reward.
inline std::vector<bool> relevant_set(const Environment& env, std::size_t user) {
  std::vector<bool> rel(env.n_items(), false);
  auto order = env.oracle_ranking(user);
  for (std::size_t i = 0; i < relevant_count(env.n_items()); ++i) rel[order[i]] = true;
  return rel;
}

/// Unscaled metrics of one ranked list against a relevance mask.
inline RankingMetrics score_ranking(const std::vector<std::size_t>& ranking, const std::vector<bool>& relevant,
                                    std::size_t k) {
  const std::size_t n_rel = static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
  double dcg = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k && i < ranking.size(); ++i) {
    if (relevant[ranking[i]]) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
      ++hits;
    }
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, n_rel); ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  RankingMetrics m;
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  m.recall = n_rel > 0 ? static_cast<double>(hits) / static_cast<double>(n_rel) : 0.0;
  m.hr = hits > 0 ? 1.0 : 0.0;
  m.precision = static_cast<double>(hits) / static_cast<double>(k);
  return m;
}

class MetricsAccumulator {
 public:
  void add(const RankingMetrics& m) {
    sum_.ndcg += m.ndcg;
    sum_.recall += m.recall;
    sum_.hr += m.hr;
    sum_.precision += m.precision;
    ++count_;
  }
  std::size_t count() const noexcept { return count_; }
  RankingMetrics mean_x100() const {
    RankingMetrics m;
    if (count_ == 0) return m;
    const double s = 100.0 / static_cast<double>(count_);
    m.ndcg = sum_.ndcg * s;
    m.recall = sum_.recall * s;
    m.hr = sum_.hr * s;
    m.precision = sum_.precision * s;
    return m;
  }

 private:
  RankingMetrics sum_;
  std::size_t count_ = 0;
};

inline void check_cutoff(const Environment& env, std::size_t k) {
  require(k >= 1 && k <= env.n_items(), ErrorKind::config,
          "cutoff K=" + std::to_string(k) + " must lie in [1, n_items=" + std::to_string(env.n_items()) + "]");
}

/// NDCG/Recall/HR/Precision@K of the policy's ranking at each user's initial
/// state (episode 0), averaged over the first n_users_eval users.
inline RankingMetrics evaluate_ranking(const PolicyNet& policy, const Environment& env, std::size_t k,
                                       std::size_t n_users_eval) {
  check_cutoff(env, k);
  n_users_eval = std::min(n_users_eval, env.n_users());
  MetricsAccumulator acc;
  for (std::size_t u = 0; u < n_users_eval; ++u) {
    Vec probs = policy.act(env.reset(u, 0).flatten());
    acc.add(score_ranking(rank_by_score(probs), relevant_set(env, u), k));
  }
  return acc.mean_x100();
}

/// Same metrics, but over every step of recorded rollouts using the
/// probabilities the policy actually produced (attacked or not).
inline RankingMetrics trace_ranking_metrics(const std::vector<Trace>& traces, const Environment& env, std::size_t k) {
  check_cutoff(env, k);
  MetricsAccumulator acc;
  std::vector<std::vector<bool>> rel_cache(env.n_users());
  for (const auto& tr : traces) {
    auto& rel = rel_cache.at(tr.user_id);
    if (rel.empty()) rel = relevant_set(env, tr.user_id);
    for (const auto& r : tr.records) acc.add(score_ranking(rank_by_score(r.policy_probs), rel, k));
  }
  return acc.mean_x100();
}

}  // namespace advrec

#endif  // ADVREC_AGENT_METRICS_HPP
