#include <gtest/gtest.h>

#include <numeric>

#include "advrec/agent/metrics.hpp"
#include "advrec/agent/rollout.hpp"
#include "advrec/agent/training.hpp"
#include "advrec/core/gradcheck.hpp"

using namespace advrec;

namespace {

EnvConfig tiny_config() {
  EnvConfig c;
  c.n_users = 30;
  c.n_items = 6;
  c.embed_dim = 4;
  return c;
}

Vec random_vec(std::size_t n, Rng& rng, double sd = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.normal(0, sd);
  return v;
}

/// Leaves every step untouched: returns the true state itself.
class IdentityAttacker final : public StateAttacker {
 public:
  std::optional<FactoredState> attack_step(const AttackStep& s) const override { return s.state; }
};

}  // namespace

TEST(Policy, ZeroWeightsGiveUniform) {
  PolicyNet p(12, 5, 8);
  auto probs = p.act(Vec(12, 0.3));
  for (double x : probs) EXPECT_NEAR(x, 0.2, 1e-15);
}

TEST(Policy, OutputIsProbabilityVector) {
  Rng rng(1);
  auto p = PolicyNet::initialized(12, 9, 16, 5);
  for (int i = 0; i < 20; ++i) {
    auto probs = p.act(random_vec(12, rng));
    EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-9);
  }
  EXPECT_THROW(p.act(Vec(11)), Error);
}

TEST(Policy, ProbGradMatchesFiniteDifferences) {
  Rng rng(2);
  for (int draw = 0; draw < 20; ++draw) {
    auto p = PolicyNet::initialized(9, 5, 7, 100 + draw);
    const Vec s = random_vec(9, rng);
    const std::size_t k = rng.below(5);
    auto num = finite_diff_grad([&](const Vec& x) { return p.act(x)[k]; }, s);
    EXPECT_TRUE(grad_check(p.prob_grad(s, k), num, 1e-4)) << "draw " << draw;
    auto numl = finite_diff_grad([&](const Vec& x) { return p.logits(x)[k]; }, s);
    EXPECT_TRUE(grad_check(p.logit_grad(s, k), numl, 1e-4));
  }
}

TEST(TdLoss, StateGradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int draw = 0; draw < 20; ++draw) {
    auto c = CriticNet::initialized(12, 4, 16, 200 + draw);
    const Vec s = random_vec(12, rng), e = random_vec(4, rng);
    const double r = rng.normal();
    std::optional<TdNext> next;
    if (draw % 2 == 0) next = TdNext{random_vec(12, rng), random_vec(4, rng)};
    auto res = td_loss(c, s, e, r, next, 0.95);
    auto num = finite_diff_grad([&](const Vec& x) { return td_loss(c, x, e, r, next, 0.95).value; }, s);
    EXPECT_TRUE(grad_check(res.grad, num, 1e-4)) << "draw " << draw << " err " << grad_rel_error(res.grad, num);
  }
}

TEST(TdLoss, ZeroResidualAndGammaZero) {
  Rng rng(4);
  auto c = CriticNet::initialized(6, 2, 8, 9);
  const Vec s = random_vec(6, rng), e = random_vec(2, rng);
  const double q = c.q(s, e);
  auto res = td_loss(c, s, e, q, std::nullopt, 0.95);
  EXPECT_EQ(res.value, 0.0);
  for (double g : res.grad) EXPECT_EQ(g, 0.0);
  TdNext next{random_vec(6, rng), random_vec(2, rng)};
  auto g0 = td_loss(c, s, e, 0.7, next, 0.0);
  EXPECT_NEAR(g0.value, (q - 0.7) * (q - 0.7), 1e-12);
  EXPECT_THROW(td_loss(c, s, e, 0.7, next, 1.5), Error);
}

TEST(Training, ZeroEpisodesEqualsInitialisation) {
  auto env = synth_env(tiny_config());
  AgentTrainConfig cfg;
  cfg.episodes = 0;
  cfg.hidden = 8;
  EXPECT_EQ(train_agent(env, cfg), init_agent(env, 8, cfg.seed));
}

TEST(Training, Deterministic) {
  auto env = synth_env(tiny_config());
  AgentTrainConfig cfg;
  cfg.episodes = 300;
  cfg.hidden = 8;
  EXPECT_EQ(train_agent(env, cfg), train_agent(env, cfg));
}

TEST(Training, FourItemGreedyMatchesOracle) {
  EnvConfig c;
  c.n_items = 4;
  auto env = synth_env(c);
  AgentTrainConfig cfg;
  cfg.episodes = 40000;
  auto agent = train_agent(env, cfg);
  // An episode counts only if every greedy step picks the best item.
  std::size_t matched = 0;
  const std::size_t n = 200;
  for (std::size_t e = 0; e < n; ++e) {
    auto tr = rollout(env, agent.policy, agent.critic, e % env.n_users(), e);
    bool all = true;
    for (const auto& r : tr.records) all = all && r.action == env.best_item(tr.user_id);
    matched += all;
  }
  EXPECT_GE(static_cast<double>(matched) / static_cast<double>(n), 0.9);
}

TEST(Training, BeatsUniformPolicy) {
  auto env = synth_env(EnvConfig{});
  AgentTrainConfig cfg;
  cfg.episodes = 5000;
  auto agent = train_agent(env, cfg);
  // Uniform-random baseline: mean R_T under uniformly random actions.
  double random_r = 0.0, trained_r = 0.0;
  Rng rng(8);
  for (std::size_t e = 0; e < 200; ++e) {
    const std::size_t u = e % env.n_users();
    auto s = env.reset(u, e);
    for (std::size_t t = 0; t < env.horizon(); ++t) {
      auto out = env.step(s, rng.below(env.n_items()));
      random_r += out.reward;
      s = out.next_state;
    }
    trained_r += rollout(env, agent.policy, agent.critic, u, e).cumulative_reward;
  }
  EXPECT_GT(trained_r, 0.0);
  EXPECT_GT(trained_r, random_r + 0.5 * std::abs(random_r));
  PolicyNet uniform(env.state_dim(), env.n_items(), 8);
  EXPECT_GT(evaluate_ranking(agent.policy, env, 10, 200).ndcg, evaluate_ranking(uniform, env, 10, 200).ndcg);
}

TEST(Rollout, CleanHasNoAttackedFlags) {
  auto env = synth_env(tiny_config());
  auto a = init_agent(env, 8, 1);
  auto tr = rollout(env, a.policy, a.critic, 3, 7);
  ASSERT_EQ(tr.records.size(), env.horizon());
  double sum = 0;
  for (const auto& r : tr.records) {
    EXPECT_FALSE(r.attacked);
    sum += r.reward;
  }
  EXPECT_EQ(sum, tr.cumulative_reward);
}

TEST(Rollout, IdentityAttackerIsNonInvasive) {
  auto env = synth_env(tiny_config());
  auto a = init_agent(env, 8, 1);
  IdentityAttacker id;
  for (std::size_t e = 0; e < 20; ++e) {
    auto clean = rollout(env, a.policy, a.critic, e % env.n_users(), e);
    auto att = rollout(env, a.policy, a.critic, e % env.n_users(), e, &id);
    EXPECT_EQ(clean.actions(), att.actions());
    EXPECT_EQ(clean.cumulative_reward, att.cumulative_reward);
    for (std::size_t t = 0; t < clean.records.size(); ++t) {
      EXPECT_EQ(clean.records[t].policy_probs, att.records[t].policy_probs);
      EXPECT_TRUE(att.records[t].attacked);
    }
  }
}

TEST(Metrics, PerfectRankingIs100) {
  auto env = synth_env(tiny_config());
  for (std::size_t u = 0; u < 5; ++u) {
    auto m = score_ranking(env.oracle_ranking(u), relevant_set(env, u), 3);
    EXPECT_DOUBLE_EQ(m.ndcg, 1.0);
    EXPECT_DOUBLE_EQ(m.hr, 1.0);
  }
}

TEST(Metrics, SingleRelevantAtRankThree) {
  std::vector<std::size_t> ranking(10);
  std::iota(ranking.begin(), ranking.end(), 0);
  std::vector<bool> rel(10, false);
  rel[2] = true;
  auto m = score_ranking(ranking, rel, 10);
  EXPECT_NEAR(100.0 * m.ndcg, 50.0, 1e-12);
  EXPECT_EQ(m.hr, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_NEAR(m.precision, 0.1, 1e-15);
}

TEST(Metrics, RandomRankingHitRateQuarter) {
  EnvConfig c;
  c.n_items = 4;
  c.n_users = 4000;
  auto env = synth_env(c);
  Rng rng(77);
  MetricsAccumulator acc;
  for (std::size_t u = 0; u < env.n_users(); ++u) {
    Vec scores(4);
    for (double& x : scores) x = rng.uniform();
    acc.add(score_ranking(rank_by_score(scores), relevant_set(env, u), 1));
  }
  EXPECT_NEAR(acc.mean_x100().hr, 25.0, 3.0);
}

TEST(Metrics, CutoffAboveItemsIsConfigError) {
  auto env = synth_env(tiny_config());
  PolicyNet p(env.state_dim(), env.n_items(), 4);
  try {
    evaluate_ranking(p, env, env.n_items() + 1, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Metrics, PermutationEquivariant) {
  auto c = tiny_config();
  auto env = synth_env(c);
  auto policy = PolicyNet::initialized(env.state_dim(), env.n_items(), 8, 3);
  // Relabel item i as perm[i] in both the world and the policy output.
  std::vector<std::size_t> perm{3, 5, 0, 1, 4, 2};
  Mat items(c.n_items, c.embed_dim);
  Mlp2 net = policy.net();
  for (std::size_t i = 0; i < c.n_items; ++i) {
    for (std::size_t k = 0; k < c.embed_dim; ++k) items(perm[i], k) = env.item_embeddings()(i, k);
    for (std::size_t j = 0; j < net.hidden_dim(); ++j) net.w2(perm[i], j) = policy.net().w2(i, j);
    net.b2[perm[i]] = policy.net().b2[i];
  }
  Environment env2(c, env.user_preferences(), items);
  PolicyNet p2 = policy;
  p2.net() = net;
  auto a = evaluate_ranking(policy, env, 3, c.n_users);
  auto b = evaluate_ranking(p2, env2, 3, c.n_users);
  EXPECT_NEAR(a.ndcg, b.ndcg, 1e-9);
  EXPECT_NEAR(a.recall, b.recall, 1e-9);
  EXPECT_NEAR(a.hr, b.hr, 1e-9);
  EXPECT_NEAR(a.precision, b.precision, 1e-9);
}
