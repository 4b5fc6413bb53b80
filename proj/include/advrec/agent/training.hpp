#ifndef ADVREC_AGENT_TRAINING_HPP
#define ADVREC_AGENT_TRAINING_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "advrec/agent/networks.hpp"
#include "advrec/core/adam.hpp"
#include "advrec/core/rng.hpp"
#include "advrec/env/environment.hpp"

namespace advrec {

/// Next-step part of a TD target; absent on the terminal step.
struct TdNext {
  Vec state;
  Vec action_embedding;
};

/// (Q(s,a) − (r + γ Q(s',a')))² with the target held constant, and its
/// gradient with respect to s. This gradient drives every FGSM variant.
inline GradResult td_loss(const CriticNet& critic, const Vec& state, const Vec& action_embedding, double reward,
                          const std::optional<TdNext>& next, double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorKind::config, "gamma must lie in [0, 1]");
  double target = reward;
  if (next) target += gamma * critic.q(next->state, next->action_embedding);
  auto [q, dq] = critic.q_state_grad(state, action_embedding);
  const double resid = q - target;
  require(std::isfinite(resid), ErrorKind::numeric, "non-finite TD residual");
  dq *= 2.0 * resid;
  return {resid * resid, std::move(dq)};
}

struct AgentTrainConfig {
  std::size_t hidden = 64;
  std::size_t episodes = 20000;
  double lr = 5e-4;
  double critic_lr = 1e-3;
  double gamma = 0.95;
  std::uint64_t seed = 11;
  /// Weight every action by its critic advantage (expected gradient) rather
  /// than only the sampled one. The sampled form trains better here.
  bool expected_actor_update = false;
  bool use_adam = true;
  /// Behaviour actions come from (1 − explore)·π + explore·uniform; the
  /// bootstrap action a' is always drawn from π, so the critic tracks Q^π.
  double explore = 0.2;
};

struct Agent {
  PolicyNet policy;
  CriticNet critic;

  friend bool operator==(const Agent&, const Agent&) = default;
};

inline Agent init_agent(const Environment& env, std::size_t hidden, std::uint64_t seed) {
  return {PolicyNet::initialized(env.state_dim(), env.n_items(), hidden, stream_key(seed, {streams::policy_init})),
          CriticNet::initialized(env.state_dim(), env.embed_dim(), hidden, stream_key(seed, {streams::critic_init}))};
}

/// Training episodes use episode ids disjoint from evaluation rollouts.
inline constexpr std::uint64_t kTrainEpisodeBase = std::uint64_t{1} << 40;

/// One-step actor–critic. The critic follows the TD loss; the actor
/// ascends advantage-weighted log π(a|s) with the baseline V(s) = Σ π Q.
inline Agent train_agent(const Environment& env, const AgentTrainConfig& cfg) {
  require(cfg.lr > 0.0 && cfg.critic_lr > 0.0, ErrorKind::config, "learning rates must be positive");
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, ErrorKind::config, "gamma must lie in [0, 1]");
  require(cfg.explore >= 0.0 && cfg.explore <= 1.0, ErrorKind::config, "explore must lie in [0, 1]");
  Agent agent = init_agent(env, cfg.hidden, cfg.seed);
  Rng rng(stream_key(cfg.seed, {streams::training}));
  const std::size_t horizon = env.horizon();
  Adam actor_opt({cfg.lr});
  Adam critic_opt({cfg.critic_lr});
  auto apply = [&](Mlp2& net, const Mlp2& grad, Adam& opt, double sgd_lr) {
    if (cfg.use_adam) {
      const Mlp2& g = grad;
      opt.step(net.buffers(), g.buffers());
    } else {
      net.sgd_step(grad, sgd_lr);
    }
  };

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const std::size_t user = static_cast<std::size_t>(rng.below(env.n_users()));
    Rng noise = env.episode_rng(user, kTrainEpisodeBase + ep, streams::reward_noise);
    FactoredState fs = env.reset(user, kTrainEpisodeBase + ep);
    Vec s = fs.flatten();
    auto behaviour = [&](const Vec& state) {
      if (rng.uniform() < cfg.explore) return static_cast<std::size_t>(rng.below(env.n_items()));
      return rng.categorical(agent.policy.act(state).values());
    };
    std::size_t a = behaviour(s);

    for (std::size_t t = 0; t < horizon; ++t) {
      auto out = env.step(fs, a, &noise);
      const Vec emb = env.item_embedding(a);
      const Vec critic_in = agent.critic.input(s, emb);
      auto fwd = agent.critic.net().forward(critic_in);
      const double q = fwd.out[0];

      double target = out.reward;
      Vec s_next;
      const bool terminal = t + 1 == horizon;
      if (!terminal) {
        s_next = out.next_state.flatten();
        const std::size_t a_boot = rng.categorical(agent.policy.act(s_next).values());
        target += cfg.gamma * agent.critic.q(s_next, env.item_embedding(a_boot));
      }
      const double resid = q - target;
      if (!std::isfinite(resid) || resid * resid > 1e6)
        fail(ErrorKind::training, "actor-critic diverged at episode " + std::to_string(ep));

      // Critic: d/dθ (q − y)².
      apply(agent.critic.net(), agent.critic.net().param_grad(critic_in, fwd, Vec{2.0 * resid}), critic_opt,
            cfg.critic_lr);

      // Actor: θ ← θ + lr · Σ_a w_a A(s,a) ∇ log π(a|s), with
      // A(s,a) = Q(s,a) − Σ_b π(b|s) Q(s,b).
      auto pf = agent.policy.forward(s);
      Vec p = softmax(pf.out);
      const Vec qs = agent.critic.q_all(s, env.item_embeddings());
      const double v = dot(p, qs);
      // Gradient of Σ_a w_a A_a log π(a) w.r.t. logits.
      Vec dlogits(p.dim());
      if (cfg.expected_actor_update) {
        for (std::size_t j = 0; j < p.dim(); ++j) dlogits[j] = p[j] * (qs[j] - v);
      } else {
        // Sampled action, advantage from the observed target y − V(s),
        // importance-weighted against the exploring behaviour policy.
        const double mu = (1.0 - cfg.explore) * p[a] + cfg.explore / static_cast<double>(p.dim());
        const double adv = (target - v) * p[a] / mu;
        for (std::size_t j = 0; j < p.dim(); ++j) dlogits[j] = adv * ((j == a ? 1.0 : 0.0) - p[j]);
      }
      dlogits *= -1.0;
      apply(agent.policy.net(), agent.policy.net().param_grad(s, pf, dlogits), actor_opt, cfg.lr);

      if (terminal) break;
      fs = std::move(out.next_state);
      s = std::move(s_next);
      a = behaviour(s);
    }
  }
  require(agent.policy.net().all_finite() && agent.critic.net().all_finite(), ErrorKind::training,
          "non-finite weights after training");
  return agent;
}

}  // namespace advrec

#endif  // ADVREC_AGENT_TRAINING_HPP
