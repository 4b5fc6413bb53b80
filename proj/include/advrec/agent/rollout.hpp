#ifndef ADVREC_AGENT_ROLLOUT_HPP
#define ADVREC_AGENT_ROLLOUT_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "advrec/agent/networks.hpp"
#include "advrec/agent/training.hpp"
#include "advrec/env/environment.hpp"

namespace advrec {

/// Everything an attacker may look at when deciding about step t.
struct AttackStep {
  const Environment& env;
  const PolicyNet& policy;
  const CriticNet& critic;
  std::size_t user;
  std::uint64_t episode;
  std::size_t t;
  const FactoredState& state;  // true state
  const Vec& clean_probs;      // π(·|state)
};

/// Perception-level attacker: returns the state the policy should see at
/// this step, or nullopt to leave the step untouched.
class StateAttacker {
 public:
  virtual ~StateAttacker() = default;
  virtual std::optional<FactoredState> attack_step(const AttackStep& step) const = 0;
};

struct TraceRecord {
  std::size_t t = 0;
  FactoredState state;  // true state
  std::size_t action = 0;
  Vec policy_probs;  // what the policy produced on its (possibly attacked) input
  double reward = 0.0;
  bool attacked = false;
};

struct Trace {
  std::uint64_t episode_id = 0;
  std::size_t user_id = 0;
  std::vector<TraceRecord> records;
  double cumulative_reward = 0.0;

  std::vector<std::size_t> actions() const {
    std::vector<std::size_t> a;
    a.reserve(records.size());
    for (const auto& r : records) a.push_back(r.action);
    return a;
  }

  std::vector<bool> mask() const {
    std::vector<bool> m;
    for (const auto& r : records) m.push_back(r.attacked);
    return m;
  }
};

/// Greedy rollout. An attacker, when present, replaces the state the policy
/// sees; rewards and transitions always use the true state.
inline Trace rollout(const Environment& env, const PolicyNet& policy, const CriticNet& critic, std::size_t user,
                     std::uint64_t episode, const StateAttacker* attacker = nullptr) {
  require(policy.state_dim() == env.state_dim(), ErrorKind::dimension, "policy input does not match environment");
  Trace trace;
  trace.episode_id = episode;
  trace.user_id = user;
  FactoredState state = env.reset(user, episode);
  Rng noise = env.episode_rng(user, episode, streams::reward_noise);
  for (std::size_t t = 0; t < env.horizon(); ++t) {
    Vec clean_probs = policy.act(state.flatten());
    TraceRecord rec;
    rec.t = t;
    rec.state = state;
    if (attacker != nullptr) {
      auto perceived = attacker->attack_step({env, policy, critic, user, episode, t, state, clean_probs});
      if (perceived) {
        require(perceived->same_schema(state), ErrorKind::dimension, "attacked state schema differs from true state");
        rec.policy_probs = policy.act(perceived->flatten());
        rec.attacked = true;
      }
    }
    if (!rec.attacked) rec.policy_probs = std::move(clean_probs);
    rec.action = argmax(rec.policy_probs);
    auto out = env.step(state, rec.action, &noise);
    rec.reward = out.reward;
    trace.cumulative_reward += out.reward;
    state = std::move(out.next_state);
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace advrec

#endif  // ADVREC_AGENT_ROLLOUT_HPP
