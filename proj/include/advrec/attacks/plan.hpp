#ifndef ADVREC_ATTACKS_PLAN_HPP
#define ADVREC_ATTACKS_PLAN_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "advrec/agent/rollout.hpp"
#include "advrec/agent/training.hpp"
#include "advrec/attacks/counterfactual.hpp"
#include "advrec/attacks/perturbations.hpp"
#include "advrec/attacks/timing.hpp"

namespace advrec {

enum class AttackMethod { fgsm_inf, fgsm_l2, fgsm_l1, jsma, deepfool, counterfactual };
enum class TimingKind { always, random, strategic };

inline constexpr std::array<std::pair<AttackMethod, std::string_view>, 6> kMethodNames{{
    {AttackMethod::fgsm_inf, "fgsm_inf"},
    {AttackMethod::fgsm_l2, "fgsm_l2"},
    {AttackMethod::fgsm_l1, "fgsm_l1"},
    {AttackMethod::jsma, "jsma"},
    {AttackMethod::deepfool, "deepfool"},
    {AttackMethod::counterfactual, "counterfactual"},
}};

inline std::string_view to_string(AttackMethod m) {
  for (auto [k, v] : kMethodNames)
    if (k == m) return v;
  return "?";
}

inline std::string valid_method_list() {
  std::string s;
  for (auto [k, v] : kMethodNames) {
    if (!s.empty()) s += ", ";
    s += v;
  }
  return s;
}

inline AttackMethod parse_method(std::string_view name) {
  for (auto [k, v] : kMethodNames)
    if (v == name) return k;
  fail(ErrorKind::usage, "unknown attack method '" + std::string(name) + "'; valid methods: " + valid_method_list());
}

inline std::string_view to_string(TimingKind t) {
  switch (t) {
    case TimingKind::always: return "always";
    case TimingKind::random: return "random";
    case TimingKind::strategic: return "strategic";
  }
  return "?";
}

inline TimingKind parse_timing(std::string_view name) {
  if (name == "always") return TimingKind::always;
  if (name == "random") return TimingKind::random;
  if (name == "strategic") return TimingKind::strategic;
  fail(ErrorKind::usage, "unknown timing '" + std::string(name) + "'; valid: always, random, strategic");
}

/// Where counterfactual partner states come from.
enum class PoolScope { same_user, any_user };

struct AttackPlan {
  std::string label;
  AttackMethod method = AttackMethod::fgsm_l1;
  double epsilon = 0.1;
  TimingKind timing = TimingKind::always;
  double p_freq = 1.0;     // random timing
  double threshold = 0.0;  // strategic timing
  std::size_t jsma_k = 2;
  DeepFoolOptions deepfool;
  double cf_tolerance = 1e-9;
  PoolScope cf_pool = PoolScope::same_user;
  double gamma = 0.95;
  std::uint64_t seed = 101;

  void validate() const {
    require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorKind::config, "epsilon must be finite and >= 0");
    require(p_freq >= 0.0 && p_freq <= 1.0, ErrorKind::config, "p_freq must lie in [0, 1]");
    require(threshold >= 0.0 && threshold < 1.0, ErrorKind::config, "threshold must lie in [0, 1)");
    require(jsma_k >= 1, ErrorKind::config, "jsma_k must be >= 1");
    require(deepfool.samples >= 1, ErrorKind::config, "deepfool_samples must be >= 1");
    require(deepfool.max_iters >= 1, ErrorKind::config, "deepfool max_iters must be >= 1");
    require(deepfool.overshoot >= 0.0, ErrorKind::config, "deepfool overshoot must be >= 0");
    require(cf_tolerance >= 0.0, ErrorKind::config, "cf_tolerance must be >= 0");
  }

  std::string default_label() const {
    std::ostringstream os;
    os << to_string(method);
    if (method != AttackMethod::counterfactual && method != AttackMethod::deepfool) os << '_' << epsilon;
    if (timing == TimingKind::random) os << "_rand" << p_freq;
    if (timing == TimingKind::strategic) os << "_strat" << threshold;
    return os.str();
  }

  std::string name() const { return label.empty() ? default_label() : label; }
};

/// ∇_s of the TD loss at the true state, using the clean greedy action, the
/// noise-free reward and the clean transition as the target.
inline Vec td_state_gradient(const AttackStep& step, double gamma) {
  const Vec s = step.state.flatten();
  const std::size_t a = argmax(step.clean_probs);
  const double r = step.env.expected_reward(step.state, a);
  std::optional<TdNext> next;
  if (step.t + 1 < step.env.horizon()) {
    FactoredState ns = step.env.transition(step.state, a);
    Vec nsf = ns.flatten();
    const std::size_t an = step.policy.greedy(nsf);
    next = TdNext{std::move(nsf), step.env.item_embedding(an)};
  }
  return td_loss(step.critic, s, step.env.item_embedding(a), r, next, gamma).grad;
}

inline std::size_t second_most_probable(const Vec& probs) {
  const std::size_t top = argmax(probs);
  std::size_t second = top == 0 ? 1 : 0;
  for (std::size_t i = 0; i < probs.dim(); ++i)
    if (i != top && probs[i] > probs[second]) second = i;
  return second;
}

/// Result of crafting one step.
struct CraftedStep {
  FactoredState perceived;
  bool degenerate = false;
};

/// Dispatches the plan for a step already selected by the timing mask.
inline CraftedStep craft_step(const AttackPlan& plan, const AttackStep& step, const ReplayPool* pool) {
  const std::uint64_t key = stream_key(plan.seed, {streams::attack, step.user, step.episode, step.t});
  const Vec s = step.state.flatten();
  switch (plan.method) {
    case AttackMethod::fgsm_inf:
      return {step.state.with_flat(s + fgsm_inf(td_state_gradient(step, plan.gamma), plan.epsilon))};
    case AttackMethod::fgsm_l2:
      return {step.state.with_flat(s + fgsm_l2(td_state_gradient(step, plan.gamma), plan.epsilon))};
    case AttackMethod::fgsm_l1:
      return {step.state.with_flat(s + fgsm_l1(td_state_gradient(step, plan.gamma), plan.epsilon))};
    case AttackMethod::jsma: {
      auto r = jsma(s, step.policy, second_most_probable(step.clean_probs), plan.jsma_k, plan.epsilon);
      return {step.state.with_flat(s + r.delta), r.degenerate};
    }
    case AttackMethod::deepfool: {
      Rng rng(key);
      auto r = deepfool(s, step.policy, plan.deepfool, rng);
      return {step.state.with_flat(s + r.delta), r.degenerate};
    }
    case AttackMethod::counterfactual: {
      require(pool != nullptr && pool->size() > 0, ErrorKind::config, "counterfactual attack needs a replay pool");
      Rng rng(key);
      const FactoredState* partner = nullptr;
      if (plan.cf_pool == PoolScope::same_user) {
        const auto& idx = pool->for_user(step.user);
        require(!idx.empty(), ErrorKind::config, "replay pool has no states for user " + std::to_string(step.user));
        partner = &pool->at(idx[rng.below(idx.size())]);
      } else {
        partner = &pool->at(rng.below(pool->size()));
      }
      return {counterfactual(step.state, *partner, plan.cf_tolerance)};
    }
  }
  fail(ErrorKind::config, "unhandled attack method");
}

/// Whether the plan's timing rule attacks step t.
inline bool timing_selects(const AttackPlan& plan, const AttackStep& step) {
  switch (plan.timing) {
    case TimingKind::always: return true;
    case TimingKind::random: {
      Rng rng(stream_key(plan.seed, {streams::attack, step.user, step.episode, ~std::uint64_t{0}}));
      return random_mask(step.env.horizon(), plan.p_freq, rng).c.at(step.t);
    }
    case TimingKind::strategic: return strategic_bit(step.clean_probs, plan.threshold);
  }
  return false;
}

/// StateAttacker bound to a plan (and, for counterfactuals, a replay pool).
class PlanAttacker final : public StateAttacker {
 public:
  explicit PlanAttacker(AttackPlan plan, const ReplayPool* pool = nullptr) : plan_(std::move(plan)), pool_(pool) {
    plan_.validate();
    if (plan_.method == AttackMethod::counterfactual)
      require(pool_ != nullptr && pool_->size() > 0, ErrorKind::config, "counterfactual attack needs a replay pool");
  }

  const AttackPlan& plan() const noexcept { return plan_; }

  std::optional<FactoredState> attack_step(const AttackStep& step) const override {
    if (!timing_selects(plan_, step)) return std::nullopt;
    return craft_step(plan_, step, pool_).perceived;
  }

 private:
  AttackPlan plan_;
  const ReplayPool* pool_;
};

}  // namespace advrec

#endif  // ADVREC_ATTACKS_PLAN_HPP
