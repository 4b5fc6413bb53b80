#ifndef ADVREC_ENV_ENVIRONMENT_HPP
#define ADVREC_ENV_ENVIRONMENT_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advrec/core/linalg.hpp"
#include "advrec/core/rng.hpp"
#include "advrec/env/factored_state.hpp"
#include "advrec/env/interactions.hpp"

namespace advrec {

struct EnvConfig {
  std::size_t n_users = 200;
  std::size_t n_items = 50;
  std::size_t embed_dim = 8;
  std::size_t episode_len = 4;
  double reward_noise_sd = 0.0;
  std::uint64_t seed = 7;
  /// Standard deviation of the per-episode context factor.
  double context_sd = 0.2;
  /// Per-coordinate standard deviation of user preferences and item
  /// embeddings.
  double feature_sd = 0.2;

  void validate() const {
    require(n_users >= 1, ErrorKind::config, "n_users must be >= 1");
    require(n_items >= 2, ErrorKind::config, "n_items must be >= 2");
    require(embed_dim >= 2, ErrorKind::config, "embed_dim must be >= 2");
    require(episode_len >= 1, ErrorKind::config, "episode_len must be >= 1");
    require(reward_noise_sd >= 0.0 && std::isfinite(reward_noise_sd), ErrorKind::config,
            "reward_noise_sd must be a finite nonnegative number");
    require(context_sd >= 0.0 && std::isfinite(context_sd), ErrorKind::config, "context_sd must be nonnegative");
    require(feature_sd > 0.0 && std::isfinite(feature_sd), ErrorKind::config, "feature_sd must be positive");
  }
};

struct StepOutcome {
  FactoredState next_state;
  double reward = 0.0;
};

inline constexpr double kHistoryDecay = 0.8;

/// Factored recommendation MDP. Immutable after construction; every random
/// quantity of an episode comes from a stream keyed by (seed, user, episode).
class Environment {
 public:
  Environment(EnvConfig config, Mat user_prefs, Mat item_embeddings)
      : config_(config), user_prefs_(std::move(user_prefs)), items_(std::move(item_embeddings)) {
    config_.validate();
    require(user_prefs_.rows() == config_.n_users && user_prefs_.cols() == config_.embed_dim, ErrorKind::config,
            "user preference matrix shape does not match config");
    require(items_.rows() == config_.n_items && items_.cols() == config_.embed_dim, ErrorKind::config,
            "item embedding matrix shape does not match config");
  }

  const EnvConfig& config() const noexcept { return config_; }
  std::size_t n_items() const noexcept { return config_.n_items; }
  std::size_t n_users() const noexcept { return config_.n_users; }
  std::size_t embed_dim() const noexcept { return config_.embed_dim; }
  std::size_t horizon() const noexcept { return config_.episode_len; }
  std::size_t state_dim() const noexcept { return 3 * config_.embed_dim; }

  const Mat& item_embeddings() const noexcept { return items_; }
  const Mat& user_preferences() const noexcept { return user_prefs_; }
  Vec item_embedding(std::size_t item) const {
    require(item < n_items(), ErrorKind::action, "item " + std::to_string(item) + " out of range");
    return items_.row_vec(item);
  }
  Vec user_preference(std::size_t user) const {
    require(user < n_users(), ErrorKind::lookup, "unknown user " + std::to_string(user));
    return user_prefs_.row_vec(user);
  }

  Rng episode_rng(std::size_t user, std::uint64_t episode, std::uint64_t tag = streams::episode) const {
    return Rng(stream_key(config_.seed, {tag, user, episode}));
  }

  FactoredState reset(std::size_t user, std::uint64_t episode = 0) const {
    require(user < n_users(), ErrorKind::lookup, "unknown user " + std::to_string(user));
    Rng rng = episode_rng(user, episode);
    Vec context(embed_dim());
    for (double& c : context) c = rng.normal(0.0, config_.context_sd);
    return FactoredState({
        {factor_ids::context, std::move(context)},
        {factor_ids::history, Vec(embed_dim())},
        {factor_ids::user_profile, user_prefs_.row_vec(user)},
    });
  }

  /// Noise-free reward dot(profile, item)/embed_dim.
  double expected_reward(const FactoredState& state, std::size_t action) const {
    require(action < n_items(), ErrorKind::action,
            "action " + std::to_string(action) + " outside [0, " + std::to_string(n_items()) + ")");
    const Vec& profile = state.get(factor_ids::user_profile);
    require(profile.dim() == embed_dim(), ErrorKind::dimension, "user profile dimension mismatch");
    auto row = items_.row(action);
    double s = 0.0;
    for (std::size_t k = 0; k < embed_dim(); ++k) s += profile[k] * row[k];
    return s / static_cast<double>(embed_dim());
  }

  double user_item_reward(std::size_t user, std::size_t item) const {
    auto p = user_prefs_.row(user);
    auto q = items_.row(item);
    double s = 0.0;
    for (std::size_t k = 0; k < embed_dim(); ++k) s += p[k] * q[k];
    return s / static_cast<double>(embed_dim());
  }

  /// History update only: h ← 0.8 h + 0.2 e_a. Profile and context are copied.
  FactoredState transition(const FactoredState& state, std::size_t action) const {
    require(action < n_items(), ErrorKind::action, "action " + std::to_string(action) + " out of range");
    FactoredState next = state;
    Vec hist = state.get(factor_ids::history);
    auto row = items_.row(action);
    for (std::size_t k = 0; k < embed_dim(); ++k) hist[k] = kHistoryDecay * hist[k] + (1.0 - kHistoryDecay) * row[k];
    next.set(factor_ids::history, std::move(hist));
    return next;
  }

  /// `noise` must be supplied when reward_noise_sd > 0.
  StepOutcome step(const FactoredState& state, std::size_t action, Rng* noise = nullptr) const {
    require(state.total_dim() == state_dim(), ErrorKind::dimension, "state has wrong total dimension");
    double reward = expected_reward(state, action);
    if (config_.reward_noise_sd > 0.0) {
      require(noise != nullptr, ErrorKind::config, "noisy environment step needs a noise stream");
      reward += noise->normal(0.0, config_.reward_noise_sd);
    }
    require(std::isfinite(reward), ErrorKind::numeric, "non-finite reward");
    return {transition(state, action), reward};
  }

  /// Items ordered by true reward for a user, best first (ties by index).
  std::vector<std::size_t> oracle_ranking(std::size_t user) const {
    std::vector<std::size_t> idx(n_items());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> r(n_items());
    for (std::size_t i = 0; i < n_items(); ++i) r[i] = user_item_reward(user, i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    return idx;
  }

  std::size_t best_item(std::size_t user) const { return oracle_ranking(user).front(); }

 private:
  EnvConfig config_;
  Mat user_prefs_;
  Mat items_;
};

/// Deterministic synthetic world: preferences and item embeddings are i.i.d.
/// N(0, feature_sd²) draws from the world stream.
inline Environment synth_env(const EnvConfig& config) {
  config.validate();
  Rng rng(stream_key(config.seed, {streams::world}));
  Mat items(config.n_items, config.embed_dim);
  for (double& x : items.values()) x = rng.normal(0.0, config.feature_sd);
  Mat users(config.n_users, config.embed_dim);
  for (double& x : users.values()) x = rng.normal(0.0, config.feature_sd);
  return Environment(config, std::move(users), std::move(items));
}

/// Fits user and item factors to the training split by SGD matrix
/// factorisation on mean-centred ratings, then builds an environment over
/// the dataset's vocabularies.
inline Environment env_from_dataset(EnvConfig config, const Dataset& ds, std::size_t epochs = 200, double lr = 0.05) {
  config.n_users = ds.users.size();
  config.n_items = ds.items.size();
  config.validate();
  require(!ds.train.empty(), ErrorKind::data, "dataset has no training interactions");
  const std::size_t d = config.embed_dim;
  Rng rng(stream_key(config.seed, {streams::world}));
  Mat users(config.n_users, d);
  Mat items(config.n_items, d);
  for (double& x : users.values()) x = rng.normal(0.0, 0.5);
  for (double& x : items.values()) x = rng.normal(0.0, 0.5);
  double mean = 0.0;
  for (const auto& r : ds.train) mean += r.rating;
  mean /= static_cast<double>(ds.train.size());
  const double scale = 1.0 / static_cast<double>(d);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (const auto& r : ds.train) {
      auto p = users.row(ds.user_index(r.user_id));
      auto q = items.row(ds.item_index(r.item_id));
      double pred = 0.0;
      for (std::size_t k = 0; k < d; ++k) pred += p[k] * q[k];
      const double err = pred * scale - (r.rating - mean);
      for (std::size_t k = 0; k < d; ++k) {
        const double gp = err * q[k] * scale + 1e-3 * p[k];
        const double gq = err * p[k] * scale + 1e-3 * q[k];
        p[k] -= lr * gp;
        q[k] -= lr * gq;
      }
    }
  }
  require(users.all_finite() && items.all_finite(), ErrorKind::numeric, "embedding fit diverged");
  return Environment(config, std::move(users), std::move(items));
}

}  // namespace advrec

#endif  // ADVREC_ENV_ENVIRONMENT_HPP
