#ifndef ADVREC_ATTACKS_COUNTERFACTUAL_HPP
#define ADVREC_ATTACKS_COUNTERFACTUAL_HPP

#include <cmath>
#include <vector>

#include "advrec/env/factored_state.hpp"

namespace advrec {

inline double linf_distance(const Vec& a, const Vec& b) {
  a.check_same(b, "linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Factors on which the two states agree within `tolerance` (ℓ∞).
inline std::vector<bool> shared_factors(const FactoredState& si, const FactoredState& sj, double tolerance) {
  require(si.same_schema(sj), ErrorKind::factor, "counterfactual states have different factor schemas");
  std::vector<bool> same;
  for (std::size_t f = 0; f < si.factor_count(); ++f)
    same.push_back(linf_distance(si.factors()[f].values, sj.factors()[f].values) <= tolerance);
  return same;
}

/// Keeps the factors s_i shares with s_j and replaces every other factor of
/// s_i by the corresponding factor of s_j.
inline FactoredState counterfactual(const FactoredState& si, const FactoredState& sj, double tolerance = 1e-9) {
  require(tolerance >= 0.0, ErrorKind::config, "counterfactual tolerance must be nonnegative");
  const auto same = shared_factors(si, sj, tolerance);
  std::vector<Factor> out;
  out.reserve(si.factor_count());
  for (std::size_t f = 0; f < si.factor_count(); ++f) out.push_back(same[f] ? si.factors()[f] : sj.factors()[f]);
  return FactoredState(std::move(out));
}

/// States recorded from earlier clean rollouts. Filled before crafting
/// starts and only read afterwards.
class ReplayPool {
 public:
  void add(std::size_t user, FactoredState state) {
    if (user >= by_user_.size()) by_user_.resize(user + 1);
    by_user_[user].push_back(states_.size());
    states_.push_back(std::move(state));
  }

  std::size_t size() const noexcept { return states_.size(); }
  const std::vector<FactoredState>& states() const noexcept { return states_; }
  const FactoredState& at(std::size_t i) const { return states_.at(i); }

  /// Indices into states() recorded for `user`.
  const std::vector<std::size_t>& for_user(std::size_t user) const {
    static const std::vector<std::size_t> empty;
    return user < by_user_.size() ? by_user_[user] : empty;
  }

 private:
  std::vector<FactoredState> states_;
  std::vector<std::vector<std::size_t>> by_user_;
};

}  // namespace advrec

#endif  // ADVREC_ATTACKS_COUNTERFACTUAL_HPP
