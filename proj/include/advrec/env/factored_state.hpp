#ifndef ADVREC_ENV_FACTORED_STATE_HPP
#define ADVREC_ENV_FACTORED_STATE_HPP

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "advrec/core/linalg.hpp"

namespace advrec {

namespace factor_ids {
inline const std::string context = "context";
inline const std::string history = "interaction_history";
inline const std::string user_profile = "user_profile";
}  // namespace factor_ids

struct Factor {
  std::string id;
  Vec values;

  friend bool operator==(const Factor&, const Factor&) = default;
};

/// A state split into named sub-vectors. Factors are kept sorted by id, so
/// flattening order is lexicographic and independent of insertion order.
class FactoredState {
 public:
  FactoredState() = default;

  explicit FactoredState(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::sort(factors_.begin(), factors_.end(), [](const Factor& a, const Factor& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < factors_.size(); ++i)
      require(factors_[i - 1].id != factors_[i].id, ErrorKind::factor, "duplicate factor id '" + factors_[i].id + "'");
    for (const auto& f : factors_)
      require(!f.values.empty(), ErrorKind::factor, "factor '" + f.id + "' is empty");
  }

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::size_t factor_count() const noexcept { return factors_.size(); }

  std::size_t total_dim() const {
    std::size_t d = 0;
    for (const auto& f : factors_) d += f.values.dim();
    return d;
  }

  bool has(const std::string& id) const { return find(id) != nullptr; }

  const Vec& get(const std::string& id) const {
    const Factor* f = find(id);
    require(f != nullptr, ErrorKind::factor, "no factor '" + id + "'");
    return f->values;
  }

  void set(const std::string& id, Vec values) {
    Factor* f = const_cast<Factor*>(find(id));
    require(f != nullptr, ErrorKind::factor, "no factor '" + id + "'");
    require(f->values.dim() == values.dim(), ErrorKind::factor, "factor '" + id + "' dimension change");
    f->values = std::move(values);
  }

  /// Offset of a factor inside the flattened vector.
  std::size_t offset_of(const std::string& id) const {
    std::size_t off = 0;
    for (const auto& f : factors_) {
      if (f.id == id) return off;
      off += f.values.dim();
    }
    fail(ErrorKind::factor, "no factor '" + id + "'");
  }

  Vec flatten() const {
    Vec out(total_dim());
    std::size_t off = 0;
    for (const auto& f : factors_) {
      std::copy(f.values.begin(), f.values.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
      off += f.values.dim();
    }
    return out;
  }

  /// Same schema, values taken from `flat`.
  FactoredState with_flat(const Vec& flat) const {
    require(flat.dim() == total_dim(), ErrorKind::dimension,
            "flat state has " + std::to_string(flat.dim()) + " entries, schema needs " + std::to_string(total_dim()));
    FactoredState out = *this;
    std::size_t off = 0;
    for (auto& f : out.factors_) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                flat.begin() + static_cast<std::ptrdiff_t>(off + f.values.dim()), f.values.begin());
      off += f.values.dim();
    }
    return out;
  }

  bool same_schema(const FactoredState& o) const {
    if (factors_.size() != o.factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].id != o.factors_[i].id || factors_[i].values.dim() != o.factors_[i].values.dim()) return false;
    return true;
  }

  friend bool operator==(const FactoredState&, const FactoredState&) = default;

 private:
  const Factor* find(const std::string& id) const {
    for (const auto& f : factors_)
      if (f.id == id) return &f;
    return nullptr;
  }

  std::vector<Factor> factors_;
};

}  // namespace advrec

#endif  // ADVREC_ENV_FACTORED_STATE_HPP
