#ifndef ADVREC_CORE_ADAM_HPP
#define ADVREC_CORE_ADAM_HPP

#include <cmath>
#include <vector>

#include "advrec/core/error.hpp"

namespace advrec {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled (AdamW-style) weight decay: θ ← θ − lr·wd·θ each step.
  double weight_decay = 0.0;
};

/// Adam over a fixed list of parameter buffers. The buffer list passed to
/// step() must have the same shapes, in the same order, on every call.
class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}

  const AdamOptions& options() const noexcept { return opt_; }
  std::size_t steps() const noexcept { return t_; }

  void step(const std::vector<std::vector<double>*>& params, const std::vector<const std::vector<double>*>& grads) {
    require(params.size() == grads.size(), ErrorKind::dimension, "adam: parameter/gradient list mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    require(m_.size() == params.size(), ErrorKind::dimension, "adam: parameter list changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& p = *params[b];
      const auto& g = *grads[b];
      require(p.size() == g.size() && p.size() == m_[b].size(), ErrorKind::dimension, "adam: buffer size mismatch");
      auto& m = m_[b];
      auto& v = v_[b];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g[i];
        v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * p[i]);
      }
    }
  }

 private:
  AdamOptions opt_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace advrec

#endif  // ADVREC_CORE_ADAM_HPP
