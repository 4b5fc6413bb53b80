#ifndef ADVREC_AGENT_NETWORKS_HPP
#define ADVREC_AGENT_NETWORKS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "advrec/core/linalg.hpp"
#include "advrec/core/rng.hpp"

namespace advrec {

/// in → tanh(hidden) → linear out. Shared by the policy and critic.
struct Mlp2 {
  Mat w1;  // hidden × in
  Vec b1;
  Mat w2;  // out × hidden
  Vec b2;

  struct Forward {
    Vec hidden;  // tanh activations
    Vec out;
  };

  Mlp2() = default;
  Mlp2(std::size_t in, std::size_t hidden, std::size_t out)
      : w1(hidden, in), b1(hidden), w2(out, hidden), b2(out) {}

  std::size_t in_dim() const noexcept { return w1.cols(); }
  std::size_t hidden_dim() const noexcept { return w1.rows(); }
  std::size_t out_dim() const noexcept { return w2.rows(); }

  /// Glorot-uniform weights, zero biases.
  void init_glorot(Rng& rng) {
    const double a1 = std::sqrt(6.0 / static_cast<double>(in_dim() + hidden_dim()));
    for (double& x : w1.values()) x = rng.uniform(-a1, a1);
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden_dim() + out_dim()));
    for (double& x : w2.values()) x = rng.uniform(-a2, a2);
    b1 = Vec(hidden_dim());
    b2 = Vec(out_dim());
  }

  Forward forward(const Vec& x) const {
    require(x.dim() == in_dim(), ErrorKind::dimension,
            "network input has " + std::to_string(x.dim()) + " entries, expected " + std::to_string(in_dim()));
    Vec pre = matvec(w1, x);
    pre += b1;
    Vec h = tanh(pre);
    Vec out = matvec(w2, h);
    out += b2;
    return {std::move(h), std::move(out)};
  }

  /// Vector–Jacobian product: (∂out/∂x)ᵀ dout.
  Vec input_vjp(const Forward& fwd, const Vec& dout) const {
    Vec dpre = matvec_t(w2, dout);
    for (std::size_t j = 0; j < dpre.dim(); ++j) dpre[j] *= 1.0 - fwd.hidden[j] * fwd.hidden[j];
    return matvec_t(w1, dpre);
  }

  /// Parameter gradient of dout·out, same layout as *this.
  Mlp2 param_grad(const Vec& x, const Forward& fwd, const Vec& dout) const {
    Mlp2 g(in_dim(), hidden_dim(), out_dim());
    add_outer(g.w2, dout, fwd.hidden);
    g.b2 = dout;
    Vec dpre = matvec_t(w2, dout);
    for (std::size_t j = 0; j < dpre.dim(); ++j) dpre[j] *= 1.0 - fwd.hidden[j] * fwd.hidden[j];
    add_outer(g.w1, dpre, x);
    g.b1 = dpre;
    return g;
  }

  /// θ ← θ − lr · g
  void sgd_step(const Mlp2& g, double lr) {
    auto upd = [lr](std::vector<double>& p, const std::vector<double>& d) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * d[i];
    };
    upd(w1.values(), g.w1.values());
    upd(b1.values(), g.b1.values());
    upd(w2.values(), g.w2.values());
    upd(b2.values(), g.b2.values());
  }

  std::vector<std::vector<double>*> buffers() { return {&w1.values(), &b1.values(), &w2.values(), &b2.values()}; }
  std::vector<const std::vector<double>*> buffers() const {
    return {&w1.values(), &b1.values(), &w2.values(), &b2.values()};
  }

  bool all_finite() const { return w1.all_finite() && b1.all_finite() && w2.all_finite() && b2.all_finite(); }

  friend bool operator==(const Mlp2&, const Mlp2&) = default;
};

/// π(a | s): state → softmax over items.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(std::size_t state_dim, std::size_t n_items, std::size_t hidden = 64) : net_(state_dim, hidden, n_items) {}

  static PolicyNet initialized(std::size_t state_dim, std::size_t n_items, std::size_t hidden, std::uint64_t key) {
    PolicyNet p(state_dim, n_items, hidden);
    Rng rng(key);
    p.net_.init_glorot(rng);
    return p;
  }

  std::size_t state_dim() const noexcept { return net_.in_dim(); }
  std::size_t n_items() const noexcept { return net_.out_dim(); }

  Mlp2& net() noexcept { return net_; }
  const Mlp2& net() const noexcept { return net_; }

  Mlp2::Forward forward(const Vec& state) const { return net_.forward(state); }

  Vec logits(const Vec& state) const { return net_.forward(state).out; }

  Vec act(const Vec& state) const { return softmax(net_.forward(state).out); }

  std::size_t greedy(const Vec& state) const { return argmax(net_.forward(state).out); }

  /// ∂ logit_k / ∂ state
  Vec logit_grad(const Vec& state, std::size_t k) const {
    auto fwd = net_.forward(state);
    return net_.input_vjp(fwd, one_hot(n_items(), k));
  }

  /// ∂ π(k | state) / ∂ state
  Vec prob_grad(const Vec& state, std::size_t k) const {
    auto fwd = net_.forward(state);
    Vec p = softmax(fwd.out);
    Vec dz(n_items());
    for (std::size_t j = 0; j < n_items(); ++j) dz[j] = p[k] * ((j == k ? 1.0 : 0.0) - p[j]);
    return net_.input_vjp(fwd, dz);
  }

  friend bool operator==(const PolicyNet&, const PolicyNet&) = default;

 private:
  Mlp2 net_;
};

/// Q(s, a) on the concatenation state ⊕ item embedding.
class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(std::size_t state_dim, std::size_t action_dim, std::size_t hidden = 64)
      : state_dim_(state_dim), net_(state_dim + action_dim, hidden, 1) {}

  static CriticNet initialized(std::size_t state_dim, std::size_t action_dim, std::size_t hidden, std::uint64_t key) {
    CriticNet c(state_dim, action_dim, hidden);
    Rng rng(key);
    c.net_.init_glorot(rng);
    return c;
  }

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return net_.in_dim() - state_dim_; }

  Mlp2& net() noexcept { return net_; }
  const Mlp2& net() const noexcept { return net_; }

  double q(const Vec& state, const Vec& action_embedding) const {
    return net_.forward(input(state, action_embedding)).out[0];
  }

  /// Q(s, ·) for every row of `items`; the state half of the first layer is
  /// computed once.
  Vec q_all(const Vec& state, const Mat& items) const {
    require(state.dim() == state_dim_, ErrorKind::dimension, "critic state dimension mismatch");
    require(items.cols() == action_dim(), ErrorKind::dimension, "critic action dimension mismatch");
    const Mat& w1 = net_.w1;
    const std::size_t hidden = w1.rows();
    Vec base = net_.b1;
    for (std::size_t j = 0; j < hidden; ++j) {
      auto row = w1.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < state_dim_; ++c) s += row[c] * state[c];
      base[j] += s;
    }
    Vec out(items.rows());
    for (std::size_t b = 0; b < items.rows(); ++b) {
      auto e = items.row(b);
      double q = net_.b2[0];
      for (std::size_t j = 0; j < hidden; ++j) {
        auto row = w1.row(j);
        double pre = base[j];
        for (std::size_t c = 0; c < e.size(); ++c) pre += row[state_dim_ + c] * e[c];
        q += net_.w2(0, j) * std::tanh(pre);
      }
      out[b] = q;
    }
    return out;
  }

  /// Q and ∂Q/∂state.
  GradResult q_state_grad(const Vec& state, const Vec& action_embedding) const {
    auto fwd = net_.forward(input(state, action_embedding));
    Vec gx = net_.input_vjp(fwd, Vec{1.0});
    Vec gs(std::vector<double>(gx.begin(), gx.begin() + static_cast<std::ptrdiff_t>(state_dim_)));
    return {fwd.out[0], std::move(gs)};
  }

  Vec input(const Vec& state, const Vec& action_embedding) const {
    require(state.dim() == state_dim_, ErrorKind::dimension, "critic state dimension mismatch");
    require(action_embedding.dim() == action_dim(), ErrorKind::dimension, "critic action dimension mismatch");
    return concat(state, action_embedding);
  }

  friend bool operator==(const CriticNet&, const CriticNet&) = default;

 private:
  std::size_t state_dim_ = 0;
  Mlp2 net_;
};

}  // namespace advrec

#endif  // ADVREC_AGENT_NETWORKS_HPP
