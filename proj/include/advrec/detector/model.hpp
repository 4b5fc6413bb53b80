#ifndef ADVREC_DETECTOR_MODEL_HPP
#define ADVREC_DETECTOR_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "advrec/core/linalg.hpp"
#include "advrec/core/rng.hpp"

namespace advrec {

struct DetectorDims {
  std::size_t n_items = 0;
  std::size_t embed = 16;
  std::size_t hidden = 32;
};

/// GRU encoder over embedded item sequences followed by an attention
/// pooling layer and a two-way softmax classifier.
struct DetectorModel {
  DetectorDims dims;
  double dropout_rate = 0.5;

  Mat embedding;  // n_items × embed
  // Gates: z (update), reset, candidate. W_* act on the input, U_* on h.
  Mat w_z, u_z, w_reset, u_reset, w_h, u_h;
  Vec b_z, b_reset, b_h;
  Vec w_e;  // attention scorer over concat(embedding, hidden)
  Vec b_e;  // one entry
  Mat w_att;  // 2 × hidden
  Vec b_att;

  DetectorModel() = default;
  explicit DetectorModel(DetectorDims d, double dropout = 0.5)
      : dims(d),
        dropout_rate(dropout),
        embedding(d.n_items, d.embed),
        w_z(d.hidden, d.embed),
        u_z(d.hidden, d.hidden),
        w_reset(d.hidden, d.embed),
        u_reset(d.hidden, d.hidden),
        w_h(d.hidden, d.embed),
        u_h(d.hidden, d.hidden),
        b_z(d.hidden),
        b_reset(d.hidden),
        b_h(d.hidden),
        w_e(d.embed + d.hidden),
        b_e(1),
        w_att(2, d.hidden),
        b_att(2) {
    require(d.n_items >= 1 && d.embed >= 1 && d.hidden >= 1, ErrorKind::config, "detector dimensions must be positive");
    require(dropout >= 0.0 && dropout < 1.0, ErrorKind::config, "dropout rate must lie in [0, 1)");
  }

  static DetectorModel initialized(DetectorDims d, double dropout, std::uint64_t key, double embed_scale = 1.0) {
    DetectorModel m(d, dropout);
    Rng rng(key);
    auto fill = [&rng](std::vector<double>& v, double scale) {
      for (double& x : v) x = rng.uniform(-scale, scale);
    };
    fill(m.embedding.values(), embed_scale);
    const double gs = 1.0 / std::sqrt(static_cast<double>(d.hidden));
    for (Mat* w : {&m.w_z, &m.u_z, &m.w_reset, &m.u_reset, &m.w_h, &m.u_h}) fill(w->values(), gs);
    fill(m.w_e.values(), 1.0 / std::sqrt(static_cast<double>(d.embed + d.hidden)));
    fill(m.w_att.values(), gs);
    return m;
  }

  /// Parameter buffers in a fixed order (optimizer and serialization).
  std::vector<std::vector<double>*> buffers() {
    return {&embedding.values(), &w_z.values(),     &u_z.values(),     &w_reset.values(), &u_reset.values(),
            &w_h.values(),       &u_h.values(),     &b_z.values(),     &b_reset.values(), &b_h.values(),
            &w_e.values(),       &b_e.values(),     &w_att.values(),   &b_att.values()};
  }

  std::vector<const std::vector<double>*> buffers() const {
    auto self = const_cast<DetectorModel*>(this)->buffers();
    return {self.begin(), self.end()};
  }

  bool all_finite() const {
    for (auto* b : buffers())
      for (double x : *b)
        if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const DetectorModel& a, const DetectorModel& b) {
    auto bx = a.buffers();
    auto by = b.buffers();
    for (std::size_t i = 0; i < bx.size(); ++i)
      if (*bx[i] != *by[i]) return false;
    return a.dims.n_items == b.dims.n_items && a.dims.embed == b.dims.embed && a.dims.hidden == b.dims.hidden &&
           a.dropout_rate == b.dropout_rate;
  }
};

struct GruStep {
  Vec x, h_prev, z, reset, cand, h;
};

struct DetectorForward {
  std::vector<GruStep> steps;
  Vec scores;  // attention logits per step
  Vec alpha;
  Vec att;           // Σ α_t h_t
  Vec dropout_mask;  // already scaled by 1/(1−rate); empty at inference
  Vec logits;
  Vec probs;
};

inline Vec embed_lookup(const DetectorModel& m, std::size_t item) {
  require(item < m.dims.n_items, ErrorKind::lookup, "item id " + std::to_string(item) + " unknown to detector");
  return m.embedding.row_vec(item);
}

/// One GRU step with the reset gate applied to h_{t−1} inside the candidate.
inline GruStep gru_step(const DetectorModel& m, const Vec& x, const Vec& h_prev) {
  GruStep s;
  s.x = x;
  s.h_prev = h_prev;
  const std::size_t H = m.dims.hidden;
  Vec az = matvec(m.w_z, x) + matvec(m.u_z, h_prev) + m.b_z;
  Vec ar = matvec(m.w_reset, x) + matvec(m.u_reset, h_prev) + m.b_reset;
  s.z = Vec(H);
  s.reset = Vec(H);
  for (std::size_t j = 0; j < H; ++j) {
    s.z[j] = sigmoid(az[j]);
    s.reset[j] = sigmoid(ar[j]);
  }
  Vec ac = matvec(m.w_h, x) + matvec(m.u_h, hadamard(s.reset, h_prev)) + m.b_h;
  s.cand = tanh(ac);
  s.h = Vec(H);
  for (std::size_t j = 0; j < H; ++j) s.h[j] = (1.0 - s.z[j]) * h_prev[j] + s.z[j] * s.cand[j];
  return s;
}

/// GRU over raw input vectors (embedding lookup already done).
inline std::vector<GruStep> encode_inputs(const DetectorModel& m, const std::vector<Vec>& inputs) {
  std::vector<GruStep> steps;
  Vec h(m.dims.hidden);
  for (const auto& x : inputs) {
    require(x.dim() == m.dims.embed, ErrorKind::dimension, "detector input dimension mismatch");
    steps.push_back(gru_step(m, x, h));
    h = steps.back().h;
  }
  return steps;
}

inline std::vector<Vec> lookup_sequence(const DetectorModel& m, const std::vector<std::size_t>& actions) {
  std::vector<Vec> xs;
  xs.reserve(actions.size());
  for (auto a : actions) xs.push_back(embed_lookup(m, a));
  return xs;
}

/// Hidden states h_1..h_T for an item sequence, h_0 = 0.
inline std::vector<Vec> encode(const DetectorModel& m, const std::vector<std::size_t>& actions) {
  std::vector<Vec> hs;
  for (auto& s : encode_inputs(m, lookup_sequence(m, actions))) hs.push_back(std::move(s.h));
  return hs;
}

/// Attention pooling and classification on top of encoded steps.
/// `dropout_mask`, when non-empty, multiplies the pooled vector.
inline DetectorForward attend(const DetectorModel& m, std::vector<GruStep> steps, Vec dropout_mask = {}) {
  require(!steps.empty(), ErrorKind::dimension, "detector needs a nonempty sequence");
  DetectorForward f;
  f.steps = std::move(steps);
  const std::size_t T = f.steps.size();
  f.scores = Vec(T);
  for (std::size_t t = 0; t < T; ++t) f.scores[t] = dot(m.w_e, concat(f.steps[t].x, f.steps[t].h)) + m.b_e[0];
  f.alpha = softmax(f.scores);
  f.att = Vec(m.dims.hidden);
  for (std::size_t t = 0; t < T; ++t) f.att += f.steps[t].h * f.alpha[t];
  Vec pooled = f.att;
  if (!dropout_mask.empty()) pooled = hadamard(pooled, dropout_mask);
  f.dropout_mask = std::move(dropout_mask);
  f.logits = matvec(m.w_att, pooled) + m.b_att;
  f.probs = softmax(f.logits);
  return f;
}

inline DetectorForward forward(const DetectorModel& m, const std::vector<std::size_t>& actions, Vec dropout_mask = {}) {
  return attend(m, encode_inputs(m, lookup_sequence(m, actions)), std::move(dropout_mask));
}

/// Two-class probabilities given precomputed hidden states.
inline Vec attend_classify(const DetectorModel& m, const std::vector<std::size_t>& actions,
                           const std::vector<Vec>& hiddens) {
  require(actions.size() == hiddens.size(), ErrorKind::dimension, "hidden/action length mismatch");
  auto xs = lookup_sequence(m, actions);
  std::vector<GruStep> steps(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    require(hiddens[t].dim() == m.dims.hidden, ErrorKind::dimension, "hidden state dimension mismatch");
    steps[t].x = xs[t];
    steps[t].h = hiddens[t];
  }
  return attend(m, std::move(steps)).probs;
}

/// Probability that the sequence is adversarial.
inline double detect(const DetectorModel& m, const std::vector<std::size_t>& actions) {
  return forward(m, actions).probs[1];
}

/// Gradients with the same layout as DetectorModel::buffers(), plus the
/// gradient with respect to each step's input vector.
struct DetectorGrad {
  std::vector<std::vector<double>> params;
  std::vector<Vec> inputs;
};

/// Backpropagates cross-entropy of `f.probs` against `label` through the
/// classifier, attention and the unrolled GRU.
inline DetectorGrad backward(DetectorModel& m, const DetectorForward& f, std::size_t label) {
  const std::size_t H = m.dims.hidden;
  const std::size_t E = m.dims.embed;
  const std::size_t T = f.steps.size();
  DetectorModel g(m.dims, m.dropout_rate);

  Vec dlogits = f.probs - one_hot(2, label);
  Vec pooled = f.dropout_mask.empty() ? f.att : hadamard(f.att, f.dropout_mask);
  add_outer(g.w_att, dlogits, pooled);
  g.b_att = dlogits;
  Vec datt = matvec_t(m.w_att, dlogits);
  if (!f.dropout_mask.empty()) datt = hadamard(datt, f.dropout_mask);

  std::vector<Vec> dh(T, Vec(H));
  std::vector<Vec> dx(T, Vec(E));
  Vec dalpha(T);
  for (std::size_t t = 0; t < T; ++t) {
    dh[t] += datt * f.alpha[t];
    dalpha[t] = dot(f.steps[t].h, datt);
  }
  const double mean_da = dot(f.alpha, dalpha);
  for (std::size_t t = 0; t < T; ++t) {
    const double ds = f.alpha[t] * (dalpha[t] - mean_da);
    Vec e = concat(f.steps[t].x, f.steps[t].h);
    g.w_e += e * ds;
    g.b_e[0] += ds;
    for (std::size_t k = 0; k < E; ++k) dx[t][k] += ds * m.w_e[k];
    for (std::size_t j = 0; j < H; ++j) dh[t][j] += ds * m.w_e[E + j];
  }

  Vec carry(H);
  for (std::size_t tt = T; tt-- > 0;) {
    const GruStep& s = f.steps[tt];
    Vec d = dh[tt] + carry;
    Vec dz(H), dc(H), dh_prev(H);
    for (std::size_t j = 0; j < H; ++j) {
      dz[j] = d[j] * (s.cand[j] - s.h_prev[j]);
      dc[j] = d[j] * s.z[j];
      dh_prev[j] = d[j] * (1.0 - s.z[j]);
    }
    Vec dac(H);
    for (std::size_t j = 0; j < H; ++j) dac[j] = dc[j] * (1.0 - s.cand[j] * s.cand[j]);
    Vec rh = hadamard(s.reset, s.h_prev);
    add_outer(g.w_h, dac, s.x);
    add_outer(g.u_h, dac, rh);
    g.b_h += dac;
    dx[tt] += matvec_t(m.w_h, dac);
    Vec drh = matvec_t(m.u_h, dac);
    Vec dr(H);
    for (std::size_t j = 0; j < H; ++j) {
      dr[j] = drh[j] * s.h_prev[j];
      dh_prev[j] += drh[j] * s.reset[j];
    }
    Vec daz(H), dar(H);
    for (std::size_t j = 0; j < H; ++j) {
      daz[j] = dz[j] * s.z[j] * (1.0 - s.z[j]);
      dar[j] = dr[j] * s.reset[j] * (1.0 - s.reset[j]);
    }
    add_outer(g.w_z, daz, s.x);
    add_outer(g.u_z, daz, s.h_prev);
    g.b_z += daz;
    add_outer(g.w_reset, dar, s.x);
    add_outer(g.u_reset, dar, s.h_prev);
    g.b_reset += dar;
    dx[tt] += matvec_t(m.w_z, daz) + matvec_t(m.w_reset, dar);
    dh_prev += matvec_t(m.u_z, daz) + matvec_t(m.u_reset, dar);
    carry = std::move(dh_prev);
  }

  DetectorGrad out;
  for (auto* b : g.buffers()) out.params.push_back(*b);
  out.inputs = std::move(dx);
  return out;
}

/// Adds per-step input gradients into the embedding-table gradient.
inline void scatter_embedding_grad(const DetectorModel& m, const std::vector<std::size_t>& actions, DetectorGrad& g) {
  auto& emb = g.params[0];
  for (std::size_t t = 0; t < actions.size(); ++t)
    for (std::size_t k = 0; k < m.dims.embed; ++k) emb[actions[t] * m.dims.embed + k] += g.inputs[t][k];
}

}  // namespace advrec

#endif  // ADVREC_DETECTOR_MODEL_HPP
