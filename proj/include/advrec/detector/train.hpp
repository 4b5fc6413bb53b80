#ifndef ADVREC_DETECTOR_TRAIN_HPP
#define ADVREC_DETECTOR_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "advrec/core/adam.hpp"
#include "advrec/detector/model.hpp"

namespace advrec {

struct LabeledSequence {
  std::vector<std::size_t> actions;
  int label = 0;  // 1 = attacked
};

struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline constexpr double kDecisionThreshold = 0.5;

/// Precision / recall / F1 at the 0.5 threshold; p == 0.5 is positive.
/// Precision is 0 when nothing is predicted positive.
inline DetectionMetrics detection_metrics(const std::vector<int>& labels, const std::vector<double>& probs) {
  require(labels.size() == probs.size(), ErrorKind::dimension, "label/probability count mismatch");
  DetectionMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, ErrorKind::data, "labels must be 0 or 1");
    const bool pos = probs[i] >= kDecisionThreshold;
    if (labels[i] == 1) (pos ? m.tp : m.fn)++;
    else (pos ? m.fp : m.tn)++;
  }
  require(m.tp + m.fn > 0 && m.fp + m.tn > 0, ErrorKind::data, "evaluation set needs both classes");
  m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

inline DetectionMetrics eval_detector(const DetectorModel& model, const std::vector<LabeledSequence>& set) {
  std::vector<int> labels;
  std::vector<double> probs;
  for (const auto& s : set) {
    labels.push_back(s.label);
    probs.push_back(detect(model, s.actions));
  }
  return detection_metrics(labels, probs);
}

/// Recall only, for sets (such as adversarial-only files) lacking negatives.
inline double detection_recall(const DetectorModel& model, const std::vector<LabeledSequence>& positives) {
  require(!positives.empty(), ErrorKind::data, "recall needs at least one sequence");
  std::size_t hit = 0;
  for (const auto& s : positives) hit += detect(model, s.actions) >= kDecisionThreshold;
  return static_cast<double>(hit) / static_cast<double>(positives.size());
}

struct DetectorTrainConfig {
  std::size_t embed = 16;
  std::size_t hidden = 32;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 5e-4;
  double weight_decay = 0.01;
  double dropout = 0.5;
  double val_fraction = 0.2;
  /// Cap on the combined number of sequences used for train + validation.
  std::size_t max_sequences = 20000;
  std::uint64_t seed = 23;
  /// Half-width of the uniform initialisation of item embeddings.
  double embed_init = 0.01;

  void validate() const {
    require(embed >= 1 && hidden >= 1, ErrorKind::config, "detector dimensions must be positive");
    require(epochs >= 1, ErrorKind::config, "detector epochs must be >= 1");
    require(batch_size >= 1, ErrorKind::config, "detector batch_size must be >= 1");
    require(lr > 0.0, ErrorKind::config, "detector lr must be positive");
    require(weight_decay >= 0.0, ErrorKind::config, "weight_decay must be >= 0");
    require(dropout >= 0.0 && dropout < 1.0, ErrorKind::config, "dropout must lie in [0, 1)");
    require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorKind::config, "val_fraction must lie in [0, 1)");
  }
};

struct DetectorTrainResult {
  DetectorModel model;
  /// Sequences actually used (after the cap), benign first.
  std::vector<LabeledSequence> data;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  DetectionMetrics validation;
  std::size_t best_epoch = 0;
  /// True when the validation split lacked a class and selection used the
  /// training split instead.
  bool selected_on_train = false;
};

/// Loss and accumulated gradient for one labeled sequence.
inline double accumulate_sequence_grad(DetectorModel& model, const LabeledSequence& seq, const Vec& dropout_mask,
                                       std::vector<std::vector<double>>& acc) {
  auto f = forward(model, seq.actions, dropout_mask);
  auto g = backward(model, f, static_cast<std::size_t>(seq.label));
  scatter_embedding_grad(model, seq.actions, g);
  if (acc.empty()) {
    acc = std::move(g.params);
  } else {
    for (std::size_t b = 0; b < acc.size(); ++b)
      for (std::size_t i = 0; i < acc[b].size(); ++i) acc[b][i] += g.params[b][i];
  }
  return -std::log(std::max(f.probs[static_cast<std::size_t>(seq.label)], kLogClamp));
}

/// Trains on a stratified 80/20 split, keeping the epoch with the best
/// validation F1 (earliest on ties).
inline DetectorTrainResult train_detector(std::size_t n_items, const std::vector<std::vector<std::size_t>>& benign,
                                          const std::vector<std::vector<std::size_t>>& adversarial,
                                          const DetectorTrainConfig& cfg) {
  cfg.validate();
  const std::size_t per_class = cfg.max_sequences / 2;
  require(per_class > 0, ErrorKind::data, "training cap leaves no sequences");
  require(!benign.empty() && !adversarial.empty(), ErrorKind::data,
          "detector training needs both benign and adversarial sequences");

  DetectorTrainResult res;
  const std::size_t nb = std::min(per_class, benign.size());
  const std::size_t na = std::min(per_class, adversarial.size());
  for (std::size_t i = 0; i < nb; ++i) res.data.push_back({benign[i], 0});
  for (std::size_t i = 0; i < na; ++i) res.data.push_back({adversarial[i], 1});
  for (const auto& s : res.data) {
    require(!s.actions.empty(), ErrorKind::data, "empty action sequence");
    for (auto a : s.actions)
      require(a < n_items, ErrorKind::lookup, "action id " + std::to_string(a) + " outside item catalogue");
  }

  Rng split_rng(stream_key(cfg.seed, {streams::split}));
  auto split_class = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
    split_rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(count)));
    res.val_idx.insert(res.val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    res.train_idx.insert(res.train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  };
  split_class(0, nb);
  split_class(nb, na);
  std::sort(res.val_idx.begin(), res.val_idx.end());
  std::sort(res.train_idx.begin(), res.train_idx.end());

  auto has_both = [&](const std::vector<std::size_t>& idx) {
    bool neg = false, pos = false;
    for (auto i : idx) (res.data[i].label ? pos : neg) = true;
    return neg && pos;
  };
  res.selected_on_train = !has_both(res.val_idx);
  const auto& select_idx = res.selected_on_train ? res.train_idx : res.val_idx;
  auto subset = [&](const std::vector<std::size_t>& idx) {
    std::vector<LabeledSequence> out;
    for (auto i : idx) out.push_back(res.data[i]);
    return out;
  };
  const auto select_set = subset(select_idx);

  DetectorModel model = DetectorModel::initialized({n_items, cfg.embed, cfg.hidden}, cfg.dropout,
                                                   stream_key(cfg.seed, {streams::detector_init}), cfg.embed_init);
  Adam opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng rng(stream_key(cfg.seed, {streams::detector_train}));
  const double keep = 1.0 - cfg.dropout;

  double best_f1 = -1.0;
  std::vector<std::size_t> order = res.train_idx;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<double>> acc;
      for (std::size_t i = start; i < end; ++i) {
        Vec mask;
        if (cfg.dropout > 0.0) {
          mask = Vec(cfg.hidden);
          for (std::size_t j = 0; j < cfg.hidden; ++j) mask[j] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        const double loss = accumulate_sequence_grad(model, res.data[order[i]], mask, acc);
        require(std::isfinite(loss), ErrorKind::training, "detector loss became non-finite");
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      std::vector<const std::vector<double>*> gptr;
      for (auto& g : acc) {
        for (double& x : g) x *= inv;
        gptr.push_back(&g);
      }
      opt.step(model.buffers(), gptr);
    }
    require(model.all_finite(), ErrorKind::training, "detector weights became non-finite");
    const auto m = eval_detector(model, select_set);
    if (m.f1 > best_f1) {
      best_f1 = m.f1;
      res.model = model;
      res.best_epoch = epoch;
      res.validation = m;
    }
  }
  return res;
}

}  // namespace advrec

#endif  // ADVREC_DETECTOR_TRAIN_HPP
