#ifndef ADVREC_PIPELINE_CONFIG_HPP
#define ADVREC_PIPELINE_CONFIG_HPP

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advrec/analysis/mmd.hpp"
#include "advrec/attacks/plan.hpp"
#include "advrec/detector/train.hpp"
#include "advrec/io/json_io.hpp"

namespace advrec {

struct EvalConfig {
  std::size_t k = 10;
  std::size_t n_eval_users = 200;
  /// Evaluation episodes per trace file (clean and every attack).
  std::size_t n_episodes = 500;
  /// Episodes per class for the detector's training files.
  std::size_t n_train_traces = 5000;
  /// Clean episodes recorded into the counterfactual replay pool.
  std::size_t n_pool_episodes = 500;
};

struct SweepConfig {
  std::vector<std::string> methods{"fgsm_inf", "fgsm_l2", "fgsm_l1"};
  std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> frequencies{0.58, 0.45, 0.32, 0.12};
  /// Strategic thresholds added to the frequency sweep.
  std::vector<double> thresholds{};
  double frequency_epsilon = 0.1;
};

struct DetectorStageConfig {
  std::string train_attack_label = "fgsm_l1_0.1";
  DetectorTrainConfig train;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  EnvConfig env;
  AgentTrainConfig agent;
  std::vector<AttackPlan> attacks;
  DetectorStageConfig detector;
  EvalConfig eval;
  SweepConfig sweep;
  MmdParams mmd;
  std::filesystem::path workdir = "advrec_work";
  std::optional<std::filesystem::path> interactions;

  const AttackPlan& plan(const std::string& label) const {
    for (const auto& p : attacks)
      if (p.name() == label) return p;
    fail(ErrorKind::config, "no attack labelled '" + label + "' in the config");
  }

  void validate() const {
    env.validate();
    require(!attacks.empty(), ErrorKind::config, "config lists no attacks");
    std::set<std::string> labels;
    for (const auto& p : attacks) {
      p.validate();
      require(p.name() != "original", ErrorKind::config, "attack label 'original' is reserved for clean traces");
      require(p.name().rfind("train_", 0) != 0, ErrorKind::config, "attack labels may not start with 'train_'");
      require(labels.insert(p.name()).second, ErrorKind::config, "duplicate attack label '" + p.name() + "'");
    }
    require(labels.count(detector.train_attack_label) == 1, ErrorKind::config,
            "detector.train_attack_label '" + detector.train_attack_label + "' is not among the attacks");
    detector.train.validate();
    require(eval.k >= 1 && eval.k <= env.n_items, ErrorKind::config, "eval.K must lie in [1, n_items]");
    require(eval.n_eval_users >= 1, ErrorKind::config, "eval.n_eval_users must be >= 1");
    require(eval.n_episodes >= 2, ErrorKind::config, "eval.n_episodes must be >= 2");
    require(eval.n_pool_episodes >= 1, ErrorKind::config, "eval.n_pool_episodes must be >= 1");
    for (const auto& m : sweep.methods) parse_method(m);
    for (double e : sweep.epsilons) require(e >= 0.0, ErrorKind::config, "sweep epsilons must be >= 0");
    for (double f : sweep.frequencies) require(f >= 0.0 && f <= 1.0, ErrorKind::config, "sweep frequencies lie in [0, 1]");
    for (double t : sweep.thresholds) require(t >= 0.0 && t < 1.0, ErrorKind::config, "sweep thresholds lie in [0, 1)");
    mmd.validate();
  }
};

/// Seven plans covering the six attack families at the desk-scale budget.
inline std::vector<AttackPlan> default_attacks() {
  std::vector<AttackPlan> out;
  auto add = [&](AttackMethod m, double eps, std::string label) {
    AttackPlan p;
    p.method = m;
    p.epsilon = eps;
    p.label = std::move(label);
    out.push_back(p);
  };
  add(AttackMethod::fgsm_l1, 0.1, "fgsm_l1_0.1");
  add(AttackMethod::fgsm_inf, 0.1, "fgsm_inf_0.1");
  add(AttackMethod::fgsm_l2, 0.1, "fgsm_l2_0.1");
  add(AttackMethod::fgsm_inf, 0.5, "fgsm_inf_0.5");
  add(AttackMethod::jsma, 0.1, "jsma_0.1");
  add(AttackMethod::deepfool, 0.0, "deepfool");
  add(AttackMethod::counterfactual, 0.0, "counterfactual");
  return out;
}

inline AttackPlan attack_plan_from_json(const Json& j) {
  reject_unknown(j,
                 {"label", "method", "epsilon", "timing", "p_freq", "threshold", "jsma_k", "deepfool_samples",
                  "deepfool_max_iters", "deepfool_overshoot", "cf_pool", "cf_tolerance"},
                 "attacks[]");
  AttackPlan p;
  require(j.contains("method"), ErrorKind::config, "attack entry lacks 'method'");
  p.method = parse_method(j.at("method").get<std::string>());
  read_field(j, "label", p.label);
  read_field(j, "epsilon", p.epsilon);
  if (j.contains("timing")) p.timing = parse_timing(j.at("timing").get<std::string>());
  read_field(j, "p_freq", p.p_freq);
  read_field(j, "threshold", p.threshold);
  read_field(j, "jsma_k", p.jsma_k);
  read_field(j, "deepfool_samples", p.deepfool.samples);
  read_field(j, "deepfool_max_iters", p.deepfool.max_iters);
  read_field(j, "deepfool_overshoot", p.deepfool.overshoot);
  read_field(j, "cf_tolerance", p.cf_tolerance);
  if (j.contains("cf_pool")) {
    const auto s = j.at("cf_pool").get<std::string>();
    require(s == "same_user" || s == "any_user", ErrorKind::config, "cf_pool must be same_user or any_user");
    p.cf_pool = s == "same_user" ? PoolScope::same_user : PoolScope::any_user;
  }
  return p;
}

inline Json to_json(const AttackPlan& p) {
  return {{"label", p.name()},
          {"method", std::string(to_string(p.method))},
          {"epsilon", p.epsilon},
          {"timing", std::string(to_string(p.timing))},
          {"p_freq", p.p_freq},
          {"threshold", p.threshold},
          {"jsma_k", p.jsma_k},
          {"deepfool_samples", p.deepfool.samples},
          {"deepfool_max_iters", p.deepfool.max_iters},
          {"deepfool_overshoot", p.deepfool.overshoot},
          {"cf_pool", p.cf_pool == PoolScope::same_user ? "same_user" : "any_user"},
          {"cf_tolerance", p.cf_tolerance}};
}

inline Json to_json(const DetectorStageConfig& d) {
  const auto& c = d.train;
  return {{"train_attack_label", d.train_attack_label},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"dropout", c.dropout},
          {"hidden", c.hidden},
          {"embed", c.embed},
          {"batch_size", c.batch_size},
          {"val_fraction", c.val_fraction},
          {"max_sequences", c.max_sequences},
          {"embed_init", c.embed_init}};
}

inline DetectorStageConfig detector_stage_from_json(const Json& j) {
  reject_unknown(j,
                 {"train_attack_label", "epochs", "lr", "weight_decay", "dropout", "hidden", "embed", "batch_size",
                  "val_fraction", "max_sequences", "embed_init"},
                 "detector");
  DetectorStageConfig d;
  read_field(j, "train_attack_label", d.train_attack_label);
  read_field(j, "epochs", d.train.epochs);
  read_field(j, "lr", d.train.lr);
  read_field(j, "weight_decay", d.train.weight_decay);
  read_field(j, "dropout", d.train.dropout);
  read_field(j, "hidden", d.train.hidden);
  read_field(j, "embed", d.train.embed);
  read_field(j, "batch_size", d.train.batch_size);
  read_field(j, "val_fraction", d.train.val_fraction);
  read_field(j, "max_sequences", d.train.max_sequences);
  read_field(j, "embed_init", d.train.embed_init);
  return d;
}

inline Json experiment_to_json(const ExperimentConfig& c) {
  Json env = to_json(c.env);
  env.erase("seed");
  Json agent = to_json(c.agent);
  agent.erase("seed");
  Json attacks = Json::array();
  for (const auto& p : c.attacks) attacks.push_back(to_json(p));
  Json paths = {{"workdir", c.workdir.string()}};
  if (c.interactions) paths["interactions"] = c.interactions->string();
  return {{"seed", c.seed},
          {"env", env},
          {"agent", agent},
          {"attacks", attacks},
          {"detector", to_json(c.detector)},
          {"eval",
           {{"K", c.eval.k},
            {"n_eval_users", c.eval.n_eval_users},
            {"n_episodes", c.eval.n_episodes},
            {"n_train_traces", c.eval.n_train_traces},
            {"n_pool_episodes", c.eval.n_pool_episodes}}},
          {"sweep",
           {{"methods", c.sweep.methods},
            {"epsilons", c.sweep.epsilons},
            {"frequencies", c.sweep.frequencies},
            {"thresholds", c.sweep.thresholds},
            {"frequency_epsilon", c.sweep.frequency_epsilon}}},
          {"mmd", {{"batch_count", c.mmd.batch_count}, {"batch_size", c.mmd.batch_size}, {"bandwidth", c.mmd.bandwidth}}},
          {"paths", paths}};
}

/// Parses and validates an experiment document. Every section is optional;
/// omitted fields keep the desk-scale defaults.
inline ExperimentConfig experiment_from_json(const Json& j) {
  reject_unknown(j, {"seed", "env", "agent", "attacks", "detector", "eval", "sweep", "mmd", "paths"}, "config");
  ExperimentConfig c;
  read_field(j, "seed", c.seed);
  if (j.contains("env")) {
    require(!j["env"].contains("seed"), ErrorKind::config, "env.seed is derived from the top-level seed");
    c.env = env_config_from_json(j["env"]);
  }
  if (j.contains("agent")) {
    require(!j["agent"].contains("seed"), ErrorKind::config, "agent.seed is derived from the top-level seed");
    c.agent = agent_config_from_json(j["agent"]);
  }
  if (j.contains("attacks")) {
    require(j["attacks"].is_array(), ErrorKind::config, "attacks must be an array");
    for (const auto& a : j["attacks"]) c.attacks.push_back(attack_plan_from_json(a));
  } else {
    c.attacks = default_attacks();
  }
  if (j.contains("detector")) c.detector = detector_stage_from_json(j["detector"]);
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    reject_unknown(e, {"K", "n_eval_users", "n_episodes", "n_train_traces", "n_pool_episodes"}, "eval");
    read_field(e, "K", c.eval.k);
    read_field(e, "n_eval_users", c.eval.n_eval_users);
    read_field(e, "n_episodes", c.eval.n_episodes);
    read_field(e, "n_train_traces", c.eval.n_train_traces);
    read_field(e, "n_pool_episodes", c.eval.n_pool_episodes);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    reject_unknown(s, {"methods", "epsilons", "frequencies", "thresholds", "frequency_epsilon"}, "sweep");
    read_field(s, "methods", c.sweep.methods);
    read_field(s, "epsilons", c.sweep.epsilons);
    read_field(s, "frequencies", c.sweep.frequencies);
    read_field(s, "thresholds", c.sweep.thresholds);
    read_field(s, "frequency_epsilon", c.sweep.frequency_epsilon);
  }
  if (j.contains("mmd")) {
    const auto& m = j["mmd"];
    reject_unknown(m, {"batch_count", "batch_size", "bandwidth"}, "mmd");
    read_field(m, "batch_count", c.mmd.batch_count);
    read_field(m, "batch_size", c.mmd.batch_size);
    read_field(m, "bandwidth", c.mmd.bandwidth);
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    reject_unknown(p, {"workdir", "interactions"}, "paths");
    std::string w = c.workdir.string();
    read_field(p, "workdir", w);
    c.workdir = w;
    if (p.contains("interactions") && !p["interactions"].is_null()) c.interactions = p["interactions"].get<std::string>();
  }
  return c;
}

/// Stage seeds are fixed offsets from the master seed; seed 7 reproduces the
/// library defaults of every stage.
inline void finalize(ExperimentConfig& c) {
  c.env.seed = c.seed;
  c.agent.seed = c.seed + 4;
  c.detector.train.seed = c.seed + 16;
  c.mmd.seed = c.seed + 24;
  for (std::size_t i = 0; i < c.attacks.size(); ++i) c.attacks[i].seed = c.seed + 94 + i;
  for (auto& p : c.attacks) p.gamma = c.agent.gamma;
  c.validate();
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workdir;
};

/// ADVREC_WORKDIR and ADVREC_SEED; no other variables are read.
inline Overrides env_overrides() {
  Overrides o;
  if (const char* w = std::getenv("ADVREC_WORKDIR"); w != nullptr && *w) o.workdir = w;
  if (const char* s = std::getenv("ADVREC_SEED"); s != nullptr && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    require(end != s && *end == '\0', ErrorKind::config, std::string("ADVREC_SEED is not an integer: '") + s + "'");
    o.seed = v;
  }
  return o;
}

/// Config file, then environment overrides, then command-line overrides.
inline ExperimentConfig load_experiment(const std::filesystem::path& path, const Overrides& cli = {}) {
  require(std::filesystem::exists(path), ErrorKind::config, "config file not found: '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::config, "'" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  ExperimentConfig c;
  try {
    c = experiment_from_json(j);
  } catch (const Json::exception& e) {
    fail(ErrorKind::config, "'" + path.string() + "': " + e.what());
  }
  const Overrides env = env_overrides();
  if (env.seed) c.seed = *env.seed;
  if (env.workdir) c.workdir = *env.workdir;
  if (cli.seed) c.seed = *cli.seed;
  if (cli.workdir) c.workdir = *cli.workdir;
  finalize(c);
  return c;
}

}  // namespace advrec

#endif  // ADVREC_PIPELINE_CONFIG_HPP
