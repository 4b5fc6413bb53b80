#ifndef ADVREC_PIPELINE_STAGES_HPP
#define ADVREC_PIPELINE_STAGES_HPP

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "advrec/agent/metrics.hpp"
#include "advrec/analysis/report.hpp"
#include "advrec/core/parallel.hpp"
#include "advrec/io/traces.hpp"
#include "advrec/pipeline/config.hpp"

namespace advrec {

namespace fs = std::filesystem;

/// File layout under the work directory.
struct Workdir {
  fs::path root;

  fs::path agent() const { return root / "agent.json"; }
  fs::path clean_metrics() const { return root / "clean_metrics.json"; }
  fs::path traces() const { return root / "traces"; }
  fs::path trace(const std::string& label) const { return traces() / (label + ".jsonl"); }
  fs::path attack_csv() const { return root / "attack_metrics.csv"; }
  fs::path attack_json() const { return root / "attack_metrics.json"; }
  fs::path sweep_csv(const std::string& kind) const { return root / ("sweep_" + kind + ".csv"); }
  fs::path detector() const { return root / "detector.json"; }
  fs::path detector_metrics() const { return root / "detector_metrics.json"; }
  fs::path detection_csv() const { return root / "detection_metrics.csv"; }
  fs::path mmd_csv() const { return root / "mmd.csv"; }
  fs::path report_json() const { return root / "report.json"; }
  fs::path report_csv() const { return root / "report.csv"; }
};

inline constexpr const char* kCleanLabel = "original";
inline constexpr const char* kTrainPrefix = "train_";

// Disjoint episode-id ranges for the replay pool, evaluation and detector
// training rollouts. Episode i always goes to user i mod n_users.
inline constexpr std::uint64_t kPoolEpisodeBase = 0;
inline constexpr std::uint64_t kEvalEpisodeBase = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kDetectorEpisodeBase = std::uint64_t{2} << 32;

inline std::vector<Trace> run_episodes(const Environment& env, const Agent& agent, std::uint64_t base, std::size_t n,
                                       const StateAttacker* attacker, std::size_t jobs) {
  std::vector<Trace> out(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    out[i] = rollout(env, agent.policy, agent.critic, i % env.n_users(), base + i, attacker);
  });
  return out;
}

inline ReplayPool build_pool(const Environment& env, const Agent& agent, std::size_t n_episodes, std::size_t jobs) {
  ReplayPool pool;
  for (const auto& tr : run_episodes(env, agent, kPoolEpisodeBase, n_episodes, nullptr, jobs))
    for (const auto& r : tr.records) pool.add(tr.user_id, r.state);
  return pool;
}

inline AttackResult summarize(const std::vector<Trace>& traces, const Environment& env, std::size_t k,
                              std::string label, std::string method, double epsilon) {
  AttackResult r{std::move(label), std::move(method), epsilon, 0.0, trace_ranking_metrics(traces, env, k), 0.0};
  std::size_t steps = 0, hit = 0;
  for (const auto& tr : traces) {
    r.mean_reward += tr.cumulative_reward;
    for (const auto& rec : tr.records) {
      ++steps;
      hit += rec.attacked;
    }
  }
  if (!traces.empty()) r.mean_reward /= static_cast<double>(traces.size());
  r.freq = steps ? static_cast<double>(hit) / static_cast<double>(steps) : 0.0;
  return r;
}

inline const std::vector<std::string>& attack_columns() {
  static const std::vector<std::string> cols{"label", "method", "epsilon", "freq", "ndcg",
                                             "recall", "hr",     "precision", "mean_reward"};
  return cols;
}

inline CsvTable attack_table(const std::vector<AttackResult>& rows) {
  CsvTable t{attack_columns(), {}};
  for (const auto& r : rows)
    t.rows.push_back({r.label, r.method, format_number(r.epsilon), format_number(r.freq), format_number(r.metrics.ndcg),
                      format_number(r.metrics.recall), format_number(r.metrics.hr), format_number(r.metrics.precision),
                      format_number(r.mean_reward)});
  return t;
}

inline AgentCheckpoint load_agent(const Workdir& w) {
  require(fs::exists(w.agent()), ErrorKind::io,
          "agent checkpoint not found: '" + w.agent().string() + "' (run train-agent first)");
  return agent_checkpoint_from_json(read_json_file(w.agent()));
}

inline Environment build_environment(const ExperimentConfig& cfg) {
  if (cfg.interactions) return env_from_dataset(cfg.env, load_interactions(cfg.interactions->string()));
  return synth_env(cfg.env);
}

struct TrainAgentOutput {
  fs::path checkpoint;
  RankingMetrics clean;
};

inline TrainAgentOutput cmd_train_agent(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const Workdir w{cfg.workdir};
  std::error_code ec;
  fs::create_directories(w.root, ec);
  require(!ec && fs::is_directory(w.root), ErrorKind::io, "cannot create workdir '" + w.root.string() + "'");
  Environment env = build_environment(cfg);
  Agent agent = train_agent(env, cfg.agent);
  const RankingMetrics clean = evaluate_ranking(agent.policy, env, cfg.eval.k, cfg.eval.n_eval_users);
  AgentCheckpoint ckpt{std::move(env), cfg.agent, std::move(agent)};
  write_json_file(w.agent(), to_json(ckpt));
  Json cm = to_json(clean);
  cm["K"] = cfg.eval.k;
  cm["n_eval_users"] = std::min(cfg.eval.n_eval_users, ckpt.env.n_users());
  write_json_file(w.clean_metrics(), cm);
  if (log) {
    *log << "clean @" << cfg.eval.k << ": ndcg " << clean.ndcg << " recall " << clean.recall << " hr " << clean.hr
         << " precision " << clean.precision << "\n"
         << "wrote " << w.agent().string() << "\n";
  }
  return {w.agent(), clean};
}

struct AttackOptions {
  std::optional<std::string> method;
  std::optional<double> epsilon;
  std::optional<std::string> timing;
  std::optional<double> threshold;
  std::optional<double> p_freq;
  std::optional<std::string> sweep;  // "epsilon" or "frequency"
};

struct AttackOutput {
  std::vector<AttackResult> rows;
  fs::path csv;
  std::vector<fs::path> trace_files;
};

inline TraceTag tag_for(const AttackPlan& p) { return {p.name(), std::string(to_string(p.method)), p.epsilon, 1}; }
inline TraceTag clean_tag(std::string label = kCleanLabel) { return {std::move(label), "none", 0.0, 0}; }

inline std::vector<TraceLine> to_lines(const std::vector<Trace>& traces, const TraceTag& tag) {
  std::vector<TraceLine> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(to_trace_line(t, tag));
  return out;
}

/// Attacked rollouts on the evaluation episodes. Without a sweep every plan
/// in the config (or the single plan given by flags) is run and written as
/// a trace file, plus the detector's training files.
inline AttackOutput cmd_attack(const ExperimentConfig& cfg, const AttackOptions& opt, std::size_t jobs,
                               std::ostream* log = nullptr) {
  const Workdir w{cfg.workdir};
  if (opt.method) parse_method(*opt.method);
  if (opt.timing) parse_timing(*opt.timing);
  if (opt.sweep)
    require(*opt.sweep == "epsilon" || *opt.sweep == "frequency", ErrorKind::usage,
            "unknown sweep '" + *opt.sweep + "'; valid: epsilon, frequency");
  const AgentCheckpoint ck = load_agent(w);
  const Environment& env = ck.env;
  const Agent& agent = ck.agent;
  const std::size_t n = cfg.eval.n_episodes;
  const std::size_t k = cfg.eval.k;
  const ReplayPool pool = build_pool(env, agent, cfg.eval.n_pool_episodes, jobs);
  AttackOutput out;

  auto adhoc = [&](AttackMethod m, double eps) {
    AttackPlan p;
    p.method = m;
    p.epsilon = eps;
    p.gamma = cfg.agent.gamma;
    p.seed = cfg.seed + 94;
    if (opt.timing) p.timing = parse_timing(*opt.timing);
    if (opt.threshold) p.threshold = *opt.threshold;
    if (opt.p_freq) p.p_freq = *opt.p_freq;
    p.validate();
    return p;
  };
  auto run_plan = [&](const AttackPlan& p, std::vector<Trace>* keep) {
    PlanAttacker attacker(p, &pool);
    auto traces = run_episodes(env, agent, kEvalEpisodeBase, n, &attacker, jobs);
    auto row = summarize(traces, env, k, p.name(), std::string(to_string(p.method)), p.epsilon);
    if (keep) *keep = std::move(traces);
    if (log)
      *log << row.label << ": ndcg " << row.metrics.ndcg << " freq " << row.freq << " R_T " << row.mean_reward << "\n";
    return row;
  };

  if (opt.sweep) {
    std::vector<std::string> methods = opt.method ? std::vector<std::string>{*opt.method} : cfg.sweep.methods;
    if (*opt.sweep == "epsilon") {
      const std::vector<double> grid = opt.epsilon ? std::vector<double>{*opt.epsilon} : cfg.sweep.epsilons;
      for (const auto& m : methods)
        for (double eps : grid) out.rows.push_back(run_plan(adhoc(parse_method(m), eps), nullptr));
    } else {
      const double eps = opt.epsilon.value_or(cfg.sweep.frequency_epsilon);
      for (const auto& m : methods) {
        std::vector<AttackPlan> plans;
        for (double f : cfg.sweep.frequencies) {
          AttackPlan p = adhoc(parse_method(m), eps);
          p.timing = TimingKind::random;
          p.p_freq = f;
          plans.push_back(p);
        }
        for (double th : cfg.sweep.thresholds) {
          AttackPlan p = adhoc(parse_method(m), eps);
          p.timing = TimingKind::strategic;
          p.threshold = th;
          plans.push_back(p);
        }
        for (const auto& p : plans) {
          std::vector<Trace> traces;
          out.rows.push_back(run_plan(p, &traces));
          write_trace_file(w.trace(p.name()), to_lines(traces, tag_for(p)));
          out.trace_files.push_back(w.trace(p.name()));
        }
      }
    }
    out.csv = w.sweep_csv(*opt.sweep);
    write_text_file(out.csv, write_csv(attack_table(out.rows)));
    return out;
  }

  std::vector<AttackPlan> plans;
  if (opt.method) {
    plans.push_back(adhoc(parse_method(*opt.method), opt.epsilon.value_or(0.1)));
  } else {
    plans = cfg.attacks;
  }

  auto clean = run_episodes(env, agent, kEvalEpisodeBase, n, nullptr, jobs);
  out.rows.push_back(summarize(clean, env, k, kCleanLabel, "none", 0.0));
  if (log) *log << kCleanLabel << ": ndcg " << out.rows.back().metrics.ndcg << "\n";
  write_trace_file(w.trace(kCleanLabel), to_lines(clean, clean_tag()));
  out.trace_files.push_back(w.trace(kCleanLabel));
  for (const auto& p : plans) {
    std::vector<Trace> traces;
    out.rows.push_back(run_plan(p, &traces));
    write_trace_file(w.trace(p.name()), to_lines(traces, tag_for(p)));
    out.trace_files.push_back(w.trace(p.name()));
  }

  // Detector training data: benign and train-attack rollouts on their own
  // episode range.
  const std::string train_label = cfg.detector.train_attack_label;
  for (const auto& p : plans) {
    if (p.name() != train_label) continue;
    const std::size_t nt = cfg.eval.n_train_traces;
    auto benign = run_episodes(env, agent, kDetectorEpisodeBase, nt, nullptr, jobs);
    PlanAttacker attacker(p, &pool);
    auto adv = run_episodes(env, agent, kDetectorEpisodeBase, nt, &attacker, jobs);
    const std::string bl = std::string(kTrainPrefix) + kCleanLabel, al = kTrainPrefix + train_label;
    write_trace_file(w.trace(bl), to_lines(benign, clean_tag(bl)));
    write_trace_file(w.trace(al), to_lines(adv, {al, std::string(to_string(p.method)), p.epsilon, 1}));
    out.trace_files.push_back(w.trace(bl));
    out.trace_files.push_back(w.trace(al));
  }

  out.csv = w.attack_csv();
  write_text_file(out.csv, write_csv(attack_table(out.rows)));
  Json rows = Json::array();
  for (const auto& r : out.rows) rows.push_back(to_json(r));
  write_json_file(w.attack_json(), rows);
  return out;
}

struct DetectorCheckpoint {
  DetectorModel model;
  DetectorStageConfig config;
  std::size_t n_benign = 0, n_adversarial = 0;
  std::vector<std::size_t> train_idx, val_idx;
  DetectionMetrics validation;
  std::size_t best_epoch = 0;
  bool selected_on_train = false;
};

inline Json to_json(const DetectorCheckpoint& c) {
  Json config = to_json(c.config);
  Json meta = {{"kind", kDetectorKind},
               {"version", kFormatVersion},
               {"dims", {{"n_items", c.model.dims.n_items}, {"embed", c.model.dims.embed}, {"hidden", c.model.dims.hidden}}},
               {"dropout", c.model.dropout_rate},
               {"seed", c.config.train.seed},
               {"config_hash", config_hash(config)},
               {"config", config},
               {"split",
                {{"n_benign", c.n_benign},
                 {"n_adversarial", c.n_adversarial},
                 {"train_idx", c.train_idx},
                 {"val_idx", c.val_idx}}},
               {"validation", to_json(c.validation)},
               {"best_epoch", c.best_epoch},
               {"selected_on_train", c.selected_on_train}};
  return {{"meta", std::move(meta)}, {"weights", detector_weights(c.model)}};
}

inline DetectorCheckpoint detector_checkpoint_from_json(const Json& j) {
  check_kind(j, kDetectorKind);
  try {
    const auto& m = j.at("meta");
    require(config_hash(m.at("config")) == m.at("config_hash").get<std::string>(), ErrorKind::parse,
            "detector config hash mismatch");
    DetectorCheckpoint c;
    c.config = detector_stage_from_json(m.at("config"));
    c.config.train.seed = m.at("seed").get<std::uint64_t>();
    const auto& d = m.at("dims");
    c.model = DetectorModel({d.at("n_items").get<std::size_t>(), d.at("embed").get<std::size_t>(),
                             d.at("hidden").get<std::size_t>()},
                            m.at("dropout").get<double>());
    load_detector_weights(j.at("weights"), c.model);
    const auto& s = m.at("split");
    c.n_benign = s.at("n_benign").get<std::size_t>();
    c.n_adversarial = s.at("n_adversarial").get<std::size_t>();
    c.train_idx = s.at("train_idx").get<std::vector<std::size_t>>();
    c.val_idx = s.at("val_idx").get<std::vector<std::size_t>>();
    c.validation = detection_metrics_from_json(m.at("validation"));
    c.best_epoch = m.at("best_epoch").get<std::size_t>();
    c.selected_on_train = m.at("selected_on_train").get<bool>();
    return c;
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed detector checkpoint: ") + e.what());
  }
}

inline std::vector<std::vector<std::size_t>> action_sequences(const std::vector<TraceLine>& lines) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(l.actions());
  return out;
}

struct TrainDetectorOutput {
  fs::path checkpoint;
  DetectorCheckpoint detector;
  /// Sequences in training order (benign first), for recomputation.
  std::vector<LabeledSequence> data;
};

inline TrainDetectorOutput cmd_train_detector(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const Workdir w{cfg.workdir};
  const std::string bl = std::string(kTrainPrefix) + kCleanLabel;
  const std::string al = kTrainPrefix + cfg.detector.train_attack_label;
  const auto benign = read_trace_file(w.trace(bl));
  const auto adv = read_trace_file(w.trace(al));
  const AgentCheckpoint ck = load_agent(w);
  auto res = train_detector(ck.env.n_items(), action_sequences(benign), action_sequences(adv), cfg.detector.train);
  DetectorCheckpoint c;
  c.model = res.model;
  c.config = cfg.detector;
  for (const auto& s : res.data) (s.label ? c.n_adversarial : c.n_benign)++;
  c.train_idx = res.train_idx;
  c.val_idx = res.val_idx;
  c.validation = res.validation;
  c.best_epoch = res.best_epoch;
  c.selected_on_train = res.selected_on_train;
  write_json_file(w.detector(), to_json(c));
  Json metrics = to_json(c.validation);
  metrics["best_epoch"] = c.best_epoch;
  metrics["split"] = c.selected_on_train ? "train" : "validation";
  write_json_file(w.detector_metrics(), metrics);
  if (log) {
    *log << "validation (epoch " << c.best_epoch << "): precision " << c.validation.precision << " recall "
         << c.validation.recall << " f1 " << c.validation.f1 << "\n"
         << "wrote " << w.detector().string() << "\n";
  }
  return {w.detector(), std::move(c), std::move(res.data)};
}

/// Evaluation trace files in the work directory, training files excluded.
inline std::vector<fs::path> eval_trace_files(const Workdir& w) {
  std::vector<fs::path> out;
  if (!fs::is_directory(w.traces())) return out;
  for (const auto& e : fs::directory_iterator(w.traces())) {
    const auto name = e.path().filename().string();
    if (e.path().extension() == ".jsonl" && name.rfind(kTrainPrefix, 0) != 0) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string file_label(const fs::path& p, const std::vector<TraceLine>& lines) {
  if (!lines.empty() && !lines.front().tag.attack_label.empty()) return lines.front().tag.attack_label;
  return p.stem().string();
}

inline std::vector<double> detect_all(const DetectorModel& m, const std::vector<const TraceLine*>& lines,
                                      std::size_t jobs) {
  std::vector<double> probs(lines.size());
  parallel_for(lines.size(), jobs, [&](std::size_t i) { probs[i] = detect(m, lines[i]->actions()); });
  return probs;
}

/// One row per file with attacked traces. Files without benign traces are
/// scored together with every benign trace across the given files.
inline std::vector<DetectionResult> cmd_detect(const ExperimentConfig& cfg, std::vector<fs::path> files,
                                               std::size_t jobs, std::ostream* log = nullptr) {
  const Workdir w{cfg.workdir};
  require(fs::exists(w.detector()), ErrorKind::io,
          "detector checkpoint not found: '" + w.detector().string() + "' (run train-detector first)");
  const DetectorCheckpoint det = detector_checkpoint_from_json(read_json_file(w.detector()));
  if (files.empty()) files = eval_trace_files(w);
  require(!files.empty(), ErrorKind::data, "no trace files to score");

  std::vector<std::pair<std::string, std::vector<TraceLine>>> loaded;
  std::vector<const TraceLine*> negatives;
  for (const auto& f : files) {
    auto lines = read_trace_file(f);
    require(!lines.empty(), ErrorKind::data, "trace file '" + f.string() + "' is empty");
    for (const auto& l : lines)
      require(l.tag.label.has_value(), ErrorKind::data, "unlabeled trace in '" + f.string() + "'");
    loaded.emplace_back(file_label(f, lines), std::move(lines));
  }
  for (const auto& [label, lines] : loaded)
    for (const auto& l : lines)
      if (*l.tag.label == 0) negatives.push_back(&l);

  std::vector<DetectionResult> rows;
  for (const auto& [label, lines] : loaded) {
    std::vector<const TraceLine*> set;
    bool has_neg = false, has_pos = false;
    for (const auto& l : lines) {
      set.push_back(&l);
      (*l.tag.label ? has_pos : has_neg) = true;
    }
    if (!has_pos) continue;
    if (!has_neg) set.insert(set.end(), negatives.begin(), negatives.end());
    std::vector<int> labels;
    for (auto* l : set) labels.push_back(*l->tag.label);
    const auto m = detection_metrics(labels, detect_all(det.model, set, jobs));
    rows.push_back({label, m.precision, m.recall, m.f1});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DetectionResult& a, const DetectionResult& b) { return a.attack_label < b.attack_label; });
  CsvTable t{{"attack_label", "precision", "recall", "f1"}, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.attack_label, format_number(r.precision), format_number(r.recall), format_number(r.f1)});
  write_text_file(w.detection_csv(), write_csv(t));
  if (log)
    for (const auto& r : rows)
      *log << r.attack_label << ": precision " << r.precision << " recall " << r.recall << " f1 " << r.f1 << "\n";
  return rows;
}

inline std::vector<DetectionResult> read_detection_csv(const fs::path& path) {
  const CsvTable t = read_csv(read_text_file(path));
  const std::size_t a = t.column("attack_label"), p = t.column("precision"), r = t.column("recall"), f = t.column("f1");
  std::vector<DetectionResult> out;
  for (const auto& row : t.rows) out.push_back({row[a], std::stod(row[p]), std::stod(row[r]), std::stod(row[f])});
  return out;
}

/// Final-step action embeddings per trace file; clean traces first.
inline std::vector<SampleSet> final_step_sets(const Environment& env, const std::vector<fs::path>& files) {
  std::vector<SampleSet> sets;
  for (const auto& f : files) {
    const auto lines = read_trace_file(f);
    SampleSet s{file_label(f, lines), {}};
    for (const auto& l : lines) {
      require(!l.records.empty(), ErrorKind::data, "empty trace in '" + f.string() + "'");
      s.vectors.push_back(env.item_embedding(l.records.back().action));
    }
    sets.push_back(std::move(s));
  }
  std::stable_sort(sets.begin(), sets.end(), [](const SampleSet& a, const SampleSet& b) {
    const bool ca = a.label == kCleanLabel, cb = b.label == kCleanLabel;
    return ca != cb ? ca : a.label < b.label;
  });
  return sets;
}

struct AnalyzeOutput {
  MmdReport mmd;
  ExperimentReport report;
};

inline AnalyzeOutput cmd_analyze(const ExperimentConfig& cfg, std::size_t jobs, std::ostream* log = nullptr) {
  const Workdir w{cfg.workdir};
  std::optional<RankingMetrics> clean;
  if (fs::exists(w.clean_metrics())) clean = ranking_metrics_from_json(read_json_file(w.clean_metrics()));
  require(clean.has_value(), ErrorKind::report,
          "missing stage 'train-agent' ('" + w.clean_metrics().string() + "' not found)");
  std::optional<std::vector<AttackResult>> attacks;
  if (fs::exists(w.attack_json())) {
    attacks.emplace();
    for (const auto& r : read_json_file(w.attack_json())) attacks->push_back(attack_result_from_json(r));
  }
  require(attacks.has_value(), ErrorKind::report, "missing stage 'attack' ('" + w.attack_json().string() + "' not found)");
  std::vector<DetectionResult> detection;
  if (fs::exists(w.detection_csv())) detection = read_detection_csv(w.detection_csv());

  const AgentCheckpoint ck = load_agent(w);
  const auto files = eval_trace_files(w);
  require(!files.empty(), ErrorKind::data, "no trace files in '" + w.traces().string() + "'");
  const auto sets = final_step_sets(ck.env, files);
  MmdReport mmd = mmd_matrix(sets, cfg.mmd, jobs);

  CsvTable t{{"a", "b", "mmd"}, {}};
  for (const auto& p : mmd.pairs) t.rows.push_back({p.a, p.b, format_number(p.mmd)});
  write_text_file(w.mmd_csv(), write_csv(t));
  ExperimentReport report = build_report(clean, attacks, detection, mmd);
  write_json_file(w.report_json(), to_json(report));
  write_text_file(w.report_csv(), write_csv(flatten_report(report)));
  if (log)
    for (const auto& p : mmd.pairs) *log << "mmd(" << p.a << ", " << p.b << ") = " << p.mmd << "\n";
  return {std::move(mmd), std::move(report)};
}

}  // namespace advrec

#endif  // ADVREC_PIPELINE_STAGES_HPP
