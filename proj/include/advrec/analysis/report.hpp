#ifndef ADVREC_ANALYSIS_REPORT_HPP
#define ADVREC_ANALYSIS_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "advrec/agent/metrics.hpp"
#include "advrec/analysis/mmd.hpp"
#include "advrec/io/csv.hpp"
#include "advrec/io/json_io.hpp"

namespace advrec {

/// One attacked (or clean) evaluation run. Ranking metrics are ×100.
struct AttackResult {
  std::string label;
  std::string method;
  double epsilon = 0.0;
  double freq = 0.0;  // realized fraction of attacked steps
  RankingMetrics metrics;
  double mean_reward = 0.0;

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

struct DetectionResult {
  std::string attack_label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

struct ExperimentReport {
  RankingMetrics clean;
  std::vector<AttackResult> attacks;
  std::vector<DetectionResult> detection;  // may be empty
  MmdReport mmd;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Joins the stage outputs; a missing required stage is a report error.
inline ExperimentReport build_report(const std::optional<RankingMetrics>& clean,
                                     const std::optional<std::vector<AttackResult>>& attacks,
                                     std::vector<DetectionResult> detection, const std::optional<MmdReport>& mmd) {
  require(clean.has_value(), ErrorKind::report, "missing stage 'train-agent' (no clean metrics)");
  require(attacks.has_value(), ErrorKind::report, "missing stage 'attack' (no attack results)");
  require(mmd.has_value(), ErrorKind::report, "missing stage 'analyze' (no MMD report)");
  return {*clean, *attacks, std::move(detection), *mmd};
}

inline Json to_json(const RankingMetrics& m) {
  return {{"ndcg", m.ndcg}, {"recall", m.recall}, {"hr", m.hr}, {"precision", m.precision}};
}

inline RankingMetrics ranking_metrics_from_json(const Json& j) {
  return {j.at("ndcg").get<double>(), j.at("recall").get<double>(), j.at("hr").get<double>(),
          j.at("precision").get<double>()};
}

inline Json to_json(const AttackResult& a) {
  return {{"label", a.label},   {"method", a.method},           {"epsilon", a.epsilon},
          {"freq", a.freq},     {"metrics", to_json(a.metrics)}, {"mean_reward", a.mean_reward}};
}

inline AttackResult attack_result_from_json(const Json& j) {
  return {j.at("label").get<std::string>(), j.at("method").get<std::string>(), j.at("epsilon").get<double>(),
          j.at("freq").get<double>(),       ranking_metrics_from_json(j.at("metrics")),
          j.at("mean_reward").get<double>()};
}

inline Json to_json(const MmdReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) pairs.push_back({{"a", p.a}, {"b", p.b}, {"mmd", p.mmd}});
  return {{"batch_count", r.batch_count}, {"batch_size", r.batch_size}, {"pairs", std::move(pairs)}};
}

inline MmdReport mmd_report_from_json(const Json& j) {
  MmdReport r;
  r.batch_count = j.at("batch_count").get<std::size_t>();
  r.batch_size = j.at("batch_size").get<std::size_t>();
  for (const auto& p : j.at("pairs"))
    r.pairs.push_back({p.at("a").get<std::string>(), p.at("b").get<std::string>(), p.at("mmd").get<double>()});
  return r;
}

inline Json to_json(const ExperimentReport& r) {
  Json attacks = Json::array(), detection = Json::array();
  for (const auto& a : r.attacks) attacks.push_back(to_json(a));
  for (const auto& d : r.detection)
    detection.push_back({{"attack_label", d.attack_label}, {"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1}});
  return {{"clean", to_json(r.clean)},
          {"attacks", std::move(attacks)},
          {"detection", std::move(detection)},
          {"mmd", to_json(r.mmd)}};
}

inline ExperimentReport report_from_json(const Json& j) {
  try {
    ExperimentReport r;
    r.clean = ranking_metrics_from_json(j.at("clean"));
    for (const auto& a : j.at("attacks")) r.attacks.push_back(attack_result_from_json(a));
    for (const auto& d : j.at("detection"))
      r.detection.push_back({d.at("attack_label").get<std::string>(), d.at("precision").get<double>(),
                             d.at("recall").get<double>(), d.at("f1").get<double>()});
    r.mmd = mmd_report_from_json(j.at("mmd"));
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed report: ") + e.what());
  }
}

/// Structural check of a report document; returns the problems found.
inline std::vector<std::string> validate_report_json(const Json& j) {
  std::vector<std::string> errs;
  auto need = [&](const Json& obj, const char* key, Json::value_t type, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      errs.push_back(where + ": missing '" + key + "'");
      return false;
    }
    const auto t = obj.at(key).type();
    const bool num = type == Json::value_t::number_float &&
                     (t == Json::value_t::number_float || t == Json::value_t::number_integer ||
                      t == Json::value_t::number_unsigned);
    const bool uns = type == Json::value_t::number_unsigned &&
                     (t == Json::value_t::number_unsigned || t == Json::value_t::number_integer);
    if (t != type && !num && !uns) {
      errs.push_back(where + ": '" + key + "' has the wrong type");
      return false;
    }
    return true;
  };
  using V = Json::value_t;
  auto metrics = [&](const Json& m, const std::string& where) {
    for (const char* k : {"ndcg", "recall", "hr", "precision"}) need(m, k, V::number_float, where);
  };
  if (need(j, "clean", V::object, "report")) metrics(j["clean"], "clean");
  if (need(j, "attacks", V::array, "report")) {
    for (const auto& a : j["attacks"]) {
      need(a, "label", V::string, "attacks[]");
      need(a, "method", V::string, "attacks[]");
      need(a, "epsilon", V::number_float, "attacks[]");
      need(a, "freq", V::number_float, "attacks[]");
      need(a, "mean_reward", V::number_float, "attacks[]");
      if (need(a, "metrics", V::object, "attacks[]")) metrics(a["metrics"], "attacks[].metrics");
    }
  }
  if (need(j, "detection", V::array, "report")) {
    for (const auto& d : j["detection"]) {
      need(d, "attack_label", V::string, "detection[]");
      for (const char* k : {"precision", "recall", "f1"}) need(d, k, V::number_float, "detection[]");
    }
  }
  if (need(j, "mmd", V::object, "report")) {
    const auto& m = j["mmd"];
    need(m, "batch_count", V::number_unsigned, "mmd");
    need(m, "batch_size", V::number_unsigned, "mmd");
    if (need(m, "pairs", V::array, "mmd")) {
      for (const auto& p : m["pairs"]) {
        need(p, "a", V::string, "mmd.pairs[]");
        need(p, "b", V::string, "mmd.pairs[]");
        if (need(p, "mmd", V::number_float, "mmd.pairs[]") && p["mmd"].get<double>() < -1e-9)
          errs.push_back("mmd.pairs[]: negative mmd");
      }
    }
  }
  return errs;
}

/// One row per (section, key, metric).
inline CsvTable flatten_report(const ExperimentReport& r) {
  CsvTable t{{"section", "key", "metric", "value"}, {}};
  auto put = [&](const std::string& section, const std::string& key, const std::string& metric, double v) {
    t.rows.push_back({section, key, metric, format_number(v)});
  };
  auto ranking = [&](const std::string& section, const std::string& key, const RankingMetrics& m) {
    put(section, key, "ndcg", m.ndcg);
    put(section, key, "recall", m.recall);
    put(section, key, "hr", m.hr);
    put(section, key, "precision", m.precision);
  };
  ranking("clean", "original", r.clean);
  for (const auto& a : r.attacks) {
    ranking("attack", a.label, a.metrics);
    put("attack", a.label, "epsilon", a.epsilon);
    put("attack", a.label, "freq", a.freq);
    put("attack", a.label, "mean_reward", a.mean_reward);
  }
  for (const auto& d : r.detection) {
    put("detection", d.attack_label, "precision", d.precision);
    put("detection", d.attack_label, "recall", d.recall);
    put("detection", d.attack_label, "f1", d.f1);
  }
  for (const auto& p : r.mmd.pairs) put("mmd", p.a + "|" + p.b, "mmd", p.mmd);
  return t;
}

}  // namespace advrec

#endif  // ADVREC_ANALYSIS_REPORT_HPP
