#ifndef ADVREC_IO_TRACES_HPP
#define ADVREC_IO_TRACES_HPP

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "advrec/agent/rollout.hpp"
#include "advrec/attacks/timing.hpp"
#include "advrec/io/json_io.hpp"

namespace advrec {

/// File-level fields repeated on every line of a trace file.
struct TraceTag {
  std::string attack_label;  // "original" for clean traces
  std::string method;        // "none" for clean traces
  double epsilon = 0.0;
  std::optional<int> label;  // 1 = attacked, 0 = benign; absent = unlabeled
};

struct TraceLineRecord {
  std::size_t t = 0;
  std::size_t action = 0;
  double reward = 0.0;
  double p0 = 0.0, p1 = 0.0;  // two largest probabilities the policy produced
  bool attacked = false;
};

struct TraceLine {
  std::uint64_t episode_id = 0;
  std::size_t user_id = 0;
  TraceTag tag;
  double cumulative_reward = 0.0;
  std::vector<TraceLineRecord> records;

  std::vector<std::size_t> actions() const {
    std::vector<std::size_t> a;
    for (const auto& r : records) a.push_back(r.action);
    return a;
  }
};

inline std::pair<double, double> top2(const Vec& p) {
  double p0 = -1.0, p1 = -1.0;
  for (double x : p) {
    if (x > p0) {
      p1 = p0;
      p0 = x;
    } else if (x > p1) {
      p1 = x;
    }
  }
  return {p0, std::max(p1, 0.0)};
}

inline TraceLine to_trace_line(const Trace& tr, const TraceTag& tag) {
  TraceLine l{tr.episode_id, tr.user_id, tag, tr.cumulative_reward, {}};
  for (const auto& r : tr.records) {
    auto [p0, p1] = top2(r.policy_probs);
    l.records.push_back({r.t, r.action, r.reward, p0, p1, r.attacked});
  }
  return l;
}

inline Json to_json(const TraceLine& l) {
  Json recs = Json::array();
  std::vector<bool> mask;
  for (const auto& r : l.records) {
    recs.push_back({{"t", r.t},
                    {"action", r.action},
                    {"reward", r.reward},
                    {"probs_top2", {r.p0, r.p1}},
                    {"attacked", r.attacked}});
    mask.push_back(r.attacked);
  }
  Json j = {{"episode_id", l.episode_id},
            {"user_id", l.user_id},
            {"attack_label", l.tag.attack_label},
            {"method", l.tag.method},
            {"epsilon", l.tag.epsilon},
            {"R_T", l.cumulative_reward},
            {"actions", l.actions()},
            {"mask", mask},
            {"records", std::move(recs)}};
  if (l.tag.label) j["label"] = *l.tag.label;
  return j;
}

inline TraceLine trace_line_from_json(const Json& j) {
  TraceLine l;
  l.episode_id = j.at("episode_id").get<std::uint64_t>();
  l.user_id = j.value("user_id", std::size_t{0});
  l.tag.attack_label = j.value("attack_label", std::string());
  l.tag.method = j.value("method", std::string());
  l.tag.epsilon = j.value("epsilon", 0.0);
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    const int v = it->get<int>();
    require(v == 0 || v == 1, ErrorKind::data, "trace label must be 0 or 1");
    l.tag.label = v;
  }
  l.cumulative_reward = j.value("R_T", 0.0);
  if (auto it = j.find("records"); it != j.end()) {
    for (const auto& r : *it) {
      const auto& p = r.at("probs_top2");
      l.records.push_back({r.at("t").get<std::size_t>(), r.at("action").get<std::size_t>(),
                           r.at("reward").get<double>(), p.at(0).get<double>(), p.at(1).get<double>(),
                           r.at("attacked").get<bool>()});
    }
  } else {
    // Minimal labeled form: {episode_id, actions, label, method, epsilon}.
    std::size_t t = 0;
    for (auto a : j.at("actions")) l.records.push_back({t++, a.get<std::size_t>(), 0.0, 0.0, 0.0, false});
  }
  return l;
}

inline std::string write_trace_lines(const std::vector<TraceLine>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += to_json(l).dump();
    out += '\n';
  }
  return out;
}

inline void write_trace_file(const std::filesystem::path& path, const std::vector<TraceLine>& lines) {
  write_text_file(path, write_trace_lines(lines));
}

inline std::vector<TraceLine> parse_trace_lines(const std::string& text, const std::string& source) {
  std::vector<TraceLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_line_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      fail(ErrorKind::parse, source + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// A missing file is an IO error naming it.
inline std::vector<TraceLine> read_trace_file(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::io, "trace file not found: '" + path.string() + "'");
  return parse_trace_lines(read_text_file(path), path.string());
}

}  // namespace advrec

#endif  // ADVREC_IO_TRACES_HPP
