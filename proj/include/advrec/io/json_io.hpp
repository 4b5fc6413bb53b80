#ifndef ADVREC_IO_JSON_IO_HPP
#define ADVREC_IO_JSON_IO_HPP

#include <filesystem>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "advrec/agent/training.hpp"
#include "advrec/detector/train.hpp"
#include "json.hpp"

namespace advrec {

using Json = nlohmann::json;

// Doubles are written in shortest round-trip form, so a reload is bit-exact.

inline Json to_json(const Vec& v) { return Json(v.values()); }

inline Vec vec_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::parse, "expected a numeric array");
  return Vec(j.get<std::vector<double>>());
}

inline Json to_json(const Mat& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}}; }

inline Mat mat_from_json(const Json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  require(data.size() == rows * cols, ErrorKind::parse, "matrix data length does not match its shape");
  return Mat(rows, cols, std::move(data));
}

inline Json to_json(const Mlp2& n) {
  return {{"w1", to_json(n.w1)}, {"b1", to_json(n.b1)}, {"w2", to_json(n.w2)}, {"b2", to_json(n.b2)}};
}

inline Mlp2 mlp_from_json(const Json& j) {
  Mlp2 n;
  n.w1 = mat_from_json(j.at("w1"));
  n.b1 = vec_from_json(j.at("b1"));
  n.w2 = mat_from_json(j.at("w2"));
  n.b2 = vec_from_json(j.at("b2"));
  require(n.b1.dim() == n.w1.rows() && n.w2.cols() == n.w1.rows() && n.b2.dim() == n.w2.rows(), ErrorKind::parse,
          "network layer shapes are inconsistent");
  return n;
}

inline Json to_json(const EnvConfig& c) {
  return {{"n_users", c.n_users},         {"n_items", c.n_items},       {"embed_dim", c.embed_dim},
          {"episode_len", c.episode_len}, {"reward_noise_sd", c.reward_noise_sd},
          {"context_sd", c.context_sd},   {"feature_sd", c.feature_sd}, {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->template get<T>();
    } catch (const Json::exception& e) {
      fail(ErrorKind::config, std::string("field '") + key + "': " + e.what());
    }
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    require(ok, ErrorKind::config, "unknown key '" + it.key() + "' in " + where);
  }
}

inline EnvConfig env_config_from_json(const Json& j) {
  reject_unknown(j, {"n_users", "n_items", "embed_dim", "episode_len", "reward_noise_sd", "context_sd", "feature_sd", "seed"},
                 "env");
  EnvConfig c;
  read_field(j, "n_users", c.n_users);
  read_field(j, "n_items", c.n_items);
  read_field(j, "embed_dim", c.embed_dim);
  read_field(j, "episode_len", c.episode_len);
  read_field(j, "reward_noise_sd", c.reward_noise_sd);
  read_field(j, "context_sd", c.context_sd);
  read_field(j, "feature_sd", c.feature_sd);
  read_field(j, "seed", c.seed);
  c.validate();
  return c;
}

inline Json to_json(const AgentTrainConfig& c) {
  return {{"hidden", c.hidden}, {"episodes", c.episodes},   {"lr", c.lr},
          {"critic_lr", c.critic_lr}, {"gamma", c.gamma},   {"seed", c.seed},
          {"expected_actor_update", c.expected_actor_update}, {"use_adam", c.use_adam}, {"explore", c.explore}};
}

inline AgentTrainConfig agent_config_from_json(const Json& j) {
  reject_unknown(j, {"hidden", "episodes", "lr", "critic_lr", "gamma", "seed", "expected_actor_update", "use_adam", "explore"},
                 "agent");
  AgentTrainConfig c;
  read_field(j, "hidden", c.hidden);
  read_field(j, "episodes", c.episodes);
  read_field(j, "lr", c.lr);
  read_field(j, "critic_lr", c.critic_lr);
  read_field(j, "gamma", c.gamma);
  read_field(j, "seed", c.seed);
  read_field(j, "expected_actor_update", c.expected_actor_update);
  read_field(j, "use_adam", c.use_adam);
  read_field(j, "explore", c.explore);
  require(c.hidden >= 1, ErrorKind::config, "agent hidden must be >= 1");
  require(c.lr > 0.0 && c.critic_lr > 0.0, ErrorKind::config, "agent learning rates must be positive");
  require(c.gamma >= 0.0 && c.gamma <= 1.0, ErrorKind::config, "agent gamma must lie in [0, 1]");
  require(c.explore >= 0.0 && c.explore <= 1.0, ErrorKind::config, "agent explore must lie in [0, 1]");
  return c;
}

inline Json to_json(const Environment& env) {
  return {{"config", to_json(env.config())},
          {"user_preferences", to_json(env.user_preferences())},
          {"item_embeddings", to_json(env.item_embeddings())}};
}

inline Environment env_from_json(const Json& j) {
  return Environment(env_config_from_json(j.at("config")), mat_from_json(j.at("user_preferences")),
                     mat_from_json(j.at("item_embeddings")));
}

inline constexpr const char* kAgentKind = "advrec.agent";
inline constexpr const char* kDetectorKind = "advrec.detector";
inline constexpr int kFormatVersion = 1;

/// FNV-1a over the compact dump of a config object, as 16 hex digits.
inline std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

// Weight documents: {meta: {kind, version, dims, seed, config_hash, ...},
// weights: {name: row-major floats}}.

inline void put_weights(Json& w, const std::string& prefix, const Mlp2& n) {
  w[prefix + ".w1"] = n.w1.values();
  w[prefix + ".b1"] = n.b1.values();
  w[prefix + ".w2"] = n.w2.values();
  w[prefix + ".b2"] = n.b2.values();
}

inline std::vector<double> weight_array(const Json& w, const std::string& name, std::size_t size) {
  auto it = w.find(name);
  require(it != w.end(), ErrorKind::parse, "checkpoint lacks weight '" + name + "'");
  auto v = it->get<std::vector<double>>();
  require(v.size() == size, ErrorKind::parse,
          "weight '" + name + "' has " + std::to_string(v.size()) + " values, expected " + std::to_string(size));
  return v;
}

inline void get_weights(const Json& w, const std::string& prefix, Mlp2& n) {
  n.w1.values() = weight_array(w, prefix + ".w1", n.w1.values().size());
  n.b1.values() = weight_array(w, prefix + ".b1", n.b1.dim());
  n.w2.values() = weight_array(w, prefix + ".w2", n.w2.values().size());
  n.b2.values() = weight_array(w, prefix + ".b2", n.b2.dim());
}

inline void check_kind(const Json& j, const char* kind) {
  require(j.is_object() && j.contains("meta") && j.contains("weights"), ErrorKind::parse,
          "not a weight document (expected meta and weights)");
  const auto& m = j.at("meta");
  require(m.value("kind", std::string()) == kind, ErrorKind::parse, std::string("not an ") + kind + " checkpoint");
  require(m.value("version", 0) == kFormatVersion, ErrorKind::parse, "unsupported checkpoint version");
}

struct AgentCheckpoint {
  Environment env;
  AgentTrainConfig train;
  Agent agent;
};

inline Json to_json(const AgentCheckpoint& c) {
  Json config = {{"env", to_json(c.env.config())}, {"agent", to_json(c.train)}};
  Json meta = {{"kind", kAgentKind},
               {"version", kFormatVersion},
               {"dims",
                {{"n_users", c.env.n_users()},
                 {"n_items", c.env.n_items()},
                 {"embed_dim", c.env.embed_dim()},
                 {"state_dim", c.env.state_dim()},
                 {"hidden", c.agent.policy.net().hidden_dim()},
                 {"critic_hidden", c.agent.critic.net().hidden_dim()}}},
               {"seed", c.train.seed},
               {"config_hash", config_hash(config)},
               {"config", config}};
  Json w = Json::object();
  w["env.user_preferences"] = c.env.user_preferences().values();
  w["env.item_embeddings"] = c.env.item_embeddings().values();
  put_weights(w, "policy", c.agent.policy.net());
  put_weights(w, "critic", c.agent.critic.net());
  return {{"meta", std::move(meta)}, {"weights", std::move(w)}};
}

inline AgentCheckpoint agent_checkpoint_from_json(const Json& j) {
  check_kind(j, kAgentKind);
  try {
    const auto& meta = j.at("meta");
    const auto& w = j.at("weights");
    require(config_hash(meta.at("config")) == meta.at("config_hash").get<std::string>(), ErrorKind::parse,
            "checkpoint config hash mismatch");
    EnvConfig ec = env_config_from_json(meta.at("config").at("env"));
    AgentTrainConfig train = agent_config_from_json(meta.at("config").at("agent"));
    const auto hidden = meta.at("dims").at("hidden").get<std::size_t>();
    const auto critic_hidden = meta.at("dims").at("critic_hidden").get<std::size_t>();
    Environment env(ec, Mat(ec.n_users, ec.embed_dim, weight_array(w, "env.user_preferences", ec.n_users * ec.embed_dim)),
                    Mat(ec.n_items, ec.embed_dim, weight_array(w, "env.item_embeddings", ec.n_items * ec.embed_dim)));
    PolicyNet policy(env.state_dim(), env.n_items(), hidden);
    get_weights(w, "policy", policy.net());
    CriticNet critic(env.state_dim(), env.embed_dim(), critic_hidden);
    get_weights(w, "critic", critic.net());
    return {std::move(env), train, {std::move(policy), std::move(critic)}};
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed agent checkpoint: ") + e.what());
  }
}

inline constexpr const char* kDetectorBufferNames[] = {"embedding", "gru.w_z", "gru.u_z", "gru.w_reset", "gru.u_reset",
                                                       "gru.w_h",   "gru.u_h", "gru.b_z", "gru.b_reset", "gru.b_h",
                                                       "att.w_e",   "att.b_e", "out.w",   "out.b"};

inline Json detector_weights(const DetectorModel& m) {
  Json w = Json::object();
  auto bufs = m.buffers();
  for (std::size_t i = 0; i < bufs.size(); ++i) w[kDetectorBufferNames[i]] = *bufs[i];
  return w;
}

inline void load_detector_weights(const Json& w, DetectorModel& m) {
  auto bufs = m.buffers();
  for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i] = weight_array(w, kDetectorBufferNames[i], bufs[i]->size());
}

inline Json to_json(const DetectionMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
}

inline DetectionMetrics detection_metrics_from_json(const Json& j) {
  DetectionMetrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.tp = j.at("tp").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  return m;
}

/// Whole-file text read; a missing file is an IO error naming the path.
inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::parse, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace advrec

#endif  // ADVREC_IO_JSON_IO_HPP
