#pragma once

// Application configuration: one JSON document plus PREFIX_SECTION_KEY
// environment overrides.

#include <cctype>
#include <filesystem>
#include <map>
#include <string>

#include "hitl/engine/session_log.hpp"
#include "hitl/nlu/acts.hpp"
#include "hitl/nlu/relations.hpp"

extern char** environ;

namespace hitl::service {

inline constexpr const char* kEnvPrefix = "HITL";

using Environment = std::map<std::string, std::string>;

inline Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string_view::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return env;
}

namespace detail {

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Converts `raw` to the JSON type of `current`.
inline json coerce(const json& current, const std::string& raw, const std::string& var) {
  try {
    if (current.is_boolean()) {
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ValidationError("expected true/false");
    }
    if (current.is_number_integer() || current.is_number_unsigned()) {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw ValidationError("expected an integer");
      return v;
    }
    if (current.is_number()) {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw ValidationError("expected a number");
      return v;
    }
    if (current.is_string()) return raw;
    return json::parse(raw);
  } catch (const std::exception& e) {
    throw ValidationError(var + "='" + raw + "': " + e.what());
  }
}

}  // namespace detail

// Every variable named PREFIX_<SECTION>_<KEY> replaces config[section][key].
// The longest matching section name wins, so sections may contain
// underscores. A prefixed variable naming no existing key is an error.
inline void apply_env_overrides(json& cfg, const Environment& env, const std::string& prefix = kEnvPrefix) {
  const std::string head = prefix + "_";
  for (const auto& [var, raw] : env) {
    if (var.rfind(head, 0) != 0) continue;
    const std::string rest = var.substr(head.size());
    std::string section;
    for (const auto& [name, body] : cfg.items()) {
      const auto tag = detail::upper(name) + "_";
      if (body.is_object() && rest.rfind(tag, 0) == 0 && name.size() > section.size()) section = name;
    }
    if (section.empty()) throw ValidationError(var + ": no config section matches");
    const auto key_upper = rest.substr(section.size() + 1);
    std::string key;
    for (const auto& [k, v] : cfg[section].items())
      if (detail::upper(k) == key_upper) key = k;
    if (key.empty()) throw ValidationError(var + ": section '" + section + "' has no such key");
    cfg[section][key] = detail::coerce(cfg[section][key], raw, var);
  }
}

struct Paths {
  std::filesystem::path corpus, lfs, patterns, templates, acts_model, relations_model, capture, sessions;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  double escalation_timeout_s = 120;
};

struct SimulateConfig {
  std::uint64_t seed = 42;
  std::string session_id = "sim";
  std::string canned_response = "Hmm, let me think about that.";
};

struct AppConfig {
  json raw;
  Paths paths;
  engine::SessionConfig session;
  nlu::ActModelConfig acts;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;
  nlu::RelationTrainConfig relations;
  ServerConfig server;
  SimulateConfig simulate;
  std::string greeting_pattern = engine::kDefaultGreetingPattern;
  json categories = json::array();
};

// Relative paths resolve against paths.root, which itself resolves against
// `base` (normally the config file's directory).
inline AppConfig config_from_json(const json& j, const std::filesystem::path& base) {
  AppConfig c;
  c.raw = j;
  try {
    const auto& p = j.at("paths");
    auto root = std::filesystem::path(p.value("root", "."));
    if (root.is_relative()) root = base / root;
    root = root.lexically_normal();
    auto path = [&](const char* key) {
      std::filesystem::path v(p.at(key).get<std::string>());
      return v.is_relative() ? (root / v).lexically_normal() : v;
    };
    c.paths = {path("corpus"),     path("lfs"),             path("patterns"), path("templates"),
               path("acts_model"), path("relations_model"), path("capture"),  path("sessions")};

    c.session.thresholds = engine::thresholds_from_json(j.at("thresholds"));
    c.session.scenario = engine::scenario_from_json(j.at("scenario"));
    c.session.persona = engine::persona_from_json(j.at("persona"));

    const auto& a = j.at("acts");
    c.acts.embed = nlu::embed_config_from_json(a, c.acts.embed);
    if (!text::is_power_of_two(c.acts.embed.dimension)) throw ValidationError("acts.dimension must be a power of two");
    auto& hp = c.acts.hp;
    hp.epochs = a.value("epochs", hp.epochs);
    hp.learning_rate = a.value("learning_rate", hp.learning_rate);
    hp.dropout_rate = a.value("dropout_rate", hp.dropout_rate);
    hp.hidden = a.value("hidden", hp.hidden);
    hp.batch_size = a.value("batch_size", hp.batch_size);
    hp.l2 = a.value("l2", hp.l2);
    hp.seed = a.value("seed", hp.seed);
    c.acts.mc_passes = a.value("mc_passes", c.acts.mc_passes);
    c.train_fraction = a.value("train_fraction", c.train_fraction);
    c.split_seed = a.value("split_seed", c.split_seed);

    const auto& r = j.at("relations");
    c.relations.sentences = r.value("sentences", c.relations.sentences);
    c.relations.seed = r.value("seed", c.relations.seed);

    const auto& s = j.at("server");
    c.server.host = s.value("host", c.server.host);
    c.server.port = s.value("port", c.server.port);
    c.server.escalation_timeout_s = s.value("escalation_timeout_s", c.server.escalation_timeout_s);
    if (!(c.server.escalation_timeout_s > 0)) throw ValidationError("server.escalation_timeout_s must be positive");

    const auto& sim = j.at("simulate");
    c.simulate.seed = sim.value("seed", c.simulate.seed);
    c.simulate.session_id = sim.value("session_id", c.simulate.session_id);
    c.simulate.canned_response = sim.value("canned_response", c.simulate.canned_response);

    const auto& rt = j.at("routing");
    c.greeting_pattern = rt.value("greeting_pattern", c.greeting_pattern);
    c.categories = rt.value("categories", json::array());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

inline AppConfig load_config(const std::filesystem::path& path, const Environment& env = process_environment()) {
  auto j = io::read_json(path);
  apply_env_overrides(j, env);
  return config_from_json(j, path.parent_path());
}

}  // namespace hitl::service
