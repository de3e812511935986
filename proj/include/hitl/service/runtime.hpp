#pragma once

// Loading trained artifacts, and batch replay of scripted utterances.

#include <filesystem>
#include <string>
#include <vector>

#include "hitl/engine/session_log.hpp"
#include "hitl/service/config.hpp"

namespace hitl::service {

inline void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p))
    throw IoError(std::string(what) + " not found at " + p.string() + " (run `hitl train` first?)");
}

inline std::shared_ptr<const nlu::NluModels> load_models(const AppConfig& c) {
  require_file(c.paths.acts_model, "dialogue-act model");
  require_file(c.paths.relations_model, "relation model");
  require_file(c.paths.patterns, "entity pattern file");
  auto m = std::make_shared<nlu::NluModels>();
  m->acts = nlu::load_act_model(c.paths.acts_model);
  m->relations = nlu::load_relation_model(c.paths.relations_model);
  m->patterns = nlu::load_entity_patterns(c.paths.patterns);
  return m;
}

inline engine::Runtime make_runtime(const AppConfig& c, std::shared_ptr<const nlu::NluModels> models) {
  require_file(c.paths.templates, "template file");
  engine::Runtime rt;
  rt.models = std::move(models);
  rt.templates = std::make_shared<engine::StudentTemplates>(engine::load_templates(c.paths.templates));
  rt.greeting = engine::Pattern(c.greeting_pattern);
  rt.capture_path = c.paths.capture;
  return rt;
}

// Script format: one utterance per line; blank lines and lines starting
// with '#' are skipped.
inline std::vector<std::string> parse_script(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.push_back(line.substr(b));
  }
  return out;
}

// Runs every utterance through a fresh session on a logical clock; each
// escalation is answered with `canned`. Identical inputs give identical
// sessions.
inline engine::Session simulate(const engine::Runtime& base, const engine::SessionConfig& cfg,
                                const std::string& session_id, const std::vector<std::string>& utterances,
                                const std::string& canned) {
  engine::Runtime rt = base;
  rt.clock = engine::logical_clock();
  rt.capture_path.reset();
  auto s = engine::new_session(session_id, cfg);
  for (const auto& u : utterances) {
    const auto out = engine::handle_utterance(s, rt, u);
    if (out.ticket_id) engine::resolve_escalation(s, rt, *out.ticket_id, canned);
  }
  engine::close_session(s);
  return s;
}

}  // namespace hitl::service
