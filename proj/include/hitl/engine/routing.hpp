#pragma once

// Uncertainty routing: decide whether the AI student answers or the
// supervisor takes over.

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "hitl/nlu/acts.hpp"
#include "hitl/nlu/relations.hpp"

namespace hitl::engine {

struct Thresholds {
  double act = 0.55;
  double ood = 0.40;
  double rel_margin = 0.15;
  double repeat = 0.90;

  void validate() const {
    for (double v : {act, ood, rel_margin, repeat})
      if (!(v >= 0 && v <= 1)) throw ValidationError("routing thresholds must lie in [0,1]");
  }
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

enum class Trigger { ActUncertainty, RelationUncertainty, TurnRepeat, OutOfDomain };
enum class Handler { AI, Supervisor };

inline std::string_view to_string(Trigger t) {
  switch (t) {
    case Trigger::ActUncertainty: return "ActUncertainty";
    case Trigger::RelationUncertainty: return "RelationUncertainty";
    case Trigger::TurnRepeat: return "TurnRepeat";
    case Trigger::OutOfDomain: return "OutOfDomain";
  }
  return "?";
}

inline Trigger parse_trigger(std::string_view s) {
  for (auto t : {Trigger::ActUncertainty, Trigger::RelationUncertainty, Trigger::TurnRepeat, Trigger::OutOfDomain})
    if (to_string(t) == s) return t;
  throw ValidationError("unknown trigger: '" + std::string(s) + "'");
}

inline std::string_view to_string(Handler h) { return h == Handler::AI ? "AI" : "Supervisor"; }

inline Handler parse_handler(std::string_view s) {
  if (s == "AI") return Handler::AI;
  if (s == "Supervisor") return Handler::Supervisor;
  throw ValidationError("unknown handler: '" + std::string(s) + "'");
}

inline bool escalates(Trigger t) { return t != Trigger::TurnRepeat; }

struct RoutingDecision {
  Handler handler = Handler::AI;
  std::set<Trigger> triggers;  // fired triggers, including the non-escalating TurnRepeat
  std::map<Trigger, double> scores;
  Thresholds thresholds;
  bool greeting = false;  // fast path taken

  bool fired(Trigger t) const { return triggers.count(t) > 0; }
  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

// Smallest |p - 0.5| over candidates that pair an entity with a value.
inline std::optional<double> relation_margin(const std::vector<nlu::RelationCandidate>& relations) {
  std::optional<double> m;
  for (const auto& r : relations) {
    if (!r.value) continue;
    const double d = std::abs(r.probability - nlu::kRelationThreshold);
    if (!m || d < *m) m = d;
  }
  return m;
}

// `greeting` says the utterance matched the greeting pattern; together with
// a confident Other prediction it bypasses the out-of-domain check.
inline RoutingDecision route(const nlu::ActPrediction& act, const std::vector<nlu::RelationCandidate>& relations,
                             std::optional<double> turn_score, const Thresholds& th, bool greeting = false) {
  th.validate();
  RoutingDecision d;
  d.thresholds = th;
  const double h = act.uncertainty.normalized_entropy;

  d.scores[Trigger::ActUncertainty] = h;
  if (h > th.act) d.triggers.insert(Trigger::ActUncertainty);

  if (const auto m = relation_margin(relations)) {
    d.scores[Trigger::RelationUncertainty] = *m;
    if (*m < th.rel_margin) d.triggers.insert(Trigger::RelationUncertainty);
  }

  if (turn_score) {
    d.scores[Trigger::TurnRepeat] = *turn_score;
    if (*turn_score > th.repeat) d.triggers.insert(Trigger::TurnRepeat);
  }

  if (act.act == DialogueAct::Other) {
    d.greeting = greeting && h <= th.act;
    d.scores[Trigger::OutOfDomain] = h;
    if (!d.greeting && h > th.ood) d.triggers.insert(Trigger::OutOfDomain);
  }

  d.handler = Handler::AI;
  for (auto t : d.triggers)
    if (escalates(t)) d.handler = Handler::Supervisor;
  return d;
}

inline json to_json(const Thresholds& t) {
  return json{{"act", t.act}, {"ood", t.ood}, {"rel_margin", t.rel_margin}, {"repeat", t.repeat}};
}

inline Thresholds thresholds_from_json(const json& j, Thresholds base = {}) {
  base.act = j.value("act", base.act);
  base.ood = j.value("ood", base.ood);
  base.rel_margin = j.value("rel_margin", base.rel_margin);
  base.repeat = j.value("repeat", base.repeat);
  base.validate();
  return base;
}

inline json to_json(const RoutingDecision& d) {
  json triggers = json::array();
  for (auto t : d.triggers) triggers.push_back(to_string(t));
  json scores = json::object();
  for (const auto& [t, v] : d.scores) scores[std::string(to_string(t))] = v;
  return json{{"handler", to_string(d.handler)},
              {"triggers", triggers},
              {"scores", scores},
              {"thresholds", to_json(d.thresholds)},
              {"greeting", d.greeting}};
}

inline RoutingDecision routing_from_json(const json& j) {
  RoutingDecision d;
  d.handler = parse_handler(j.at("handler").get<std::string>());
  for (const auto& t : j.at("triggers")) d.triggers.insert(parse_trigger(t.get<std::string>()));
  for (const auto& [k, v] : j.at("scores").items()) d.scores[parse_trigger(k)] = v.get<double>();
  d.thresholds = thresholds_from_json(j.at("thresholds"));
  d.greeting = j.value("greeting", false);
  return d;
}

// Case-insensitive search pattern, compiled once.
class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(std::string source) : source_(std::move(source)) {
    try {
      re_ = std::regex(source_, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw CompileError(0, "'" + source_ + "': " + e.what());
    }
  }
  bool matches(std::string_view text) const {
    return !source_.empty() && std::regex_search(text.begin(), text.end(), re_);
  }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::regex re_;
};

}  // namespace hitl::engine
