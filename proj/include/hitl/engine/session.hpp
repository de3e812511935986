#pragma once

// One trainee conversation: understanding, routing, replies, escalations and
// feedback.

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hitl/engine/responses.hpp"
#include "hitl/engine/routing.hpp"
#include "hitl/engine/scenario.hpp"
#include "hitl/nlu/nlu.hpp"

namespace hitl::engine {

enum class Speaker { Trainee, StudentAI, StudentViaSupervisor };

inline std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::Trainee: return "Trainee";
    case Speaker::StudentAI: return "StudentAI";
    case Speaker::StudentViaSupervisor: return "StudentViaSupervisor";
  }
  return "?";
}

inline Speaker parse_speaker(std::string_view s) {
  for (auto sp : {Speaker::Trainee, Speaker::StudentAI, Speaker::StudentViaSupervisor})
    if (to_string(sp) == s) return sp;
  throw ValidationError("unknown speaker: '" + std::string(s) + "'");
}

struct Turn {
  std::size_t index = 0;
  Speaker speaker = Speaker::Trainee;
  std::string text;
  std::optional<nlu::ActPrediction> act;
  std::optional<RoutingDecision> routing;
  std::int64_t timestamp_ms = 0;
  std::optional<std::string> ticket_id;
  friend bool operator==(const Turn&, const Turn&) = default;
};

enum class TicketState { Pending, Resolved };

inline std::string_view to_string(TicketState s) { return s == TicketState::Pending ? "Pending" : "Resolved"; }

inline TicketState parse_ticket_state(std::string_view s) {
  if (s == "Pending") return TicketState::Pending;
  if (s == "Resolved") return TicketState::Resolved;
  throw ValidationError("unknown ticket state: '" + std::string(s) + "'");
}

struct EscalationTicket {
  std::string id;
  std::string session_id;
  std::string utterance;
  nlu::ActPrediction act;
  std::vector<nlu::EntityMention> entities;
  RoutingDecision routing;
  TicketState state = TicketState::Pending;
  std::optional<std::string> supervisor_response;
  std::optional<DialogueAct> corrected_act;
  bool timed_out = false;
  std::size_t turn_index = 0;  // the trainee turn that raised it
  friend bool operator==(const EscalationTicket&, const EscalationTicket&) = default;
};

struct TrainingExample {
  std::string text;
  DialogueAct act;
  std::string source = "supervisor";
};

inline json to_json(const TrainingExample& e) {
  return json{{"text", e.text}, {"act", to_string(e.act)}, {"source", e.source}};
}

struct SessionConfig {
  ScenarioState scenario;
  StudentPersona persona;
  Thresholds thresholds;
  std::uint64_t seed = 0;

  void validate() const {
    scenario.validate();
    persona.validate();
    thresholds.validate();
  }
  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct Session {
  std::string id;
  SessionConfig config;
  Rng rng;
  std::vector<Turn> transcript;
  std::vector<EscalationTicket> tickets;
  bool open = true;
  std::size_t next_ticket = 1;

  const EscalationTicket* pending_ticket() const {
    for (const auto& t : tickets)
      if (t.state == TicketState::Pending) return &t;
    return nullptr;
  }
  EscalationTicket* find_ticket(std::string_view ticket_id) {
    for (auto& t : tickets)
      if (t.id == ticket_id) return &t;
    return nullptr;
  }
  friend bool operator==(const Session&, const Session&) = default;
};

inline Session new_session(std::string id, const SessionConfig& cfg) {
  cfg.validate();
  Session s;
  s.id = std::move(id);
  s.config = cfg;
  s.rng.seed(cfg.seed);
  return s;
}

// ---------------------------------------------------------------------------
// Shared, read-only resources plus the time source.

using Clock = std::function<std::int64_t()>;

inline Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

// Deterministic clock for batch replay: start, start + step, ...
inline Clock logical_clock(std::int64_t start = 0, std::int64_t step = 1000) {
  auto next = std::make_shared<std::int64_t>(start);
  return [next, step] {
    const auto t = *next;
    *next += step;
    return t;
  };
}

inline constexpr const char* kDefaultGreetingPattern = R"(^\s*(hi|hello|hey|good (morning|afternoon|evening))\b)";

struct Runtime {
  std::shared_ptr<const nlu::NluModels> models;
  std::shared_ptr<const StudentTemplates> templates;
  Pattern greeting{kDefaultGreetingPattern};
  Clock clock = system_clock_ms();
  std::optional<std::filesystem::path> capture_path;
};

struct TurnOutcome {
  Handler handler = Handler::AI;
  std::optional<std::string> response;   // AI path
  std::optional<std::string> ticket_id;  // Supervisor path
  nlu::Understanding understanding;
  RoutingDecision routing;
};

namespace detail {

inline Turn& append_turn(Session& s, const Runtime& rt, Speaker who, std::string text) {
  Turn t;
  t.index = s.transcript.size();
  t.speaker = who;
  t.text = std::move(text);
  t.timestamp_ms = rt.clock();
  s.transcript.push_back(std::move(t));
  return s.transcript.back();
}

inline const Turn* last_turn_by(const Session& s, std::initializer_list<Speaker> who) {
  for (auto it = s.transcript.rbegin(); it != s.transcript.rend(); ++it)
    for (auto w : who)
      if (it->speaker == w) return &*it;
  return nullptr;
}

inline std::optional<double> repeat_score(const nlu::NluModels& m, const Session& s, std::string_view text) {
  const auto* prev = last_turn_by(s, {Speaker::Trainee});
  if (!prev) return std::nullopt;
  const auto a = text::embed(prev->text, m.similarity_embed);
  const auto b = text::embed(text, m.similarity_embed);
  if (a.empty() || b.empty()) return std::nullopt;
  return text::cosine_similarity(a, b);
}

}  // namespace detail

inline TurnOutcome handle_utterance(Session& s, const Runtime& rt, std::string_view text) {
  if (!s.open) throw StateError("session " + s.id + " is closed");
  if (const auto* p = s.pending_ticket())
    throw StateError("session " + s.id + " is waiting for the supervisor on ticket " + p->id);

  TurnOutcome out;
  const std::uint64_t mc_seed = s.rng();
  out.understanding = nlu::understand(*rt.models, text, mc_seed);
  out.understanding.act.uncertainty.samples.clear();
  const auto& u = out.understanding;
  const auto score = detail::repeat_score(*rt.models, s, text);
  out.routing = route(u.act, u.relations, score, s.config.thresholds, rt.greeting.matches(text));
  out.handler = out.routing.handler;

  const std::string previous_reply = [&] {
    const auto* t = detail::last_turn_by(s, {Speaker::StudentAI, Speaker::StudentViaSupervisor});
    return t ? t->text : std::string();
  }();

  auto& trainee = detail::append_turn(s, rt, Speaker::Trainee, std::string(text));
  trainee.act = u.act;
  trainee.routing = out.routing;

  if (out.handler == Handler::Supervisor) {
    EscalationTicket t;
    t.id = s.id + "-" + std::to_string(s.next_ticket++);
    t.session_id = s.id;
    t.utterance = std::string(text);
    t.act = u.act;
    t.entities = u.entities;
    t.routing = out.routing;
    t.turn_index = trainee.index;
    trainee.ticket_id = t.id;
    out.ticket_id = t.id;
    s.tickets.push_back(std::move(t));
    return out;
  }

  std::string reply;
  if (out.routing.fired(Trigger::TurnRepeat) && !previous_reply.empty()) {
    reply = repeat_response(*rt.templates, previous_reply, s.rng);
  } else {
    ResponseContext ctx{u.act.act, u.entities, out.routing.greeting};
    reply = generate_student_response(ctx, s.config.scenario, s.config.persona, *rt.templates, s.rng);
  }
  detail::append_turn(s, rt, Speaker::StudentAI, reply);
  out.response = std::move(reply);
  return out;
}

namespace detail {

inline EscalationTicket& pending_or_throw(Session& s, std::string_view ticket_id) {
  auto* t = s.find_ticket(ticket_id);
  if (!t) throw StateError("unknown ticket " + std::string(ticket_id) + " in session " + s.id);
  if (t->state != TicketState::Pending) throw StateError("ticket " + t->id + " is already resolved");
  return *t;
}

}  // namespace detail

// The supervisor answers as the student. A corrected act becomes a training
// example, appended to the capture file when one is configured.
inline std::optional<TrainingExample> resolve_escalation(Session& s, const Runtime& rt, std::string_view ticket_id,
                                                         std::string_view supervisor_text,
                                                         std::optional<DialogueAct> corrected_act = std::nullopt) {
  auto& t = detail::pending_or_throw(s, ticket_id);
  if (supervisor_text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ValidationError("supervisor response must not be empty");

  std::optional<TrainingExample> example;
  if (corrected_act) {
    example = TrainingExample{t.utterance, *corrected_act};
    if (rt.capture_path) io::append_jsonl(*rt.capture_path, to_json(*example));
  }
  t.state = TicketState::Resolved;
  t.supervisor_response = std::string(supervisor_text);
  t.corrected_act = corrected_act;
  detail::append_turn(s, rt, Speaker::StudentViaSupervisor, std::string(supervisor_text));
  return example;
}

// No supervisor answered in time: the student apologises and the ticket is
// closed with a timeout marker.
inline std::string expire_escalation(Session& s, const Runtime& rt, std::string_view ticket_id) {
  auto& t = detail::pending_or_throw(s, ticket_id);
  auto reply = timeout_response(*rt.templates, s.rng);
  t.state = TicketState::Resolved;
  t.supervisor_response = reply;
  t.timed_out = true;
  detail::append_turn(s, rt, Speaker::StudentAI, reply);
  return reply;
}

inline void close_session(Session& s) { s.open = false; }

// ---------------------------------------------------------------------------
// Feedback

struct FeedbackReport {
  std::array<std::size_t, kNumActs> counts{};
  double probing_ratio = 0;
  std::size_t total = 0;
  std::string narrative;
};

// The act of a trainee turn, with a supervisor correction taking precedence.
inline std::optional<DialogueAct> effective_act(const Session& s, const Turn& t) {
  if (t.speaker != Speaker::Trainee) return std::nullopt;
  if (t.ticket_id)
    for (const auto& tk : s.tickets)
      if (tk.id == *t.ticket_id && tk.corrected_act) return tk.corrected_act;
  if (t.act) return t.act->act;
  return std::nullopt;
}

inline FeedbackReport iqa_feedback(const Session& s, const StudentTemplates& templates) {
  FeedbackReport r;
  for (const auto& t : s.transcript)
    if (const auto a = effective_act(s, t)) {
      ++r.counts[index_of(*a)];
      ++r.total;
    }
  const auto probing = r.counts[index_of(DialogueAct::Probing)];
  r.probing_ratio = r.total == 0 ? 0.0 : static_cast<double>(probing) / static_cast<double>(r.total);
  const char* band = r.total == 0 ? "empty" : r.probing_ratio >= 0.5 ? "high" : r.probing_ratio >= 0.2 ? "medium" : "low";
  r.narrative = render(templates.feedback.at(band),
                       {{"percent", std::to_string(std::lround(100 * r.probing_ratio))},
                        {"total", std::to_string(r.total)}});
  return r;
}

inline json to_json(const FeedbackReport& r) {
  json counts = json::object();
  for (auto a : kAllActs) counts[std::string(to_string(a))] = r.counts[index_of(a)];
  return json{{"counts", counts}, {"probing_ratio", r.probing_ratio}, {"total", r.total}, {"narrative", r.narrative}};
}

inline FeedbackReport feedback_from_json(const json& j) {
  FeedbackReport r;
  for (auto a : kAllActs) r.counts[index_of(a)] = j.at("counts").at(std::string(to_string(a))).get<std::size_t>();
  r.probing_ratio = j.at("probing_ratio").get<double>();
  r.total = j.at("total").get<std::size_t>();
  r.narrative = j.at("narrative").get<std::string>();
  return r;
}

// ---------------------------------------------------------------------------
// Routing summary over many sessions, grouped by utterance category.

struct Category {
  std::string name;
  Pattern pattern;
  bool varied_based_on_turn = false;
};

struct SummaryRow {
  std::string category;
  std::size_t ai = 0;
  std::size_t supervisor = 0;
  bool varied_based_on_turn = false;
  bool mixed() const { return ai > 0 && supervisor > 0; }
};

inline constexpr const char* kUncategorized = "uncategorized";

inline std::vector<Category> categories_from_json(const json& j) {
  std::vector<Category> out;
  for (const auto& c : j) {
    out.push_back({c.at("name").get<std::string>(), Pattern(c.at("pattern").get<std::string>()),
                   c.value("varied_based_on_turn", false)});
  }
  return out;
}

// One row per configured category, in order, plus an uncategorized row when
// some utterance matched nothing. The first matching category wins.
inline std::vector<SummaryRow> routing_summary(const std::vector<const Session*>& sessions,
                                               const std::vector<Category>& categories) {
  if (sessions.empty()) throw ValidationError("routing_summary needs at least one session");
  std::vector<SummaryRow> rows;
  for (const auto& c : categories) rows.push_back({c.name, 0, 0, c.varied_based_on_turn});
  SummaryRow other{kUncategorized};
  for (const auto* s : sessions)
    for (const auto& t : s->transcript) {
      if (t.speaker != Speaker::Trainee || !t.routing) continue;
      SummaryRow* row = &other;
      for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i].pattern.matches(t.text)) {
          row = &rows[i];
          break;
        }
      (t.routing->handler == Handler::AI ? row->ai : row->supervisor)++;
    }
  if (other.ai + other.supervisor > 0) rows.push_back(other);
  return rows;
}

inline json to_json(const SummaryRow& r) {
  return json{{"category", r.category},
              {"ai", r.ai},
              {"supervisor", r.supervisor},
              {"mixed", r.mixed()},
              {"varied_based_on_turn", r.varied_based_on_turn}};
}

}  // namespace hitl::engine
