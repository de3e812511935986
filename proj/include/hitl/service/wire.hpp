#pragma once

// Wire messages. Each message is one JSON document:
//   {"type": <tag>, "session_id": <string>, "payload": {...}}

#include <string>

#include "hitl/engine/session.hpp"

namespace hitl::service {

enum class MessageType {
  TraineeUtterance,
  AgentResponse,
  EscalationRequest,
  SupervisorResponse,
  StateSnapshot,
  SessionFeedback,
  Error
};

inline constexpr std::array<MessageType, 7> kAllMessageTypes = {
    MessageType::TraineeUtterance, MessageType::AgentResponse, MessageType::EscalationRequest,
    MessageType::SupervisorResponse, MessageType::StateSnapshot, MessageType::SessionFeedback, MessageType::Error};

inline std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::TraineeUtterance: return "TraineeUtterance";
    case MessageType::AgentResponse: return "AgentResponse";
    case MessageType::EscalationRequest: return "EscalationRequest";
    case MessageType::SupervisorResponse: return "SupervisorResponse";
    case MessageType::StateSnapshot: return "StateSnapshot";
    case MessageType::SessionFeedback: return "SessionFeedback";
    case MessageType::Error: return "Error";
  }
  return "?";
}

inline MessageType parse_message_type(std::string_view s) {
  for (auto t : kAllMessageTypes)
    if (to_string(t) == s) return t;
  throw ValidationError("unknown message type: '" + std::string(s) + "'");
}

struct WireMessage {
  MessageType type = MessageType::Error;
  std::string session_id;
  json payload = json::object();

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

enum class Status { Idle, Thinking };

inline std::string_view to_string(Status s) { return s == Status::Idle ? "idle" : "thinking"; }

namespace detail {

inline void require(const json& p, const char* key, json::value_t kind, MessageType t, bool nullable = false) {
  const auto where = std::string(to_string(t)) + ".payload." + key;
  if (!p.contains(key)) throw ValidationError(where + " is missing");
  const auto& v = p[key];
  if (nullable && v.is_null()) return;
  const bool ok = kind == json::value_t::number_float ? v.is_number()
                  : kind == json::value_t::number_unsigned ? v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)
                                                           : v.type() == kind;
  if (!ok) throw ValidationError(where + " has the wrong type");
}

}  // namespace detail

// Checks the payload shape for the message's type.
inline void validate(const WireMessage& m) {
  using V = json::value_t;
  const auto& p = m.payload;
  if (!p.is_object()) throw ValidationError("payload must be an object");
  const auto t = m.type;
  switch (t) {
    case MessageType::TraineeUtterance:
      detail::require(p, "text", V::string, t);
      break;
    case MessageType::AgentResponse:
      detail::require(p, "text", V::string, t);
      detail::require(p, "handler", V::string, t);
      engine::parse_handler(p["handler"].get<std::string>());
      detail::require(p, "turn_index", V::number_unsigned, t);
      break;
    case MessageType::EscalationRequest: {
      detail::require(p, "ticket", V::object, t);
      const auto& k = p["ticket"];
      for (const char* key : {"id", "utterance", "act"}) detail::require(k, key, V::string, t);
      parse_act(k["act"].get<std::string>());
      for (const char* key : {"normalized_entropy", "variation_ratio"}) detail::require(k, key, V::number_float, t);
      detail::require(k, "probabilities", V::object, t);
      detail::require(k, "triggers", V::array, t);
      for (const auto& tr : k["triggers"]) engine::parse_trigger(tr.get<std::string>());
      detail::require(k, "scores", V::object, t);
      detail::require(k, "entities", V::array, t);
      detail::require(k, "context", V::array, t);
      break;
    }
    case MessageType::SupervisorResponse:
      detail::require(p, "ticket_id", V::string, t);
      detail::require(p, "text", V::string, t);
      detail::require(p, "corrected_act", V::string, t, true);
      if (p["corrected_act"].is_string()) parse_act(p["corrected_act"].get<std::string>());
      break;
    case MessageType::StateSnapshot:
      detail::require(p, "scenario", V::object, t);
      detail::require(p, "status", V::string, t);
      if (p["status"] != "idle" && p["status"] != "thinking") throw ValidationError("StateSnapshot.payload.status must be idle or thinking");
      detail::require(p, "pending_ticket", V::string, t, true);
      detail::require(p, "turns", V::number_unsigned, t);
      break;
    case MessageType::SessionFeedback:
      detail::require(p, "report", V::object, t);
      try {
        engine::feedback_from_json(p["report"]);
      } catch (const json::exception& e) {
        throw ValidationError(std::string("SessionFeedback.payload.report: ") + e.what());
      }
      break;
    case MessageType::Error:
      detail::require(p, "code", V::string, t);
      detail::require(p, "message", V::string, t);
      break;
  }
}

inline json to_json(const WireMessage& m) {
  return json{{"type", to_string(m.type)}, {"session_id", m.session_id}, {"payload", m.payload}};
}

inline std::string serialize(const WireMessage& m) { return to_json(m).dump(); }

inline WireMessage message_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw ValidationError("message has no type tag");
  if (!j.contains("session_id") || !j["session_id"].is_string()) throw ValidationError("message has no session_id");
  WireMessage m;
  m.type = parse_message_type(j["type"].get<std::string>());
  m.session_id = j["session_id"].get<std::string>();
  m.payload = j.contains("payload") ? j["payload"] : json::object();
  validate(m);
  return m;
}

inline WireMessage parse_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed message: ") + e.what());
  }
  return message_from_json(j);
}

// ---------------------------------------------------------------------------
// Builders

inline WireMessage trainee_utterance(std::string session_id, std::string text) {
  return {MessageType::TraineeUtterance, std::move(session_id), json{{"text", std::move(text)}}};
}

inline WireMessage agent_response(std::string session_id, std::string text, engine::Handler handler,
                                  std::size_t turn_index) {
  return {MessageType::AgentResponse, std::move(session_id),
          json{{"text", std::move(text)}, {"handler", engine::to_string(handler)}, {"turn_index", turn_index}}};
}

// Ticket summary for the supervisor panel, with the last `context_turns`
// turns of the transcript.
inline WireMessage escalation_request(const engine::Session& s, const engine::EscalationTicket& t,
                                      std::size_t context_turns = 10) {
  json probs = json::object();
  for (auto a : kAllActs) probs[std::string(to_string(a))] = t.act.uncertainty.mean.at(index_of(a));
  json ents = json::array();
  for (const auto& e : t.entities) {
    json je{{"kind", nlu::to_string(e.kind)}, {"surface", e.surface}};
    je["value"] = e.value ? json(*e.value) : json(nullptr);
    ents.push_back(je);
  }
  json context = json::array();
  const std::size_t from = s.transcript.size() > context_turns ? s.transcript.size() - context_turns : 0;
  for (std::size_t i = from; i < s.transcript.size(); ++i)
    context.push_back({{"speaker", engine::to_string(s.transcript[i].speaker)}, {"text", s.transcript[i].text}});
  const auto routing = engine::to_json(t.routing);
  return {MessageType::EscalationRequest, s.id,
          json{{"ticket",
                {{"id", t.id},
                 {"utterance", t.utterance},
                 {"act", to_string(t.act.act)},
                 {"normalized_entropy", t.act.uncertainty.normalized_entropy},
                 {"variation_ratio", t.act.uncertainty.variation_ratio},
                 {"probabilities", probs},
                 {"triggers", routing["triggers"]},
                 {"scores", routing["scores"]},
                 {"entities", ents},
                 {"context", context}}}}};
}

inline WireMessage supervisor_response(std::string session_id, std::string ticket_id, std::string text,
                                       std::optional<DialogueAct> corrected = std::nullopt) {
  json p{{"ticket_id", std::move(ticket_id)}, {"text", std::move(text)}};
  p["corrected_act"] = corrected ? json(to_string(*corrected)) : json(nullptr);
  return {MessageType::SupervisorResponse, std::move(session_id), std::move(p)};
}

inline WireMessage state_snapshot(const engine::Session& s) {
  const auto* pending = s.pending_ticket();
  json p{{"scenario", engine::to_json(s.config.scenario)},
         {"status", to_string(pending ? Status::Thinking : Status::Idle)},
         {"turns", s.transcript.size()}};
  p["pending_ticket"] = pending ? json(pending->id) : json(nullptr);
  return {MessageType::StateSnapshot, s.id, std::move(p)};
}

inline WireMessage session_feedback(std::string session_id, const engine::FeedbackReport& r) {
  return {MessageType::SessionFeedback, std::move(session_id), json{{"report", engine::to_json(r)}}};
}

inline WireMessage error_message(std::string session_id, std::string code, std::string message) {
  return {MessageType::Error, std::move(session_id), json{{"code", std::move(code)}, {"message", std::move(message)}}};
}

}  // namespace hitl::service
