#pragma once

// Transport-independent message handling. The server feeds inbound
// messages in and delivers whatever comes out; tests drive it directly.

#include <map>
#include <string>
#include <vector>

#include "hitl/service/escalation_queue.hpp"
#include "hitl/service/wire.hpp"

namespace hitl::service {

using ConnectionId = std::uint64_t;

struct Destination {
  enum Kind { Trainee, Supervisor, AllSupervisors } kind;
  std::string session_id;   // Trainee
  ConnectionId connection;  // Supervisor
};

struct Delivery {
  Destination to;
  WireMessage message;
};

using Outbox = std::vector<Delivery>;

class Hub {
 public:
  Hub(engine::Runtime rt, engine::SessionConfig defaults, double escalation_timeout_s)
      : rt_(std::move(rt)), defaults_(defaults), timeout_ms_(static_cast<std::int64_t>(escalation_timeout_s * 1000)) {}

  // Sessions are created on first contact, seeded from the default seed and
  // the session id.
  engine::Session& session(const std::string& id) {
    auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
    auto cfg = defaults_;
    cfg.seed = defaults_.seed ^ text::fnv1a64(id);
    return sessions_.emplace(id, engine::new_session(id, cfg)).first->second;
  }

  const engine::Session* find_session(const std::string& id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  const EscalationQueue& queue() const { return queue_; }
  const engine::Runtime& runtime() const { return rt_; }

  Outbox on_trainee_connect(const std::string& session_id) {
    return {{{Destination::Trainee, session_id, 0}, state_snapshot(session(session_id))}};
  }

  Outbox on_trainee_message(const std::string& channel_session, const WireMessage& m) {
    Outbox out;
    if (m.type != MessageType::TraineeUtterance) {
      out.push_back(to_trainee(channel_session, error_message(channel_session, "unexpected_type",
                                                              "trainee channels accept TraineeUtterance only")));
      return out;
    }
    if (!m.session_id.empty() && m.session_id != channel_session) {
      out.push_back(to_trainee(channel_session, error_message(channel_session, "wrong_session",
                                                              "message session_id does not match the channel")));
      return out;
    }
    auto& s = session(channel_session);
    engine::TurnOutcome r;
    try {
      r = engine::handle_utterance(s, rt_, m.payload["text"].get<std::string>());
    } catch (const StateError& e) {
      out.push_back(to_trainee(s.id, error_message(s.id, "busy", e.what())));
      return out;
    }
    if (r.ticket_id) {
      const auto& t = *s.find_ticket(*r.ticket_id);
      queue_.push({s.id, t.id, rt_.clock() + timeout_ms_});
      out.push_back({{Destination::AllSupervisors, {}, 0}, escalation_request(s, t)});
      out.push_back(to_trainee(s.id, state_snapshot(s)));
    } else {
      out.push_back(to_trainee(s.id, agent_response(s.id, *r.response, engine::Handler::AI, s.transcript.size() - 1)));
    }
    return out;
  }

  // A new supervisor sees every pending ticket, oldest first.
  Outbox on_supervisor_connect(ConnectionId conn) {
    Outbox out;
    for (const auto& e : queue_.snapshot()) {
      const auto& s = sessions_.at(e.session_id);
      for (const auto& t : s.tickets)
        if (t.id == e.ticket_id) out.push_back({{Destination::Supervisor, {}, conn}, escalation_request(s, t)});
    }
    return out;
  }

  Outbox on_supervisor_message(ConnectionId conn, const WireMessage& m) {
    Outbox out;
    const auto reply = [&](std::string code, std::string msg) {
      out.push_back({{Destination::Supervisor, {}, conn}, error_message(m.session_id, std::move(code), std::move(msg))});
    };
    if (m.type != MessageType::SupervisorResponse) {
      reply("unexpected_type", "supervisor channels accept SupervisorResponse only");
      return out;
    }
    const auto ticket_id = m.payload["ticket_id"].get<std::string>();
    auto it = sessions_.find(m.session_id);
    if (it == sessions_.end()) {
      reply("unknown_session", "no session " + m.session_id);
      return out;
    }
    auto& s = it->second;
    const auto* t = s.find_ticket(ticket_id);
    if (!t) {
      reply("unknown_ticket", "no ticket " + ticket_id + " in session " + s.id);
      return out;
    }
    if (t->state == engine::TicketState::Resolved) {
      reply("already_resolved", "ticket " + ticket_id + " was already resolved");
      return out;
    }
    std::optional<DialogueAct> corrected;
    if (m.payload["corrected_act"].is_string()) corrected = parse_act(m.payload["corrected_act"].get<std::string>());
    try {
      engine::resolve_escalation(s, rt_, ticket_id, m.payload["text"].get<std::string>(), corrected);
    } catch (const ValidationError& e) {
      reply("invalid", e.what());
      return out;
    }
    queue_.take(ticket_id);
    finish_ticket(s, m.payload["text"].get<std::string>(), engine::Handler::Supervisor, out);
    return out;
  }

  // Answers every ticket whose deadline has passed with the apology template.
  Outbox expire(std::int64_t now_ms) {
    Outbox out;
    for (const auto& e : queue_.take_expired(now_ms)) {
      auto& s = sessions_.at(e.session_id);
      const auto text = engine::expire_escalation(s, rt_, e.ticket_id);
      finish_ticket(s, text, engine::Handler::AI, out);
    }
    return out;
  }

  WireMessage feedback(const std::string& session_id) {
    const auto* s = find_session(session_id);
    if (!s) return error_message(session_id, "unknown_session", "no session " + session_id);
    return session_feedback(session_id, engine::iqa_feedback(*s, *rt_.templates));
  }

 private:
  static Delivery to_trainee(const std::string& sid, WireMessage m) {
    return {{Destination::Trainee, sid, 0}, std::move(m)};
  }

  void finish_ticket(engine::Session& s, const std::string& text, engine::Handler by, Outbox& out) {
    out.push_back(to_trainee(s.id, agent_response(s.id, text, by, s.transcript.size() - 1)));
    out.push_back(to_trainee(s.id, state_snapshot(s)));
    out.push_back({{Destination::AllSupervisors, {}, 0}, state_snapshot(s)});
  }

  engine::Runtime rt_;
  engine::SessionConfig defaults_;
  std::int64_t timeout_ms_;
  std::map<std::string, engine::Session> sessions_;
  EscalationQueue queue_;
};

}  // namespace hitl::service
