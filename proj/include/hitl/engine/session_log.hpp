#pragma once

// Session log: a header line, one line per turn, one per ticket, and an end
// line carrying the counts so truncation is detectable.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "hitl/engine/session.hpp"

namespace hitl::engine {

inline json to_json(const SessionConfig& c) {
  return json{{"scenario", to_json(c.scenario)},
              {"persona", to_json(c.persona)},
              {"thresholds", to_json(c.thresholds)},
              {"seed", c.seed}};
}

inline SessionConfig session_config_from_json(const json& j, SessionConfig base = {}) {
  if (j.contains("scenario")) base.scenario = scenario_from_json(j["scenario"]);
  if (j.contains("persona")) base.persona = persona_from_json(j["persona"], base.persona);
  if (j.contains("thresholds")) base.thresholds = thresholds_from_json(j["thresholds"], base.thresholds);
  base.seed = j.value("seed", base.seed);
  base.validate();
  return base;
}

inline json to_json(const Turn& t) {
  json j{{"record", "turn"},
         {"index", t.index},
         {"speaker", to_string(t.speaker)},
         {"text", t.text},
         {"timestamp_ms", t.timestamp_ms}};
  if (t.act) j["act"] = nlu::to_json(*t.act);
  if (t.routing) j["routing"] = to_json(*t.routing);
  if (t.ticket_id) j["ticket_id"] = *t.ticket_id;
  return j;
}

inline Turn turn_from_json(const json& j) {
  Turn t;
  t.index = j.at("index").get<std::size_t>();
  t.speaker = parse_speaker(j.at("speaker").get<std::string>());
  t.text = j.at("text").get<std::string>();
  t.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  if (j.contains("act")) t.act = nlu::act_prediction_from_json(j["act"]);
  if (j.contains("routing")) t.routing = routing_from_json(j["routing"]);
  if (j.contains("ticket_id")) t.ticket_id = j["ticket_id"].get<std::string>();
  return t;
}

inline json to_json(const EscalationTicket& t) {
  json ents = json::array();
  for (const auto& e : t.entities) ents.push_back(nlu::to_json(e));
  json j{{"record", "ticket"},
         {"id", t.id},
         {"session_id", t.session_id},
         {"utterance", t.utterance},
         {"act", nlu::to_json(t.act)},
         {"entities", ents},
         {"routing", to_json(t.routing)},
         {"state", to_string(t.state)},
         {"timed_out", t.timed_out},
         {"turn_index", t.turn_index}};
  if (t.supervisor_response) j["supervisor_response"] = *t.supervisor_response;
  if (t.corrected_act) j["corrected_act"] = to_string(*t.corrected_act);
  return j;
}

inline EscalationTicket ticket_from_json(const json& j) {
  EscalationTicket t;
  t.id = j.at("id").get<std::string>();
  t.session_id = j.at("session_id").get<std::string>();
  t.utterance = j.at("utterance").get<std::string>();
  t.act = nlu::act_prediction_from_json(j.at("act"));
  for (const auto& e : j.at("entities")) t.entities.push_back(nlu::entity_from_json(e));
  t.routing = routing_from_json(j.at("routing"));
  t.state = parse_ticket_state(j.at("state").get<std::string>());
  t.timed_out = j.value("timed_out", false);
  t.turn_index = j.at("turn_index").get<std::size_t>();
  if (j.contains("supervisor_response")) t.supervisor_response = j["supervisor_response"].get<std::string>();
  if (j.contains("corrected_act")) t.corrected_act = parse_act(j["corrected_act"].get<std::string>());
  if (t.state == TicketState::Resolved && !t.supervisor_response)
    throw ValidationError("resolved ticket " + t.id + " has no supervisor_response");
  return t;
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_state(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (is.fail()) throw ValidationError("malformed rng state");
  return rng;
}

inline std::vector<json> session_records(const Session& s) {
  std::vector<json> rows;
  rows.push_back(json{{"record", "session"},
                      {"id", s.id},
                      {"config", to_json(s.config)},
                      {"open", s.open},
                      {"next_ticket", s.next_ticket},
                      {"rng", rng_state(s.rng)}});
  for (const auto& t : s.transcript) rows.push_back(to_json(t));
  for (const auto& t : s.tickets) rows.push_back(to_json(t));
  rows.push_back(json{{"record", "end"}, {"turns", s.transcript.size()}, {"tickets", s.tickets.size()}});
  return rows;
}

inline std::string session_log_text(const Session& s) {
  std::string out;
  for (const auto& r : session_records(s)) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline void persist_session(const Session& s, const std::filesystem::path& path) {
  io::write_file(path, session_log_text(s));
}

// Parses a whole log or throws; a partial session is never returned.
inline Session parse_session_log(const std::string& text, const std::string& origin = "") {
  std::vector<std::pair<std::size_t, json>> rows;
  {
    std::istringstream in(text);
    std::string raw;
    for (std::size_t n = 1; std::getline(in, raw); ++n) {
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        rows.emplace_back(n, json::parse(raw));
      } catch (const json::parse_error& e) {
        throw ParseError(n, (origin.empty() ? "" : origin + ": ") + e.what());
      }
    }
  }
  const auto fail = [&](std::size_t line, const std::string& what) -> ParseError {
    return ParseError(line, (origin.empty() ? "" : origin + ": ") + what);
  };
  if (rows.empty()) throw fail(1, "empty session log");

  Session s;
  bool ended = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [line, r] = rows[i];
    try {
      const auto kind = r.at("record").get<std::string>();
      if (ended) throw fail(line, "content after end record");
      if (i == 0) {
        if (kind != "session") throw fail(line, "first record must be the session header");
        s.id = r.at("id").get<std::string>();
        s.config = session_config_from_json(r.at("config"));
        s.open = r.at("open").get<bool>();
        s.next_ticket = r.at("next_ticket").get<std::size_t>();
        s.rng = rng_from_state(r.at("rng").get<std::string>());
      } else if (kind == "turn") {
        if (!s.tickets.empty()) throw fail(line, "turn after ticket records");
        auto t = turn_from_json(r);
        if (t.index != s.transcript.size()) throw fail(line, "turn index out of sequence");
        s.transcript.push_back(std::move(t));
      } else if (kind == "ticket") {
        s.tickets.push_back(ticket_from_json(r));
      } else if (kind == "end") {
        if (r.at("turns").get<std::size_t>() != s.transcript.size() ||
            r.at("tickets").get<std::size_t>() != s.tickets.size())
          throw fail(line, "record counts do not match the end record");
        ended = true;
      } else {
        throw fail(line, "unknown record type '" + kind + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw fail(line, e.what());
    }
  }
  if (!ended) throw fail(rows.back().first, "truncated session log: no end record");
  return s;
}

inline Session load_session(const std::filesystem::path& path) {
  return parse_session_log(io::read_file(path), path.string());
}

}  // namespace hitl::engine
