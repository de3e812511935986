#pragma once

// Template-based student replies.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hitl/engine/scenario.hpp"
#include "hitl/nlu/relations.hpp"

namespace hitl::engine {

using Variants = std::vector<std::string>;

// act -> persona branch -> slot -> variants
struct StudentTemplates {
  std::map<std::string, std::map<std::string, std::map<std::string, Variants>>> acts;
  Variants repeat;
  Variants timeout;
  std::map<std::string, std::string> feedback;  // empty / high / medium / low

  const Variants* find(DialogueAct act, std::string_view branch, std::string_view slot) const {
    auto a = acts.find(std::string(to_string(act)));
    if (a == acts.end()) return nullptr;
    auto b = a->second.find(std::string(branch));
    if (b == a->second.end()) return nullptr;
    auto s = b->second.find(std::string(slot));
    return s == b->second.end() ? nullptr : &s->second;
  }

  // Persona branch first, then the None branch.
  const Variants& lookup(DialogueAct act, std::string_view branch, std::string_view slot) const {
    if (const auto* v = find(act, branch, slot)) return *v;
    if (const auto* v = find(act, "None", slot)) return *v;
    throw ValidationError("no template for " + std::string(to_string(act)) + "/" + std::string(slot));
  }
};

namespace detail {

inline Variants variants_from_json(const json& j, const std::string& where) {
  Variants v = j.is_string() ? Variants{j.get<std::string>()} : j.get<Variants>();
  if (v.empty()) throw ValidationError("templates: " + where + " has no variants");
  return v;
}

}  // namespace detail

inline StudentTemplates templates_from_json(const json& j) {
  StudentTemplates t;
  for (auto act : kAllActs) {
    const std::string name(to_string(act));
    for (const auto& [branch, slots] : j.at(name).items()) {
      parse_misconception(branch);
      for (const auto& [slot, v] : slots.items())
        t.acts[name][branch][slot] = detail::variants_from_json(v, name + "/" + branch + "/" + slot);
    }
  }
  t.repeat = detail::variants_from_json(j.at("Repeat"), "Repeat");
  t.timeout = detail::variants_from_json(j.at("Timeout"), "Timeout");
  for (const char* band : {"empty", "high", "medium", "low"}) t.feedback[band] = j.at("Feedback").at(band).get<std::string>();

  for (auto act : {DialogueAct::Factual, DialogueAct::Probing})
    for (const char* slot : {"ScaleFactor", "Volume", "Dimension", "Unknown"})
      if (!t.find(act, "None", slot))
        throw ValidationError("templates: missing " + std::string(to_string(act)) + "/None/" + slot);
  for (auto act : {DialogueAct::Expository, DialogueAct::Other})
    if (!t.find(act, "None", "Default"))
      throw ValidationError("templates: missing " + std::string(to_string(act)) + "/None/Default");
  return t;
}

inline StudentTemplates load_templates(const std::filesystem::path& path) {
  try {
    return templates_from_json(io::read_json(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

using Bindings = std::map<std::string, std::string>;

// Replaces {name} placeholders. Unbound names are an error.
inline std::string render(std::string_view tpl, const Bindings& b) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] != '{') {
      out += tpl[i++];
      continue;
    }
    const auto close = tpl.find('}', i);
    if (close == std::string_view::npos) throw ValidationError("unterminated placeholder in template");
    const std::string name(tpl.substr(i + 1, close - i - 1));
    auto it = b.find(name);
    if (it == b.end()) throw ValidationError("unbound template placeholder {" + name + "}");
    out += it->second;
    i = close + 1;
  }
  return out;
}

inline const std::string& pick(const Variants& v, Rng& rng) {
  return v.size() == 1 ? v.front() : v[static_cast<std::size_t>(uniform_index(rng, v.size()))];
}

// ---------------------------------------------------------------------------

struct QuantityQuery {
  EntityKind kind;
  FigureSide side;
};

// The quantity being asked about: the last quantity mention that carries no
// value of its own, else the last quantity mention. The side comes from the
// closest figure reference naming one, defaulting to the scaled box.
inline std::optional<QuantityQuery> target_quantity(const std::vector<nlu::EntityMention>& entities) {
  const nlu::EntityMention* target = nullptr;
  for (const auto& e : entities)
    if (nlu::is_quantity(e.kind) && !e.value) target = &e;
  if (!target)
    for (const auto& e : entities)
      if (nlu::is_quantity(e.kind)) target = &e;
  if (!target) return std::nullopt;

  QuantityQuery q{target->kind, FigureSide::Right};
  std::optional<std::size_t> best;
  for (const auto& e : entities) {
    const auto side = nlu::side_of(e);
    if (!side) continue;
    const std::size_t dist = e.token_begin > target->token_begin ? e.token_begin - target->token_begin
                                                                  : target->token_begin - e.token_begin;
    if (!best || dist < *best) {
      best = dist;
      q.side = *side;
    }
  }
  return q;
}

inline std::string_view slot_for(EntityKind k) {
  switch (k) {
    case EntityKind::ScaleFactor: return "ScaleFactor";
    case EntityKind::Volume: return "Volume";
    default: return "Dimension";
  }
}

inline std::string quantity_name(EntityKind k) {
  switch (k) {
    case EntityKind::Length: return "length";
    case EntityKind::Width: return "width";
    case EntityKind::Height: return "height";
    case EntityKind::Volume: return "volume";
    case EntityKind::ScaleFactor: return "scale factor";
    case EntityKind::FigureRef: break;
  }
  return "figure";
}

inline Bindings scenario_bindings(const ScenarioState& s) {
  const auto l = s.left_dims;
  const auto r = s.right_dims();
  return {{"k", format_number(s.scale_factor)},
          {"l0", format_number(l[0])},
          {"l1", format_number(l[1])},
          {"l2", format_number(l[2])},
          {"r0", format_number(r[0])},
          {"r1", format_number(r[1])},
          {"r2", format_number(r[2])},
          {"left_length", format_number(l[0])},
          {"right_length", format_number(r[0])},
          {"volume_left", format_number(s.volume_left())},
          {"volume_right", format_number(s.volume_right())}};
}

struct ResponseContext {
  DialogueAct act = DialogueAct::Other;
  std::vector<nlu::EntityMention> entities;
  bool greeting = false;
};

// Picks and fills a template. The persona's misconception is drawn from
// `rng` only for questions about the right box's volume.
inline std::string generate_student_response(const ResponseContext& ctx, const ScenarioState& state,
                                             const StudentPersona& persona, const StudentTemplates& templates,
                                             Rng& rng) {
  auto b = scenario_bindings(state);
  std::string branch = "None";
  std::string slot;

  if (ctx.act == DialogueAct::Factual || ctx.act == DialogueAct::Probing) {
    const auto q = target_quantity(ctx.entities);
    if (!q) {
      slot = "Unknown";
    } else {
      slot = slot_for(q->kind);
      double value = scenario_answer(state, q->kind, q->side);
      if (q->kind == EntityKind::Volume && q->side == FigureSide::Right &&
          persona.kind == Misconception::LinearVolumeScaling && uniform01(rng) < persona.misconception_rate) {
        value = misconceived_volume_right(state);
        branch = std::string(to_string(persona.kind));
      }
      b["value"] = format_number(value);
      b["quantity"] = quantity_name(q->kind);
      b["side"] = std::string(to_string(q->side));
      if (q->kind != EntityKind::ScaleFactor) {
        b["left_value"] = format_number(scenario_answer(state, q->kind, FigureSide::Left));
        b["right_value"] = format_number(scenario_answer(state, q->kind, FigureSide::Right));
      }
    }
  } else {
    slot = ctx.greeting && templates.find(ctx.act, "None", "Greeting") ? "Greeting" : "Default";
  }
  return render(pick(templates.lookup(ctx.act, branch, slot), rng), b);
}

inline std::string repeat_response(const StudentTemplates& t, std::string_view previous, Rng& rng) {
  return render(pick(t.repeat, rng), {{"previous", std::string(previous)}});
}

inline std::string timeout_response(const StudentTemplates& t, Rng& rng) { return render(pick(t.timeout, rng), {}); }

}  // namespace hitl::engine
