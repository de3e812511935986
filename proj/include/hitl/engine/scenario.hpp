#pragma once

// The scale-factor task: a left box and its image under a uniform scaling.

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "hitl/core.hpp"
#include "hitl/io.hpp"
#include "hitl/nlu/entities.hpp"

namespace hitl::engine {

using nlu::EntityKind;
using nlu::FigureSide;

using Dims = std::array<double, 3>;  // length, width, height

struct ScenarioState {
  Dims left_dims{5, 5, 5};
  double scale_factor = 2;

  void validate() const {
    for (double d : left_dims)
      if (!(d > 0) || !std::isfinite(d)) throw ValidationError("scenario dimensions must be positive");
    if (!(scale_factor > 0) || !std::isfinite(scale_factor))
      throw ValidationError("scale factor must be positive");
  }

  Dims right_dims() const {
    return {scale_factor * left_dims[0], scale_factor * left_dims[1], scale_factor * left_dims[2]};
  }
  Dims dims(FigureSide side) const { return side == FigureSide::Left ? left_dims : right_dims(); }
  double volume(FigureSide side) const {
    const auto d = dims(side);
    return d[0] * d[1] * d[2];
  }
  double volume_left() const { return volume(FigureSide::Left); }
  double volume_right() const { return volume(FigureSide::Right); }

  friend bool operator==(const ScenarioState&, const ScenarioState&) = default;
};

inline ScenarioState make_scenario(Dims left, double k) {
  ScenarioState s{left, k};
  s.validate();
  return s;
}

// Exact value of a quantity. The side is ignored for the scale factor.
inline double scenario_answer(const ScenarioState& s, EntityKind kind, FigureSide side = FigureSide::Right) {
  switch (kind) {
    case EntityKind::Length: return s.dims(side)[0];
    case EntityKind::Width: return s.dims(side)[1];
    case EntityKind::Height: return s.dims(side)[2];
    case EntityKind::Volume: return s.volume(side);
    case EntityKind::ScaleFactor: return s.scale_factor;
    case EntityKind::FigureRef: break;
  }
  throw ValidationError("scenario_answer: '" + std::string(nlu::to_string(kind)) + "' is not a quantity");
}

inline std::string_view to_string(FigureSide s) { return s == FigureSide::Left ? "left" : "right"; }

inline json to_json(const ScenarioState& s) {
  const auto r = s.right_dims();
  return json{{"left_dims", s.left_dims},
              {"scale_factor", s.scale_factor},
              {"right_dims", r},
              {"volume_left", s.volume_left()},
              {"volume_right", s.volume_right()}};
}

// Derived fields are recomputed, never trusted from input.
inline ScenarioState scenario_from_json(const json& j) {
  const auto d = j.at("left_dims").get<std::vector<double>>();
  if (d.size() != 3) throw ValidationError("left_dims must have three entries");
  return make_scenario({d[0], d[1], d[2]}, j.at("scale_factor").get<double>());
}

// ---------------------------------------------------------------------------
// Student persona

enum class Misconception { None, LinearVolumeScaling };

inline std::string_view to_string(Misconception m) {
  return m == Misconception::None ? "None" : "LinearVolumeScaling";
}

inline Misconception parse_misconception(std::string_view s) {
  if (s == "None") return Misconception::None;
  if (s == "LinearVolumeScaling") return Misconception::LinearVolumeScaling;
  throw ValidationError("unknown misconception: '" + std::string(s) + "'");
}

struct StudentPersona {
  Misconception kind = Misconception::None;
  double misconception_rate = 0.3;

  void validate() const {
    if (!(misconception_rate >= 0 && misconception_rate <= 1))
      throw ValidationError("misconception_rate must be in [0,1]");
  }
  friend bool operator==(const StudentPersona&, const StudentPersona&) = default;
};

// What a student holding the misconception believes the right volume is:
// the left volume times k instead of k cubed.
inline double misconceived_volume_right(const ScenarioState& s) { return s.scale_factor * s.volume_left(); }

inline json to_json(const StudentPersona& p) {
  return json{{"kind", to_string(p.kind)}, {"misconception_rate", p.misconception_rate}};
}

inline StudentPersona persona_from_json(const json& j, StudentPersona base = {}) {
  if (j.contains("kind")) base.kind = parse_misconception(j["kind"].get<std::string>());
  base.misconception_rate = j.value("misconception_rate", base.misconception_rate);
  base.validate();
  return base;
}

}  // namespace hitl::engine
