#pragma once

// Rule-based entity matcher for the scale-factor scenario.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hitl/core.hpp"
#include "hitl/io.hpp"
#include "hitl/text_features.hpp"

namespace hitl::nlu {

enum class EntityKind { Length, Width, Height, ScaleFactor, Volume, FigureRef };

inline constexpr std::array<EntityKind, 6> kAllEntityKinds = {EntityKind::Length,      EntityKind::Width,
                                                              EntityKind::Height,      EntityKind::ScaleFactor,
                                                              EntityKind::Volume,      EntityKind::FigureRef};

inline std::string_view to_string(EntityKind k) {
  switch (k) {
    case EntityKind::Length: return "Length";
    case EntityKind::Width: return "Width";
    case EntityKind::Height: return "Height";
    case EntityKind::ScaleFactor: return "ScaleFactor";
    case EntityKind::Volume: return "Volume";
    case EntityKind::FigureRef: return "FigureRef";
  }
  return "FigureRef";
}

inline EntityKind parse_entity_kind(std::string_view s) {
  for (auto k : kAllEntityKinds)
    if (to_string(k) == s) return k;
  throw ValidationError("unknown entity kind: '" + std::string(s) + "'");
}

// Kinds that can carry a numeric value.
inline bool is_quantity(EntityKind k) { return k != EntityKind::FigureRef; }

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct EntityMention {
  EntityKind kind = EntityKind::Length;
  Span span;                 // byte offsets in the utterance
  std::size_t token_begin = 0;
  std::size_t token_end = 0;  // exclusive
  std::string surface;        // lowercased matched tokens joined by spaces
  std::optional<double> value;
  std::optional<std::size_t> value_token;
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct EntityPattern {
  EntityKind kind;
  std::vector<std::string> tokens;
};

struct EntityPatterns {
  std::vector<EntityPattern> patterns;
};

inline EntityPatterns default_entity_patterns() {
  EntityPatterns p;
  auto add = [&](EntityKind k, std::initializer_list<std::string> toks) { p.patterns.push_back({k, toks}); };
  add(EntityKind::Length, {"length"});
  add(EntityKind::Length, {"lengths"});
  add(EntityKind::Length, {"long"});
  add(EntityKind::Width, {"width"});
  add(EntityKind::Width, {"widths"});
  add(EntityKind::Width, {"wide"});
  add(EntityKind::Height, {"height"});
  add(EntityKind::Height, {"heights"});
  add(EntityKind::Height, {"tall"});
  add(EntityKind::ScaleFactor, {"scale", "factor"});
  add(EntityKind::ScaleFactor, {"scaling", "factor"});
  add(EntityKind::Volume, {"volume"});
  add(EntityKind::Volume, {"volumes"});
  for (const char* side : {"left", "right", "first", "second", "original", "new", "bigger", "smaller"})
    for (const char* thing : {"box", "figure", "object", "prism", "shape"}) add(EntityKind::FigureRef, {side, thing});
  for (const char* thing : {"box", "figure", "object", "prism", "shape"}) add(EntityKind::FigureRef, {thing});
  return p;
}

inline EntityPatterns entity_patterns_from_json(const json& j) {
  EntityPatterns p;
  for (const auto& e : j.at("entities")) {
    const auto kind = parse_entity_kind(e.at("kind").get<std::string>());
    for (const auto& pat : e.at("patterns")) {
      auto toks = pat.get<std::vector<std::string>>();
      if (toks.empty()) throw ValidationError("empty entity pattern for " + std::string(to_string(kind)));
      p.patterns.push_back({kind, std::move(toks)});
    }
  }
  return p;
}

inline json to_json(const EntityPatterns& p) {
  json entities = json::array();
  for (auto kind : kAllEntityKinds) {
    json pats = json::array();
    for (const auto& pat : p.patterns)
      if (pat.kind == kind) pats.push_back(pat.tokens);
    if (!pats.empty()) entities.push_back({{"kind", to_string(kind)}, {"patterns", pats}});
  }
  return json{{"entities", entities}};
}

inline EntityPatterns load_entity_patterns(const std::filesystem::path& path) {
  try {
    return entity_patterns_from_json(io::read_json(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Numbers: digit strings with an optional decimal part, and the words zero
// through twenty.

inline std::optional<double> parse_number(std::string_view tok) {
  static constexpr std::array<std::string_view, 21> kWords = {
      "zero",    "one",     "two",       "three",    "four",     "five",    "six",
      "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};
  for (std::size_t i = 0; i < kWords.size(); ++i)
    if (tok == kWords[i]) return static_cast<double>(i);
  if (tok.empty()) return std::nullopt;
  bool dot = false;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const char c = tok[i];
    if (c == '.' && !dot && i > 0 && i + 1 < tok.size()) {
      dot = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
  }
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline bool is_clause_break(std::string_view tok) { return tok == "," || tok == "." || tok == "?" || tok == "!"; }

// Clause id per token; delimiter tokens belong to the clause they close.
inline std::vector<std::size_t> clause_ids(const std::vector<text::Token>& toks) {
  std::vector<std::size_t> ids(toks.size());
  std::size_t c = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    ids[i] = c;
    if (is_clause_break(toks[i].text)) ++c;
  }
  return ids;
}

inline std::vector<std::size_t> number_positions(const std::vector<text::Token>& toks) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (parse_number(toks[i].text)) out.push_back(i);
  return out;
}

// Scans left to right taking the longest pattern at each position, then
// attaches each number to the nearest quantity mention without a value in
// the same clause (the earlier mention wins a distance tie).
inline std::vector<EntityMention> extract_entities(const std::vector<text::Token>& toks,
                                                   const EntityPatterns& patterns) {
  std::vector<EntityMention> out;
  for (std::size_t i = 0; i < toks.size();) {
    const EntityPattern* best = nullptr;
    for (const auto& p : patterns.patterns) {
      if (i + p.tokens.size() > toks.size()) continue;
      if (best && p.tokens.size() <= best->tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < p.tokens.size() && ok; ++k) ok = toks[i + k].text == p.tokens[k];
      if (ok) best = &p;
    }
    if (!best) {
      ++i;
      continue;
    }
    EntityMention m;
    m.kind = best->kind;
    m.token_begin = i;
    m.token_end = i + best->tokens.size();
    m.span = {toks[i].begin, toks[m.token_end - 1].end};
    for (std::size_t k = m.token_begin; k < m.token_end; ++k) m.surface += (k > m.token_begin ? " " : "") + toks[k].text;
    out.push_back(std::move(m));
    i += best->tokens.size();
  }

  const auto clause = clause_ids(toks);
  for (std::size_t pos : number_positions(toks)) {
    EntityMention* nearest = nullptr;
    std::size_t best_d = 0;
    for (auto& m : out) {
      if (!is_quantity(m.kind) || m.value || clause[m.token_begin] != clause[pos]) continue;
      const std::size_t d = pos >= m.token_end ? pos - (m.token_end - 1) : m.token_begin - pos;
      if (!nearest || d < best_d) {
        nearest = &m;
        best_d = d;
      }
    }
    if (nearest) {
      nearest->value = parse_number(toks[pos].text);
      nearest->value_token = pos;
    }
  }
  return out;
}

inline std::vector<EntityMention> extract_entities(std::string_view utterance,
                                                   const EntityPatterns& patterns = default_entity_patterns()) {
  return extract_entities(text::tokenize_spans(utterance), patterns);
}

enum class FigureSide { Left, Right };

// Side named by a figure reference, if any.
inline std::optional<FigureSide> side_of(const EntityMention& m) {
  if (m.kind != EntityKind::FigureRef) return std::nullopt;
  for (const char* w : {"left", "first", "original", "smaller"})
    if (m.surface.rfind(w, 0) == 0) return FigureSide::Left;
  for (const char* w : {"right", "second", "new", "bigger"})
    if (m.surface.rfind(w, 0) == 0) return FigureSide::Right;
  return std::nullopt;
}

inline json to_json(const EntityMention& m) {
  json j{{"kind", to_string(m.kind)},
         {"span", {m.span.begin, m.span.end}},
         {"tokens", {m.token_begin, m.token_end}},
         {"surface", m.surface}};
  if (m.value) j["value"] = *m.value;
  if (m.value_token) j["value_token"] = *m.value_token;
  return j;
}

inline EntityMention entity_from_json(const json& j) {
  EntityMention m;
  m.kind = parse_entity_kind(j.at("kind").get<std::string>());
  m.span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
  m.token_begin = j.at("tokens").at(0).get<std::size_t>();
  m.token_end = j.at("tokens").at(1).get<std::size_t>();
  m.surface = j.at("surface").get<std::string>();
  if (j.contains("value")) m.value = j["value"].get<double>();
  if (j.contains("value_token")) m.value_token = j["value_token"].get<std::size_t>();
  return m;
}

}  // namespace hitl::nlu
