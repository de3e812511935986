#pragma once

// (quantity, value) relation candidates. A rule labeler bootstraps a training
// set from synthetic sentences; a logistic model learns to score candidates.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hitl/classifiers/checkpoint.hpp"
#include "hitl/classifiers/logistic.hpp"
#include "hitl/nlu/entities.hpp"

namespace hitl::nlu {

struct RelationCandidate {
  EntityMention entity;
  std::optional<double> value;  // nullopt is BLANK
  std::optional<std::size_t> value_token;
  double probability = 0;
  bool label = false;
};

inline json to_json(const RelationCandidate& r) {
  json j{{"entity", to_json(r.entity)}, {"probability", r.probability}, {"label", r.label}};
  j["value"] = r.value ? json(*r.value) : json(nullptr);
  if (r.value_token) j["value_token"] = *r.value_token;
  return j;
}

inline RelationCandidate relation_from_json(const json& j) {
  RelationCandidate r;
  r.entity = entity_from_json(j.at("entity"));
  if (!j.at("value").is_null()) r.value = j["value"].get<double>();
  if (j.contains("value_token")) r.value_token = j["value_token"].get<std::size_t>();
  r.probability = j.at("probability").get<double>();
  r.label = j.at("label").get<bool>();
  return r;
}

inline constexpr double kRelationThreshold = 0.5;
inline constexpr std::size_t kNegationWindow = 3;

inline bool is_negation(std::string_view tok) { return tok == "not" || tok == "isn't" || tok == "never"; }
inline bool is_copula(std::string_view tok) { return tok == "is" || tok == "are" || tok == "was" || tok == "be"; }

// A negation cue within kNegationWindow tokens of position pos.
inline bool negated(const std::vector<text::Token>& toks, std::size_t pos) {
  const std::size_t lo = pos >= kNegationWindow ? pos - kNegationWindow : 0;
  const std::size_t hi = std::min(toks.size(), pos + kNegationWindow + 1);
  for (std::size_t i = lo; i < hi; ++i)
    if (i != pos && is_negation(toks[i].text)) return true;
  return false;
}

// Context of one (entity, number) pair.
struct PairContext {
  const EntityMention* entity = nullptr;
  std::optional<std::size_t> number;
  long distance = 0;  // number position minus entity position
  bool same_clause = false;
  bool attached = false;
  bool negated = false;
  bool elliptical = false;  // entity clause is "the X is" with no value of its own
  bool entity_clause_has_number = false;
};

inline PairContext pair_context(const std::vector<text::Token>& toks, const std::vector<std::size_t>& clause,
                                const EntityMention& e, std::optional<std::size_t> number) {
  PairContext c;
  c.entity = &e;
  c.number = number;
  const std::size_t ec = clause[e.token_begin];
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (clause[i] == ec && parse_number(toks[i].text)) c.entity_clause_has_number = true;
  // Last word of the entity's clause.
  std::optional<std::size_t> last_word;
  for (std::size_t i = e.token_begin; i < toks.size() && clause[i] == ec; ++i)
    if (!is_clause_break(toks[i].text)) last_word = i;
  c.elliptical = !c.entity_clause_has_number && last_word && *last_word >= e.token_end &&
                 is_copula(toks[*last_word].text);
  if (!number) return c;
  const auto pos = *number;
  c.distance = static_cast<long>(pos) - static_cast<long>(pos >= e.token_end ? e.token_end - 1 : e.token_begin);
  c.same_clause = clause[pos] == ec;
  c.attached = e.value_token && *e.value_token == pos;
  c.negated = negated(toks, pos);
  return c;
}

// Bootstrap labels. An attached value holds unless negated; a negated value
// carries over to a later elliptical clause ("not 5, the width is.").
inline bool rule_label(const PairContext& c) {
  if (!c.number) return false;
  if (c.attached) return !c.negated;
  return c.negated && c.elliptical && c.distance < 0;
}

inline std::string distance_bucket(long d) {
  const long a = std::labs(d);
  std::string b = a <= 1 ? "1" : a <= 2 ? "2" : a <= 4 ? "3-4" : a <= 8 ? "5-8" : "9+";
  return (d < 0 ? "-" : "+") + b;
}

struct RelationFeatureConfig {
  text::EmbedConfig embed{1u << 14, 2, 0x5eed};
  double text_weight = 0.5;
  double pair_weight = 1.5;
};

// Hashed text n-grams, pair tokens, distance bucket, negation flag, and their
// conjunctions with clause structure.
inline text::FeatureVector relation_features(const std::vector<text::Token>& toks, const PairContext& c,
                                             const RelationFeatureConfig& cfg) {
  text::FeatureBuilder b(cfg.embed);
  std::vector<std::string> words;
  for (const auto& t : toks) words.push_back("t:" + t.text);
  for (std::size_t i = 0; i < words.size(); ++i) {
    b.add(words[i], cfg.text_weight);
    if (i + 1 < words.size()) b.add(words[i] + " " + toks[i + 1].text, cfg.text_weight);
  }
  const std::string kind(to_string(c.entity->kind));
  const std::string neg = c.negated ? "neg" : "pos";
  const std::string clause = c.same_clause ? "same" : "other";
  const std::string dir = c.distance < 0 ? "before" : "after";
  const std::string ell = c.elliptical ? "ell" : "full";
  const std::string own = c.entity_clause_has_number ? "own" : "noown";
  auto add = [&](const std::string& f) { b.add("p:" + f, cfg.pair_weight); };
  add("bias");
  add("kind=" + kind);
  add("dist=" + distance_bucket(c.distance));
  add("neg=" + neg);
  add("clause=" + clause);
  add("clause&neg=" + clause + neg);
  add("dir&neg=" + dir + neg);
  add("dist&neg=" + distance_bucket(c.distance) + neg);
  add("ell&neg&dir=" + ell + neg + dir);
  add("own&clause=" + own + clause);
  add("clause&neg&own=" + clause + neg + own);
  return b.build();
}

// Every quantity mention paired with every number in the utterance; mentions
// in an utterance without numbers get one BLANK candidate.
inline std::vector<PairContext> candidate_pairs(const std::vector<text::Token>& toks,
                                                const std::vector<EntityMention>& entities) {
  const auto clause = clause_ids(toks);
  const auto numbers = number_positions(toks);
  std::vector<PairContext> out;
  for (const auto& e : entities) {
    if (!is_quantity(e.kind)) continue;
    if (numbers.empty()) {
      out.push_back(pair_context(toks, clause, e, std::nullopt));
      continue;
    }
    for (auto pos : numbers) out.push_back(pair_context(toks, clause, e, pos));
  }
  return out;
}

struct RelationModel {
  ml::LogisticRegression model;
  RelationFeatureConfig features;
};

inline std::vector<RelationCandidate> classify_relations(const RelationModel& rm, std::string_view text,
                                                         const std::vector<EntityMention>& entities) {
  if (!rm.model.trained()) throw StateError("relation model is not trained");
  const auto toks = text::tokenize_spans(text);
  std::vector<RelationCandidate> out;
  for (const auto& c : candidate_pairs(toks, entities)) {
    RelationCandidate r;
    r.entity = *c.entity;
    if (c.number) {
      r.value = parse_number(toks[*c.number].text);
      r.value_token = c.number;
      r.probability = rm.model.probability(relation_features(toks, c, rm.features));
      r.label = r.probability >= kRelationThreshold;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Candidates labelled by the rules instead of the model (probability 0 or 1).
inline std::vector<RelationCandidate> rule_relations(std::string_view text, const EntityPatterns& patterns) {
  const auto toks = text::tokenize_spans(text);
  const auto entities = extract_entities(toks, patterns);
  std::vector<RelationCandidate> out;
  for (const auto& c : candidate_pairs(toks, entities)) {
    RelationCandidate r;
    r.entity = *c.entity;
    if (c.number) {
      r.value = parse_number(toks[*c.number].text);
      r.value_token = c.number;
    }
    r.label = rule_label(c);
    r.probability = r.label ? 1.0 : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic bootstrap corpus

// Sentences about box dimensions built from fixed templates with seeded
// choices of quantity words, figures and numbers.
inline std::vector<std::string> synthetic_relation_sentences(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> kQuantity = {"length", "width", "height", "scale factor", "volume"};
  static const std::vector<std::string> kDim = {"length", "width", "height"};
  static const std::vector<std::string> kFigure = {"object", "box", "left box", "right box", "left figure",
                                                   "right figure", "figure"};
  static const std::vector<std::string> kNumWords = {"two", "three", "four", "five", "six", "seven", "eight",
                                                     "nine", "ten", "twelve"};
  static const std::vector<std::string> kTemplates = {
      "the {q} is {n}",
      "the {q} of the {f} is {n}",
      "the {q} of the {f} is {n}, what is the {q2}?",
      "the {q} is {n}, what is the {q2}?",
      "no, the {q} is not {n}, the {q2} is.",
      "the {q} is not {n}, the {q2} is.",
      "no, the {q} is not {n}.",
      "what is the {q} if the {q2} is {n}?",
      "what is the {q}?",
      "what is the {q} of the {f}?",
      "if the {q} is {n} and the {q2} is {m}, what is the {q3}?",
      "the {q} is {n} and the {q2} is {m}.",
      "is the {q} {n}?",
      "{n} is the {q}.",
      "the {f} has a {q} of {n}.",
      "the {q} is {n}, not {m}.",
      "can you tell me the {q} of the {f}?",
      "the {f} is {n} units, what is the {q}?",
      "i think the {q} is {n}, the {q2} is {m}.",
  };
  Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[static_cast<std::size_t>(uniform_index(rng, v.size()))];
  };
  auto number = [&]() {
    if (uniform01(rng) < 0.3) return pick(kNumWords);
    const auto n = 1 + uniform_index(rng, 15);
    return uniform01(rng) < 0.15 ? std::to_string(n) + ".5" : std::to_string(n);
  };
  auto replace_all = [](std::string s, const std::string& key, const std::string& val) {
    for (auto p = s.find(key); p != std::string::npos; p = s.find(key, p + val.size())) s.replace(p, key.size(), val);
    return s;
  };
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string s = pick(kTemplates);
    const std::string q = pick(kQuantity);
    std::string q2 = pick(kDim);
    while (q2 == q) q2 = pick(kDim);
    std::string q3 = pick(kQuantity);
    std::string n = number();
    std::string m = number();
    while (m == n) m = number();
    s = replace_all(s, "{q3}", q3);
    s = replace_all(s, "{q2}", q2);
    s = replace_all(s, "{q}", q);
    s = replace_all(s, "{f}", pick(kFigure));
    s = replace_all(s, "{n}", n);
    s = replace_all(s, "{m}", m);
    if (uniform01(rng) < 0.5) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    out.push_back(std::move(s));
  }
  return out;
}

// Rule-labelled training pairs (BLANK candidates are skipped: they are false
// by construction and never scored).
inline std::vector<ml::BinaryExample> relation_training_set(const std::vector<std::string>& sentences,
                                                            const EntityPatterns& patterns,
                                                            const RelationFeatureConfig& cfg) {
  std::vector<ml::BinaryExample> out;
  for (const auto& s : sentences) {
    const auto toks = text::tokenize_spans(s);
    const auto entities = extract_entities(toks, patterns);
    for (const auto& c : candidate_pairs(toks, entities)) {
      if (!c.number) continue;
      out.push_back({relation_features(toks, c, cfg), rule_label(c)});
    }
  }
  return out;
}

struct RelationTrainConfig {
  std::size_t sentences = 800;
  std::uint64_t seed = 7;
  ml::LogisticParams logistic{};
  RelationFeatureConfig features{};
};

inline RelationModel train_relation_model(const EntityPatterns& patterns, const RelationTrainConfig& cfg) {
  const auto sentences = synthetic_relation_sentences(cfg.sentences, cfg.seed);
  auto data = relation_training_set(sentences, patterns, cfg.features);
  auto hp = cfg.logistic;
  hp.seed = cfg.seed;
  return RelationModel{ml::train_logistic(data, hp), cfg.features};
}

inline json to_json(const RelationFeatureConfig& f) {
  return json{{"dimension", f.embed.dimension},
              {"ngram_max", f.embed.ngram_max},
              {"hash_seed", f.embed.hash_seed},
              {"text_weight", f.text_weight},
              {"pair_weight", f.pair_weight}};
}

inline RelationFeatureConfig relation_features_from_json(const json& j) {
  RelationFeatureConfig f;
  f.embed.dimension = j.value("dimension", f.embed.dimension);
  f.embed.ngram_max = j.value("ngram_max", f.embed.ngram_max);
  f.embed.hash_seed = j.value("hash_seed", f.embed.hash_seed);
  f.text_weight = j.value("text_weight", f.text_weight);
  f.pair_weight = j.value("pair_weight", f.pair_weight);
  return f;
}

inline void save_relation_model(const std::filesystem::path& path, const RelationModel& m) {
  ml::save_checkpoint(path, m.model, json{{"kind", "relations"}, {"features", to_json(m.features)}});
}

inline RelationModel load_relation_model(const std::filesystem::path& path) {
  json meta;
  auto lr = ml::load_logistic(path, &meta);
  return RelationModel{std::move(lr), relation_features_from_json(meta.value("features", json::object()))};
}

}  // namespace hitl::nlu
