#pragma once

#include <string_view>

#include "hitl/nlu/acts.hpp"
#include "hitl/nlu/entities.hpp"
#include "hitl/nlu/relations.hpp"
#include "hitl/text_features.hpp"

namespace hitl::nlu {

// Similarity of two consecutive trainee questions.
inline double turn_repeat_score(std::string_view previous, std::string_view current,
                                const text::EmbedConfig& cfg = {}) {
  const auto a = text::embed(previous, cfg);
  const auto b = text::embed(current, cfg);
  if (a.empty() || b.empty()) throw ValidationError("turn_repeat_score: both utterances must be nonempty");
  return text::cosine_similarity(a, b);
}

// Everything the engine needs to understand one utterance. Immutable after
// construction and shared between sessions.
struct NluModels {
  ActModel acts;
  RelationModel relations;
  EntityPatterns patterns = default_entity_patterns();
  text::EmbedConfig similarity_embed{};
};

struct Understanding {
  ActPrediction act;
  std::vector<EntityMention> entities;
  std::vector<RelationCandidate> relations;
};

inline Understanding understand(const NluModels& m, std::string_view utterance, std::uint64_t seed) {
  Understanding u;
  u.act = classify_dialogue_act(m.acts, utterance, seed);
  u.entities = extract_entities(utterance, m.patterns);
  u.relations = classify_relations(m.relations, utterance, u.entities);
  return u;
}

}  // namespace hitl::nlu
