#pragma once

// Model-assisted labeling: pre-filled annotation records for human review.

#include <algorithm>
#include <filesystem>
#include <vector>

#include "hitl/nlu/acts.hpp"
#include "hitl/weak_supervision/agreement.hpp"

namespace hitl::ws {

inline constexpr const char* kPrefillAnnotator = "model";

inline std::vector<AnnotationRecord> prefill_records(const std::vector<Utterance>& corpus, const nlu::ActModel& model) {
  if (!model.trained()) throw StateError("cannot prefill with an untrained model");
  std::vector<AnnotationRecord> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) {
    const auto p = ml::predict(model.classifier, text::embed(u.text, model.embed));
    const auto k = ml::argmax(p);
    AnnotationRecord r;
    r.item_id = u.id;
    r.annotator = kPrefillAnnotator;
    r.label = act_from_index(k);
    r.prefill_label = r.label;
    r.duration = 0.0;
    r.confidence = p[k];
    out.push_back(std::move(r));
  }
  return out;
}

// Writes one annotation record per utterance; an empty corpus writes an
// empty file.
inline std::size_t export_prefill(const std::vector<Utterance>& corpus, const nlu::ActModel& model,
                                  const std::filesystem::path& path) {
  const auto records = prefill_records(corpus, model);
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  io::write_jsonl(path, rows);
  return rows.size();
}

}  // namespace hitl::ws
