#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "hitl/core.hpp"
#include "hitl/io.hpp"
#include "hitl/text_features.hpp"

namespace hitl::ws {

enum class LfKind { PhraseAny, Regex, SemanticExemplars };

inline std::string_view to_string(LfKind k) {
  switch (k) {
    case LfKind::PhraseAny: return "PhraseAny";
    case LfKind::Regex: return "Regex";
    case LfKind::SemanticExemplars: return "SemanticExemplars";
  }
  return "PhraseAny";
}

inline LfKind parse_lf_kind(std::string_view s) {
  for (auto k : {LfKind::PhraseAny, LfKind::Regex, LfKind::SemanticExemplars})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown labeling function kind: '" + std::string(s) + "'");
}

inline constexpr double kDefaultSimilarityThreshold = 0.5;

struct LfSpec {
  std::string id;
  DialogueAct emits = DialogueAct::Other;
  LfKind kind = LfKind::PhraseAny;
  std::vector<std::string> patterns;
  std::optional<double> similarity_threshold;
};

inline LfSpec lf_spec_from_json(const json& j) {
  LfSpec s;
  s.id = j.at("id").get<std::string>();
  s.emits = parse_act(j.at("emits").get<std::string>());
  s.kind = parse_lf_kind(j.at("kind").get<std::string>());
  s.patterns = j.at("patterns").get<std::vector<std::string>>();
  if (j.contains("similarity_threshold") && !j["similarity_threshold"].is_null())
    s.similarity_threshold = j["similarity_threshold"].get<double>();
  return s;
}

inline json to_json(const LfSpec& s) {
  json j{{"id", s.id},
         {"emits", hitl::to_string(s.emits)},
         {"kind", to_string(s.kind)},
         {"patterns", s.patterns}};
  if (s.similarity_threshold) j["similarity_threshold"] = *s.similarity_threshold;
  return j;
}

// An executable labeling function: votes its `emits` act or abstains.
class LabelingFunction {
 public:
  const std::string& id() const { return id_; }
  DialogueAct emits() const { return emits_; }
  LfKind kind() const { return kind_; }
  double similarity_threshold() const { return threshold_; }

  Vote apply(std::string_view utterance) const {
    if (utterance.find_first_not_of(" \t\r\n") == std::string_view::npos) return std::nullopt;
    return matches(utterance) ? Vote{emits_} : std::nullopt;
  }

  // Largest cosine similarity to any exemplar (SemanticExemplars only).
  double max_similarity(std::string_view utterance) const {
    const auto v = text::embed(utterance, embed_cfg_);
    double best = 0.0;
    for (const auto& e : exemplars_) best = std::max(best, text::cosine_similarity(v, e));
    return best;
  }

 private:
  friend LabelingFunction compile_labeling_function(const LfSpec&, const text::EmbedConfig&);

  bool matches(std::string_view utterance) const {
    switch (kind_) {
      case LfKind::PhraseAny: {
        const auto toks = text::tokenize(utterance);
        for (const auto& phrase : phrases_)
          if (contains_run(toks, phrase)) return true;
        return false;
      }
      case LfKind::Regex: {
        const std::string s(utterance);
        for (const auto& re : regexes_)
          if (std::regex_search(s, re)) return true;
        return false;
      }
      case LfKind::SemanticExemplars:
        return max_similarity(utterance) >= threshold_;
    }
    return false;
  }

  static bool contains_run(const std::vector<std::string>& toks, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > toks.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= toks.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < phrase.size() && ok; ++k) ok = toks[i + k] == phrase[k];
      if (ok) return true;
    }
    return false;
  }

  std::string id_;
  DialogueAct emits_ = DialogueAct::Other;
  LfKind kind_ = LfKind::PhraseAny;
  double threshold_ = kDefaultSimilarityThreshold;
  text::EmbedConfig embed_cfg_;
  std::vector<std::vector<std::string>> phrases_;
  std::vector<std::regex> regexes_;
  std::vector<text::FeatureVector> exemplars_;
};

// PhraseAny patterns match as contiguous, case-insensitive token runs using
// the same tokenizer as the embeddings, so "right?" becomes [right, ?].
// Regex patterns are ECMAScript, case-insensitive, searched anywhere.
inline LabelingFunction compile_labeling_function(const LfSpec& spec,
                                                  const text::EmbedConfig& embed_cfg = {}) {
  if (spec.id.empty()) throw ValidationError("labeling function id is empty");
  if (spec.patterns.empty())
    throw ValidationError("labeling function '" + spec.id + "' has no patterns");
  LabelingFunction lf;
  lf.id_ = spec.id;
  lf.emits_ = spec.emits;
  lf.kind_ = spec.kind;
  lf.embed_cfg_ = embed_cfg;
  for (std::size_t i = 0; i < spec.patterns.size(); ++i) {
    const auto& p = spec.patterns[i];
    switch (spec.kind) {
      case LfKind::PhraseAny: {
        auto toks = text::tokenize(p);
        if (toks.empty()) throw CompileError(i, "phrase pattern is blank in '" + spec.id + "'");
        lf.phrases_.push_back(std::move(toks));
        break;
      }
      case LfKind::Regex:
        try {
          lf.regexes_.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
          throw CompileError(i, "malformed regex in '" + spec.id + "': " + e.what());
        }
        break;
      case LfKind::SemanticExemplars: {
        auto v = text::embed(p, embed_cfg);
        if (v.empty()) throw CompileError(i, "exemplar is blank in '" + spec.id + "'");
        lf.exemplars_.push_back(std::move(v));
        break;
      }
    }
  }
  if (spec.kind == LfKind::SemanticExemplars) {
    const double t = spec.similarity_threshold.value_or(kDefaultSimilarityThreshold);
    if (!(t >= 0.0 && t <= 1.0))
      throw ValidationError("similarity threshold for '" + spec.id + "' must be in [0,1]");
    lf.threshold_ = t;
  }
  return lf;
}

inline std::vector<LfSpec> load_lf_specs(const std::filesystem::path& path) {
  const auto doc = io::read_json(path);
  const json& list = doc.is_object() ? doc.at("labeling_functions") : doc;
  std::vector<LfSpec> out;
  for (const auto& j : list) {
    try {
      out.push_back(lf_spec_from_json(j));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<LabelingFunction> compile_all(const std::vector<LfSpec>& specs,
                                                 const text::EmbedConfig& embed_cfg = {}) {
  std::vector<LabelingFunction> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(compile_labeling_function(s, embed_cfg));
  return out;
}

// ---------------------------------------------------------------------------

struct WeakLabelMatrix {
  std::vector<std::string> items;
  std::vector<std::string> lfs;
  std::vector<std::vector<Vote>> votes;  // items x lfs

  std::size_t rows() const { return items.size(); }
  std::size_t cols() const { return lfs.size(); }

  void validate() const {
    if (votes.size() != items.size()) throw ValidationError("vote grid row count != item count");
    for (const auto& row : votes)
      if (row.size() != lfs.size()) throw ValidationError("vote grid column count != LF count");
  }
};

namespace detail {

inline void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError(std::string("duplicate ") + what + " id: '" + id + "'");
}

}  // namespace detail

inline WeakLabelMatrix apply_labeling_functions(const std::vector<LabelingFunction>& lfs,
                                                const std::vector<Utterance>& corpus) {
  WeakLabelMatrix m;
  for (const auto& lf : lfs) m.lfs.push_back(lf.id());
  for (const auto& u : corpus) m.items.push_back(u.id);
  detail::require_unique(m.lfs, "labeling function");
  detail::require_unique(m.items, "corpus item");
  m.votes.reserve(corpus.size());
  for (const auto& u : corpus) {
    std::vector<Vote> row;
    row.reserve(lfs.size());
    for (const auto& lf : lfs) row.push_back(lf.apply(u.text));
    m.votes.push_back(std::move(row));
  }
  return m;
}

inline json to_json(const WeakLabelMatrix& m) {
  json votes = json::array();
  for (const auto& row : m.votes) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v ? json(hitl::to_string(*v)) : json(nullptr));
    votes.push_back(std::move(r));
  }
  return json{{"items", m.items}, {"lfs", m.lfs}, {"votes", std::move(votes)}};
}

inline WeakLabelMatrix matrix_from_json(const json& j) {
  WeakLabelMatrix m;
  m.items = j.at("items").get<std::vector<std::string>>();
  m.lfs = j.at("lfs").get<std::vector<std::string>>();
  for (const auto& r : j.at("votes")) {
    std::vector<Vote> row;
    for (const auto& v : r) row.push_back(v.is_null() ? Vote{} : Vote{parse_act(v.get<std::string>())});
    m.votes.push_back(std::move(row));
  }
  m.validate();
  return m;
}

}  // namespace hitl::ws
