#pragma once

// Dialogue-act classification with Monte-Carlo dropout uncertainty.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hitl/classifiers/checkpoint.hpp"
#include "hitl/classifiers/metrics.hpp"
#include "hitl/classifiers/mlp.hpp"
#include "hitl/io.hpp"

namespace hitl::nlu {

struct ActPrediction {
  DialogueAct act = DialogueAct::Other;
  ml::UncertaintyReport uncertainty;
  friend bool operator==(const ActPrediction&, const ActPrediction&) = default;
};

struct ActModelConfig {
  text::EmbedConfig embed{1u << 14, 2, 0};
  ml::HyperParams hp = default_hyper_params();
  std::size_t mc_passes = 30;

  static ml::HyperParams default_hyper_params() {
    ml::HyperParams hp;
    hp.dropout_rate = 0.5;
    hp.l2 = 0.004;
    return hp;
  }
};

struct ActModel {
  ml::Classifier classifier;
  text::EmbedConfig embed;
  std::size_t mc_passes = 30;

  bool trained() const { return classifier.trained(); }
};

struct LabelledText {
  std::string text;
  DialogueAct act;
};

inline std::vector<ml::Example> act_examples(const std::vector<LabelledText>& data, const text::EmbedConfig& embed) {
  std::vector<ml::Example> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back({text::embed(d.text, embed), index_of(d.act)});
  return out;
}

inline std::vector<LabelledText> labelled_from_corpus(const std::vector<Utterance>& corpus) {
  std::vector<LabelledText> out;
  for (const auto& u : corpus) {
    if (!u.gold) throw ValidationError("corpus item '" + u.id + "' has no gold_label");
    out.push_back({u.text, *u.gold});
  }
  return out;
}

inline ActModel train_act_model(const std::vector<LabelledText>& data, const ActModelConfig& cfg) {
  ActModel m;
  m.embed = cfg.embed;
  m.mc_passes = cfg.mc_passes;
  m.classifier = ml::train_classifier(act_examples(data, cfg.embed), kNumActs, cfg.hp);
  return m;
}

// Deterministic seeded split: shuffles indices with `seed` and puts the first
// round(train_fraction * n) in the training part.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& data, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  shuffle(idx, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < n_train ? out.first : out.second).push_back(data[idx[i]]);
  return out;
}

// Text with no tokens is classified Other by definition; its uncertainty
// still comes from the (bias-only) stochastic passes.
inline ActPrediction classify_dialogue_act(const ActModel& m, std::string_view utterance, std::uint64_t seed) {
  if (!m.trained()) throw StateError("dialogue-act model is not trained");
  const auto x = text::embed(utterance, m.embed);
  ActPrediction p;
  p.uncertainty = ml::mc_dropout_predict(m.classifier, x, m.mc_passes, seed);
  if (x.empty()) p.uncertainty.argmax = index_of(DialogueAct::Other);
  p.act = act_from_index(p.uncertainty.argmax);
  return p;
}

inline ml::EvaluationReport evaluate_act_model(const ActModel& m, const std::vector<LabelledText>& test) {
  return ml::evaluate(m.classifier, act_examples(test, m.embed));
}

inline json to_json(const text::EmbedConfig& e) {
  return json{{"dimension", e.dimension}, {"ngram_max", e.ngram_max}, {"hash_seed", e.hash_seed}};
}

inline text::EmbedConfig embed_config_from_json(const json& j, text::EmbedConfig base = {}) {
  base.dimension = j.value("dimension", base.dimension);
  base.ngram_max = j.value("ngram_max", base.ngram_max);
  base.hash_seed = j.value("hash_seed", base.hash_seed);
  return base;
}

inline void save_act_model(const std::filesystem::path& path, const ActModel& m) {
  ml::save_checkpoint(path, m.classifier,
                      json{{"kind", "acts"}, {"embed", to_json(m.embed)}, {"mc_passes", m.mc_passes}});
}

inline ActModel load_act_model(const std::filesystem::path& path) {
  json meta;
  ActModel m;
  m.classifier = ml::load_classifier(path, &meta);
  if (meta.value("kind", "") != "acts") throw ParseError(0, path.string() + ": not a dialogue-act checkpoint");
  m.embed = embed_config_from_json(meta.at("embed"));
  m.mc_passes = meta.value("mc_passes", std::size_t{30});
  if (m.embed.dimension != m.classifier.input_dim())
    throw ParseError(0, path.string() + ": embedding dimension does not match classifier input");
  return m;
}

inline json to_json(const ml::UncertaintyReport& r, bool with_samples = false) {
  json j{{"mean", r.mean},
         {"predictive_entropy", r.predictive_entropy},
         {"normalized_entropy", r.normalized_entropy},
         {"variation_ratio", r.variation_ratio},
         {"argmax", r.argmax}};
  if (with_samples) j["samples"] = r.samples;
  return j;
}

inline ml::UncertaintyReport uncertainty_from_json(const json& j) {
  ml::UncertaintyReport r;
  r.mean = j.at("mean").get<std::vector<double>>();
  r.predictive_entropy = j.at("predictive_entropy").get<double>();
  r.normalized_entropy = j.at("normalized_entropy").get<double>();
  r.variation_ratio = j.at("variation_ratio").get<double>();
  r.argmax = j.at("argmax").get<std::size_t>();
  if (j.contains("samples")) r.samples = j["samples"].get<std::vector<std::vector<double>>>();
  return r;
}

inline json to_json(const ActPrediction& p, bool with_samples = false) {
  return json{{"act", to_string(p.act)}, {"uncertainty", to_json(p.uncertainty, with_samples)}};
}

inline ActPrediction act_prediction_from_json(const json& j) {
  ActPrediction p;
  p.act = parse_act(j.at("act").get<std::string>());
  p.uncertainty = uncertainty_from_json(j.at("uncertainty"));
  return p;
}

}  // namespace hitl::nlu
