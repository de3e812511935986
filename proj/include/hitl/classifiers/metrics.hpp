#pragma once

#include <vector>

#include "hitl/classifiers/mlp.hpp"
#include "hitl/io.hpp"

namespace hitl::ml {

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct EvaluationReport {
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  double macro_f1 = 0;
  double accuracy = 0;
};

// One-vs-rest metrics. A zero denominator yields 0 for that precision,
// recall or F1.
inline EvaluationReport evaluate_predictions(const std::vector<std::size_t>& gold,
                                             const std::vector<std::size_t>& predicted, std::size_t classes) {
  if (gold.empty()) throw ValidationError("evaluate: empty test set");
  if (gold.size() != predicted.size()) throw ValidationError("evaluate: gold/prediction length mismatch");
  EvaluationReport r;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= classes || predicted[i] >= classes) throw ValidationError("evaluate: label out of range");
    ++r.confusion[gold[i]][predicted[i]];
    correct += gold[i] == predicted[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  double f1_sum = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    std::size_t tp = r.confusion[k][k], pred = 0, actual = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      pred += r.confusion[j][k];
      actual += r.confusion[k][j];
    }
    ClassMetrics c;
    c.support = actual;
    c.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    c.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    c.f1 = (c.precision + c.recall) > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    f1_sum += c.f1;
    r.per_class.push_back(c);
  }
  r.macro_f1 = f1_sum / static_cast<double>(classes);
  return r;
}

inline EvaluationReport evaluate(const Classifier& m, const std::vector<Example>& testset) {
  if (testset.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<std::size_t> gold, pred;
  for (const auto& ex : testset) {
    gold.push_back(ex.label);
    pred.push_back(argmax(predict(m, ex.x)));
  }
  return evaluate_predictions(gold, pred, m.classes());
}

inline json to_json(const EvaluationReport& r, const std::vector<std::string>& class_names = {}) {
  json per = json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    const auto& c = r.per_class[k];
    json row{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
    if (k < class_names.size()) row["class"] = class_names[k];
    per.push_back(row);
  }
  return json{{"macro_f1", r.macro_f1}, {"accuracy", r.accuracy}, {"per_class", per}, {"confusion", r.confusion}};
}

}  // namespace hitl::ml
