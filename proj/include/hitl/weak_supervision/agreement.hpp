#pragma once

// Annotator analytics: accuracy against gold, Cohen's kappa, agreement with
// model prefills, and timing statistics.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "hitl/core.hpp"
#include "hitl/io.hpp"

namespace hitl::ws {

// Chance-corrected agreement between two equally long label sequences.
template <typename Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.size() != b.size())
    throw ValidationError("cohen_kappa: length mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  if (a.empty()) throw ValidationError("cohen_kappa: empty label vectors");
  const double n = static_cast<double>(a.size());
  std::map<Label, double> ma, mb;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1;
    mb[b[i]] += 1;
    if (a[i] == b[i]) agree += 1;
  }
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [label, count] : ma) {
    auto it = mb.find(label);
    if (it != mb.end()) p_e += (count / n) * (it->second / n);
  }
  if (p_e >= 1.0) {
    if (p_o >= 1.0) return 1.0;
    throw ValidationError("cohen_kappa: chance agreement is 1 but observed agreement is not");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

struct WelchResult {
  double t = 0;
  double df = 0;
  double p_value = 1;
};

// Two-sided Welch t-test.
inline WelchResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || y.size() < 2) throw ValidationError("welch_t_test: each group needs >= 2 samples");
  auto moments = [](const std::vector<double>& v) {
    double m = 0;
    for (double d : v) m += d;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double d : v) ss += (d - m) * (d - m);
    return std::pair{m, ss / static_cast<double>(v.size() - 1)};
  };
  const auto [mx, vx] = moments(x);
  const auto [my, vy] = moments(y);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double se2 = vx / nx + vy / ny;
  WelchResult r;
  if (se2 == 0) {
    r.p_value = (mx == my) ? 1.0 : 0.0;
    r.t = (mx == my) ? 0.0 : std::copysign(INFINITY, mx - my);
    r.df = nx + ny - 2;
    return r;
  }
  r.t = (mx - my) / std::sqrt(se2);
  r.df = se2 * se2 / ((vx / nx) * (vx / nx) / (nx - 1) + (vy / ny) * (vy / ny) / (ny - 1));
  boost::math::students_t dist(r.df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------

struct AnnotationRecord {
  std::string item_id;
  std::string annotator;
  DialogueAct label = DialogueAct::Other;
  std::optional<DialogueAct> prefill_label;
  double duration = 0;  // seconds
  std::optional<double> confidence;  // set on model-written prefill records
};

inline AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.annotator = j.at("annotator").get<std::string>();
  r.label = parse_act(j.at("label").get<std::string>());
  if (j.contains("prefill_label") && !j["prefill_label"].is_null())
    r.prefill_label = parse_act(j["prefill_label"].get<std::string>());
  r.duration = j.at("duration_seconds").get<double>();
  if (!std::isfinite(r.duration) || r.duration < 0)
    throw ValidationError("duration_seconds must be finite and nonnegative for item '" + r.item_id + "'");
  if (j.contains("confidence") && !j["confidence"].is_null()) r.confidence = j["confidence"].get<double>();
  return r;
}

inline json to_json(const AnnotationRecord& r) {
  json j{{"item_id", r.item_id}, {"annotator", r.annotator}, {"label", to_string(r.label)}};
  if (r.prefill_label) j["prefill_label"] = to_string(*r.prefill_label);
  j["duration_seconds"] = r.duration;
  if (r.confidence) j["confidence"] = *r.confidence;
  return j;
}

inline std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::size_t n = 0;
  for (const auto& j : io::read_jsonl(path)) {
    ++n;
    try {
      out.push_back(annotation_from_json(j));
    } catch (const json::exception& e) {
      throw ParseError(n, path.string() + ": " + e.what());
    }
  }
  return out;
}

struct AgreementReport {
  std::string annotator;  // "pooled" for the combined row
  std::size_t n = 0;
  double accuracy_vs_gold = 0;
  std::optional<double> kappa;
  std::optional<double> mal_agreement;
  double time_mean = 0;
  double time_sd = 0;
};

struct PairKappa {
  std::string a;
  std::string b;
  std::size_t shared_items = 0;
  double kappa = 0;
};

struct AgreementSummary {
  std::vector<AgreementReport> per_annotator;
  AgreementReport pooled;
  std::vector<PairKappa> pairwise;
  std::optional<WelchResult> time_test;  // group A vs group B on log-durations
};

// Durations below this floor are clamped before taking logs.
inline constexpr double kMinLogDuration = 1e-3;

namespace detail {

inline AgreementReport summarize(const std::string& name, const std::vector<const AnnotationRecord*>& recs,
                                 const std::map<std::string, DialogueAct>& gold) {
  AgreementReport r;
  r.annotator = name;
  r.n = recs.size();
  if (recs.empty()) return r;
  double correct = 0, prefilled = 0, kept = 0, sum = 0;
  for (const auto* rec : recs) {
    correct += rec->label == gold.at(rec->item_id);
    if (rec->prefill_label) {
      prefilled += 1;
      kept += rec->label == *rec->prefill_label;
    }
    sum += rec->duration;
  }
  const double n = static_cast<double>(recs.size());
  r.accuracy_vs_gold = correct / n;
  if (prefilled > 0) r.mal_agreement = kept / prefilled;
  r.time_mean = sum / n;
  if (recs.size() > 1) {
    double ss = 0;
    for (const auto* rec : recs) ss += (rec->duration - r.time_mean) * (rec->duration - r.time_mean);
    r.time_sd = std::sqrt(ss / (n - 1));
  }
  return r;
}

}  // namespace detail

// Accuracy, prefill agreement, and timing per annotator and pooled; kappa on
// items shared by each annotator pair (the pooled kappa is the mean over
// pairs). When both groups are non-empty, log-durations of group A and B
// records are compared with Welch's t-test.
inline AgreementSummary agreement_report(const std::vector<AnnotationRecord>& records,
                                         const std::map<std::string, DialogueAct>& gold,
                                         const std::vector<std::string>& group_a = {},
                                         const std::vector<std::string>& group_b = {}) {
  std::set<std::string> missing;
  for (const auto& r : records)
    if (!gold.count(r.item_id)) missing.insert(r.item_id);
  if (!missing.empty()) {
    std::string ids;
    for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
    throw ValidationError("missing gold labels for items: " + ids);
  }

  std::map<std::string, std::vector<const AnnotationRecord*>> by_annotator;
  std::vector<const AnnotationRecord*> all;
  for (const auto& r : records) {
    by_annotator[r.annotator].push_back(&r);
    all.push_back(&r);
  }

  AgreementSummary out;
  for (const auto& [name, recs] : by_annotator) out.per_annotator.push_back(detail::summarize(name, recs, gold));
  out.pooled = detail::summarize("pooled", all, gold);

  for (auto a = by_annotator.begin(); a != by_annotator.end(); ++a) {
    for (auto b = std::next(a); b != by_annotator.end(); ++b) {
      std::map<std::string, DialogueAct> la;
      for (const auto* r : a->second) la[r->item_id] = r->label;
      std::vector<DialogueAct> xa, xb;
      for (const auto* r : b->second) {
        auto it = la.find(r->item_id);
        if (it == la.end()) continue;
        xa.push_back(it->second);
        xb.push_back(r->label);
      }
      if (xa.empty()) continue;
      out.pairwise.push_back({a->first, b->first, xa.size(), cohen_kappa(xa, xb)});
    }
  }
  if (!out.pairwise.empty()) {
    double s = 0;
    for (const auto& p : out.pairwise) s += p.kappa;
    out.pooled.kappa = s / static_cast<double>(out.pairwise.size());
    for (auto& rep : out.per_annotator) {
      double ks = 0;
      int kn = 0;
      for (const auto& p : out.pairwise)
        if (p.a == rep.annotator || p.b == rep.annotator) {
          ks += p.kappa;
          ++kn;
        }
      if (kn) rep.kappa = ks / kn;
    }
  }

  if (!group_a.empty() && !group_b.empty()) {
    auto log_durations = [&](const std::vector<std::string>& names) {
      std::vector<double> v;
      for (const auto& name : names) {
        auto it = by_annotator.find(name);
        if (it == by_annotator.end()) throw ValidationError("unknown annotator in group: '" + name + "'");
        for (const auto* r : it->second) v.push_back(std::log(std::max(r->duration, kMinLogDuration)));
      }
      return v;
    };
    out.time_test = welch_t_test(log_durations(group_a), log_durations(group_b));
  }
  return out;
}

inline json to_json(const AgreementReport& r) {
  json j{{"annotator", r.annotator},
         {"n", r.n},
         {"accuracy_vs_gold", r.accuracy_vs_gold},
         {"time_mean", r.time_mean},
         {"time_sd", r.time_sd}};
  j["kappa"] = r.kappa ? json(*r.kappa) : json(nullptr);
  j["mal_agreement"] = r.mal_agreement ? json(*r.mal_agreement) : json(nullptr);
  return j;
}

inline json to_json(const AgreementSummary& s) {
  json j;
  j["per_annotator"] = json::array();
  for (const auto& r : s.per_annotator) j["per_annotator"].push_back(to_json(r));
  j["pooled"] = to_json(s.pooled);
  j["pairwise"] = json::array();
  for (const auto& p : s.pairwise)
    j["pairwise"].push_back({{"a", p.a}, {"b", p.b}, {"shared_items", p.shared_items}, {"kappa", p.kappa}});
  if (s.time_test)
    j["time_test"] = {{"t", s.time_test->t}, {"df", s.time_test->df}, {"p_value", s.time_test->p_value}};
  return j;
}

}  // namespace hitl::ws
