#pragma once

// Turning a vote matrix into per-item class distributions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "hitl/core.hpp"
#include "hitl/weak_supervision/labeling_function.hpp"

namespace hitl::ws {

using ClassDistribution = std::array<double, kNumActs>;

// First index wins ties, giving the order Probing, Factual, Expository, Other.
inline std::size_t argmax(const ClassDistribution& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

struct SoftLabel {
  ClassDistribution probs{};
  DialogueAct label = DialogueAct::Probing;
  bool covered = false;
};

struct SoftLabels {
  std::vector<std::string> items;
  std::vector<SoftLabel> labels;
};

inline json to_json(const SoftLabels& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& l = s.labels[i];
    rows.push_back(json{{"item_id", s.items[i]},
                        {"probs", l.probs},
                        {"label", to_string(l.label)},
                        {"covered", l.covered}});
  }
  return rows;
}

namespace detail {

inline ClassDistribution uniform_distribution() {
  ClassDistribution p;
  p.fill(1.0 / kNumActs);
  return p;
}

}  // namespace detail

inline SoftLabels aggregate_majority(const WeakLabelMatrix& m) {
  m.validate();
  SoftLabels out;
  out.items = m.items;
  out.labels.reserve(m.rows());
  for (const auto& row : m.votes) {
    SoftLabel l;
    ClassDistribution counts{};
    double total = 0;
    for (const auto& v : row)
      if (v) {
        counts[index_of(*v)] += 1.0;
        total += 1.0;
      }
    if (total == 0) {
      l.probs = detail::uniform_distribution();
      l.covered = false;
    } else {
      for (std::size_t k = 0; k < kNumActs; ++k) l.probs[k] = counts[k] / total;
      l.covered = true;
    }
    l.label = act_from_index(argmax(l.probs));
    out.labels.push_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dawid-Skene EM

using ConfusionGrid = std::array<std::array<double, kNumActs>, kNumActs>;

// Row j is the distribution of the source's vote given true class j.
struct ConfusionMatrix {
  std::string source;
  ConfusionGrid matrix{};
};

struct DawidSkeneConfig {
  int max_iters = 100;
  double tol = 1e-6;
  double smoothing = 1e-6;
  // EM is initialized from majority vote and has no random component; the
  // seed is carried so callers can record it alongside results.
  std::uint64_t seed = 0;
};

struct DawidSkeneResult {
  SoftLabels labels;
  std::vector<ConfusionMatrix> confusions;
  ClassDistribution priors{};
  int iterations = 0;
  bool converged = false;
  // Per iteration: observed-data log-likelihood, and the same plus the
  // log-density of the smoothing pseudo-counts. EM never decreases the latter.
  std::vector<double> log_likelihood;
  std::vector<double> objective;
};

inline DawidSkeneResult aggregate_dawid_skene(const WeakLabelMatrix& m, const DawidSkeneConfig& cfg = {}) {
  m.validate();
  const std::size_t n = m.rows();
  const std::size_t s_count = m.cols();
  const std::size_t K = kNumActs;
  const double alpha = cfg.smoothing;

  std::size_t nonabstain = 0;
  for (const auto& row : m.votes)
    for (const auto& v : row) nonabstain += v.has_value();
  if (nonabstain == 0) throw AggregationError("Dawid-Skene needs at least one non-abstain vote");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be >= 1");

  // Votes as small ints, -1 for abstain.
  std::vector<std::vector<int>> votes(n, std::vector<int>(s_count, -1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < s_count; ++s)
      if (m.votes[i][s]) votes[i][s] = static_cast<int>(index_of(*m.votes[i][s]));

  const auto init = aggregate_majority(m);
  std::vector<ClassDistribution> post(n);
  for (std::size_t i = 0; i < n; ++i) post[i] = init.labels[i].probs;

  std::vector<ConfusionGrid> theta(s_count);
  ClassDistribution priors{};
  DawidSkeneResult res;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // M-step
    ClassDistribution class_mass{};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < K; ++j) class_mass[j] += post[i][j];
    for (std::size_t j = 0; j < K; ++j) priors[j] = (class_mass[j] + alpha) / (static_cast<double>(n) + K * alpha);

    for (std::size_t s = 0; s < s_count; ++s) {
      ConfusionGrid counts{};
      for (auto& r : counts) r.fill(alpha);
      for (std::size_t i = 0; i < n; ++i) {
        const int v = votes[i][s];
        if (v < 0) continue;
        for (std::size_t j = 0; j < K; ++j) counts[j][static_cast<std::size_t>(v)] += post[i][j];
      }
      for (std::size_t j = 0; j < K; ++j) {
        double row = 0;
        for (double c : counts[j]) row += c;
        for (std::size_t k = 0; k < K; ++k) theta[s][j][k] = counts[j][k] / row;
      }
    }

    // E-step
    double ll = 0;
    double max_change = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ClassDistribution logp;
      for (std::size_t j = 0; j < K; ++j) {
        double lp = std::log(priors[j]);
        for (std::size_t s = 0; s < s_count; ++s) {
          const int v = votes[i][s];
          if (v >= 0) lp += std::log(theta[s][j][static_cast<std::size_t>(v)]);
        }
        logp[j] = lp;
      }
      const double mx = *std::max_element(logp.begin(), logp.end());
      double z = 0;
      for (double lp : logp) z += std::exp(lp - mx);
      const double lse = mx + std::log(z);
      ll += lse;
      for (std::size_t j = 0; j < K; ++j) {
        const double p = std::exp(logp[j] - lse);
        max_change = std::max(max_change, std::abs(p - post[i][j]));
        post[i][j] = p;
      }
    }
    double penalty = 0;
    for (std::size_t j = 0; j < K; ++j) penalty += alpha * std::log(priors[j]);
    for (const auto& t : theta)
      for (const auto& row : t)
        for (double x : row) penalty += alpha * std::log(x);

    res.log_likelihood.push_back(ll);
    res.objective.push_back(ll + penalty);
    res.iterations = iter + 1;
    if (max_change < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.priors = priors;
  res.labels.items = m.items;
  res.labels.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SoftLabel l;
    l.probs = post[i];
    l.covered = init.labels[i].covered;
    l.label = act_from_index(argmax(l.probs));
    res.labels.labels.push_back(l);
  }
  for (std::size_t s = 0; s < s_count; ++s) res.confusions.push_back({m.lfs[s], theta[s]});
  return res;
}

inline json to_json(const ConfusionMatrix& c) {
  return json{{"source", c.source}, {"matrix", c.matrix}};
}

// Rows of a training export: covered items only, joined to the corpus by id.
inline std::vector<json> training_export(const SoftLabels& s, const std::vector<Utterance>& corpus) {
  std::map<std::string, const Utterance*> by_id;
  for (const auto& u : corpus) by_id[u.id] = &u;
  std::vector<json> rows;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    if (!s.labels[i].covered) continue;
    auto it = by_id.find(s.items[i]);
    if (it == by_id.end()) throw ValidationError("item '" + s.items[i] + "' is not in the corpus");
    rows.push_back(json{{"id", it->second->id},
                        {"text", it->second->text},
                        {"label", to_string(s.labels[i].label)},
                        {"probs", s.labels[i].probs}});
  }
  return rows;
}

}  // namespace hitl::ws
