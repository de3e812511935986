#pragma once

// One-hidden-layer ReLU network over sparse hashed features, trained with
// inverted dropout on the hidden layer. Dropout stays switchable at inference
// for Monte-Carlo uncertainty estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hitl/core.hpp"
#include "hitl/text_features.hpp"

namespace hitl::ml {

using text::FeatureVector;
using Distribution = std::vector<double>;

struct Example {
  FeatureVector x;
  std::size_t label = 0;
};

struct HyperParams {
  int epochs = 40;
  double learning_rate = 0.5;
  double dropout_rate = 0.2;
  std::size_t hidden = 64;
  std::size_t batch_size = 8;
  double init_scale = 0.1;  // half-width of the uniform first-layer init
  double l2 = 0.0;          // weight decay on w1 rows touched by a batch and on w2
  bool hidden_bias = true;  // when false, b1 stays at zero
  std::uint64_t seed = 7;
};

// Dense parameter block. w1 is input_dim x hidden (row per input feature),
// w2 is classes x hidden.
struct Parameters {
  std::vector<double> w1, b1, w2, b2;

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  double& at(std::size_t i) {
    for (auto* v : {&w1, &b1, &w2, &b2}) {
      if (i < v->size()) return (*v)[i];
      i -= v->size();
    }
    throw ValidationError("parameter index out of range");
  }
  double at(std::size_t i) const { return const_cast<Parameters*>(this)->at(i); }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

class Classifier {
 public:
  Classifier() = default;
  Classifier(std::uint32_t input_dim, std::size_t hidden, std::size_t classes, double dropout_rate,
             std::uint64_t seed)
      : input_dim_(input_dim), hidden_(hidden), classes_(classes), dropout_rate_(dropout_rate), seed_(seed) {
    if (input_dim == 0 || hidden == 0 || classes < 2) throw ValidationError("classifier shape is degenerate");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must be in [0,1)");
    params_.w1.assign(static_cast<std::size_t>(input_dim) * hidden, 0.0);
    params_.b1.assign(hidden, 0.0);
    params_.w2.assign(classes * hidden, 0.0);
    params_.b2.assign(classes, 0.0);
  }

  std::uint32_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t classes() const { return classes_; }
  double dropout_rate() const { return dropout_rate_; }
  std::uint64_t seed() const { return seed_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  const Parameters& params() const { return params_; }
  Parameters& params() { return params_; }

  // Seeded uniform init: first layer +-init_scale, second layer Glorot.
  void initialize(double init_scale, Rng& rng) {
    for (auto& w : params_.w1) w = uniform(rng, -init_scale, init_scale);
    const double lim = std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
    for (auto& w : params_.w2) w = uniform(rng, -lim, lim);
    std::fill(params_.b1.begin(), params_.b1.end(), 0.0);
    std::fill(params_.b2.begin(), params_.b2.end(), 0.0);
  }

  void check_input(const FeatureVector& x) const {
    if (x.dimension != input_dim_)
      throw ValidationError("input dimension " + std::to_string(x.dimension) + " does not match model dimension " +
                            std::to_string(input_dim_));
  }

  // Hidden pre-activations.
  std::vector<double> hidden_pre(const FeatureVector& x) const {
    std::vector<double> z(params_.b1);
    for (const auto& e : x.entries) {
      const double* row = &params_.w1[static_cast<std::size_t>(e.index) * hidden_];
      for (std::size_t h = 0; h < hidden_; ++h) z[h] += e.weight * row[h];
    }
    return z;
  }

  // mask multiplies post-ReLU activations; empty means no dropout.
  Distribution forward(const FeatureVector& x, std::span<const double> mask = {}) const {
    auto a = hidden_pre(x);
    for (std::size_t h = 0; h < hidden_; ++h) {
      a[h] = std::max(0.0, a[h]);
      if (!mask.empty()) a[h] *= mask[h];
    }
    return output(a);
  }

  Distribution output(const std::vector<double>& a) const {
    Distribution logits(params_.b2);
    for (std::size_t k = 0; k < classes_; ++k) {
      const double* row = &params_.w2[k * hidden_];
      double s = 0;
      for (std::size_t h = 0; h < hidden_; ++h) s += row[h] * a[h];
      logits[k] += s;
    }
    return softmax(logits);
  }

  static Distribution softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    Distribution p(logits.size());
    double z = 0;
    for (std::size_t k = 0; k < logits.size(); ++k) z += (p[k] = std::exp(logits[k] - mx));
    for (auto& v : p) v /= z;
    return p;
  }

  // Inverted-dropout mask: kept units are scaled by 1/(1-p).
  std::vector<double> sample_mask(Rng& rng) const {
    std::vector<double> m(hidden_, 1.0);
    if (dropout_rate_ <= 0.0) return m;
    const double scale = 1.0 / (1.0 - dropout_rate_);
    for (auto& v : m) v = uniform01(rng) < dropout_rate_ ? 0.0 : scale;
    return m;
  }

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  std::uint32_t input_dim_ = 0;
  std::size_t hidden_ = 0;
  std::size_t classes_ = 0;
  double dropout_rate_ = 0.0;
  std::uint64_t seed_ = 0;
  bool trained_ = false;
  Parameters params_;
};

// ---------------------------------------------------------------------------
// Loss and gradients

struct SparseGradient {
  std::unordered_map<std::uint32_t, std::vector<double>> w1;  // input row -> hidden grads
  std::vector<double> b1, w2, b2;
};

namespace detail {

// Adds d(-log p[label])/d(params) for one example into g; returns the loss.
inline double accumulate_example(const Classifier& m, const Example& ex, std::span<const double> mask,
                                 SparseGradient& g) {
  const std::size_t H = m.hidden();
  const std::size_t K = m.classes();
  const auto& P = m.params();
  const auto z = m.hidden_pre(ex.x);
  std::vector<double> a(H);
  for (std::size_t h = 0; h < H; ++h) a[h] = std::max(0.0, z[h]) * (mask.empty() ? 1.0 : mask[h]);
  const auto p = m.output(a);
  const double loss = -std::log(std::max(p[ex.label], std::numeric_limits<double>::min()));

  std::vector<double> dlogit(p);
  dlogit[ex.label] -= 1.0;
  std::vector<double> da(H, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    g.b2[k] += dlogit[k];
    for (std::size_t h = 0; h < H; ++h) {
      g.w2[k * H + h] += dlogit[k] * a[h];
      da[h] += dlogit[k] * P.w2[k * H + h];
    }
  }
  std::vector<double> dz(H);
  for (std::size_t h = 0; h < H; ++h) dz[h] = z[h] > 0.0 ? da[h] * (mask.empty() ? 1.0 : mask[h]) : 0.0;
  for (std::size_t h = 0; h < H; ++h) g.b1[h] += dz[h];
  for (const auto& e : ex.x.entries) {
    auto& row = g.w1[e.index];
    if (row.empty()) row.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) row[h] += e.weight * dz[h];
  }
  return loss;
}

inline SparseGradient zero_gradient(const Classifier& m) {
  SparseGradient g;
  g.b1.assign(m.hidden(), 0.0);
  g.w2.assign(m.classes() * m.hidden(), 0.0);
  g.b2.assign(m.classes(), 0.0);
  return g;
}

}  // namespace detail

// Mean cross-entropy over a batch with fixed dropout masks (one per example,
// or none), and its dense gradient.
inline double loss_and_gradient(const Classifier& m, std::span<const Example> batch,
                                std::span<const std::vector<double>> masks, Parameters* grad) {
  if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
  auto g = detail::zero_gradient(m);
  double loss = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    m.check_input(batch[i].x);
    const std::span<const double> mask = masks.empty() ? std::span<const double>{} : std::span<const double>(masks[i]);
    loss += detail::accumulate_example(m, batch[i], mask, g);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grad) {
    grad->w1.assign(m.params().w1.size(), 0.0);
    for (const auto& [idx, row] : g.w1)
      for (std::size_t h = 0; h < m.hidden(); ++h) grad->w1[idx * m.hidden() + h] = row[h] * inv;
    grad->b1 = g.b1;
    grad->w2 = g.w2;
    grad->b2 = g.b2;
    for (auto* v : {&grad->b1, &grad->w2, &grad->b2})
      for (auto& x : *v) x *= inv;
  }
  return loss * inv;
}

// ---------------------------------------------------------------------------
// Training

// Mini-batch gradient descent on cross-entropy. Deterministic in
// (dataset order, hp, classes).
inline Classifier train_classifier(const std::vector<Example>& data, std::size_t classes, const HyperParams& hp) {
  if (data.empty()) throw ValidationError("train_classifier: empty dataset");
  const std::uint32_t dim = data.front().x.dimension;
  std::vector<std::size_t> per_class(classes, 0);
  for (const auto& ex : data) {
    if (ex.x.dimension != dim) throw ValidationError("train_classifier: inconsistent feature dimensions");
    if (ex.label >= classes) throw ValidationError("train_classifier: label out of range");
    ++per_class[ex.label];
  }
  for (std::size_t k = 0; k < classes; ++k)
    if (per_class[k] == 0) throw ValidationError("train_classifier: class " + std::to_string(k) + " has no examples");
  if (hp.batch_size == 0) throw ValidationError("train_classifier: batch_size must be positive");

  Classifier m(dim, hp.hidden, classes, hp.dropout_rate, hp.seed);
  Rng rng(hp.seed);
  m.initialize(hp.init_scale, rng);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t H = hp.hidden;
  auto& P = m.params();

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      auto g = detail::zero_gradient(m);
      double loss = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto mask = m.sample_mask(rng);
        loss += detail::accumulate_example(m, data[order[i]], mask, g);
      }
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch starting at " << start
            << " (learning_rate=" << hp.learning_rate << ")";
        throw TrainingError(msg.str());
      }
      const double step = hp.learning_rate / static_cast<double>(end - start);
      const double decay = hp.learning_rate * hp.l2;
      for (const auto& [idx, row] : g.w1) {
        double* w = &P.w1[static_cast<std::size_t>(idx) * H];
        for (std::size_t h = 0; h < H; ++h) w[h] -= step * row[h] + decay * w[h];
      }
      if (hp.hidden_bias)
        for (std::size_t h = 0; h < H; ++h) P.b1[h] -= step * g.b1[h];
      for (std::size_t i = 0; i < g.w2.size(); ++i) P.w2[i] -= step * g.w2[i] + decay * P.w2[i];
      for (std::size_t k = 0; k < classes; ++k) P.b2[k] -= step * g.b2[k];
    }
  }
  m.set_trained(true);
  return m;
}

// ---------------------------------------------------------------------------
// Inference

inline Distribution predict(const Classifier& m, const FeatureVector& x) {
  m.check_input(x);
  return m.forward(x);
}

inline std::size_t argmax(const Distribution& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

inline double entropy(const Distribution& p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

struct UncertaintyReport {
  std::vector<Distribution> samples;
  Distribution mean;
  double predictive_entropy = 0;  // nats
  double normalized_entropy = 0;  // entropy / ln K
  double variation_ratio = 0;
  std::size_t argmax = 0;
  friend bool operator==(const UncertaintyReport&, const UncertaintyReport&) = default;
};

// Summary statistics over a set of sampled distributions.
inline UncertaintyReport summarize_samples(std::vector<Distribution> samples) {
  if (samples.empty()) throw ValidationError("summarize_samples: no samples");
  const std::size_t K = samples.front().size();
  UncertaintyReport r;
  r.mean.assign(K, 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < K; ++k) r.mean[k] += s[k];
  for (auto& v : r.mean) v /= static_cast<double>(samples.size());
  r.predictive_entropy = entropy(r.mean);
  r.normalized_entropy = K > 1 ? std::clamp(r.predictive_entropy / std::log(static_cast<double>(K)), 0.0, 1.0) : 0.0;
  std::vector<std::size_t> votes(K, 0);
  for (const auto& s : samples) ++votes[argmax(s)];
  const auto modal = *std::max_element(votes.begin(), votes.end());
  r.variation_ratio = 1.0 - static_cast<double>(modal) / static_cast<double>(samples.size());
  r.argmax = argmax(r.mean);
  r.samples = std::move(samples);
  return r;
}

// T stochastic forward passes with dropout active. The RNG is local to the
// call, so the report is a pure function of (model, x, passes, seed).
inline UncertaintyReport mc_dropout_predict(const Classifier& m, const FeatureVector& x, std::size_t passes,
                                            std::uint64_t seed) {
  if (passes == 0) throw ValidationError("mc_dropout_predict: pass count must be >= 1");
  m.check_input(x);
  Rng rng(seed);
  std::vector<Distribution> samples;
  samples.reserve(passes);
  for (std::size_t t = 0; t < passes; ++t) {
    const auto mask = m.sample_mask(rng);
    samples.push_back(m.forward(x, mask));
  }
  return summarize_samples(std::move(samples));
}

}  // namespace hitl::ml
