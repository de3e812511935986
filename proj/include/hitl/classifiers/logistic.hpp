#pragma once

// Binary logistic regression over sparse hashed features.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hitl/core.hpp"
#include "hitl/text_features.hpp"

namespace hitl::ml {

struct BinaryExample {
  text::FeatureVector x;
  bool label = false;
};

struct LogisticParams {
  int epochs = 30;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
};

class LogisticRegression {
 public:
  LogisticRegression() = default;
  explicit LogisticRegression(std::uint32_t dim) : weights_(dim, 0.0) {}

  std::uint32_t dimension() const { return static_cast<std::uint32_t>(weights_.size()); }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  double& bias() { return bias_; }
  double bias() const { return bias_; }

  double logit(const text::FeatureVector& x) const {
    if (x.dimension != weights_.size())
      throw ValidationError("logistic: input dimension " + std::to_string(x.dimension) + " != " +
                            std::to_string(weights_.size()));
    double s = bias_;
    for (const auto& e : x.entries) s += weights_[e.index] * e.weight;
    return s;
  }

  double probability(const text::FeatureVector& x) const {
    const double z = logit(x);
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }

  friend bool operator==(const LogisticRegression&, const LogisticRegression&) = default;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  bool trained_ = false;
};

inline LogisticRegression train_logistic(const std::vector<BinaryExample>& data, const LogisticParams& hp) {
  if (data.empty()) throw ValidationError("train_logistic: empty dataset");
  const auto dim = data.front().x.dimension;
  bool has_pos = false, has_neg = false;
  for (const auto& ex : data) {
    if (ex.x.dimension != dim) throw ValidationError("train_logistic: inconsistent dimensions");
    (ex.label ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw ValidationError("train_logistic: both classes need examples");
  if (hp.batch_size == 0) throw ValidationError("train_logistic: batch_size must be positive");

  LogisticRegression m(dim);
  Rng rng(hp.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto& w = m.weights();
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double step = hp.learning_rate / static_cast<double>(end - start);
      // Gradients are computed against the pre-batch weights.
      std::vector<std::pair<std::uint32_t, double>> grads;
      double gb = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = data[order[i]];
        const double err = m.probability(ex.x) - (ex.label ? 1.0 : 0.0);
        if (!std::isfinite(err)) throw TrainingError("train_logistic: non-finite prediction");
        gb += err;
        for (const auto& e : ex.x.entries) grads.emplace_back(e.index, err * e.weight);
      }
      for (const auto& [idx, g] : grads) w[idx] -= step * (g + hp.l2 * w[idx]);
      m.bias() -= step * gb;
    }
  }
  m.set_trained(true);
  return m;
}

}  // namespace hitl::ml
