#pragma once

// Tokenization and hashed n-gram embeddings.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hitl/core.hpp"

namespace hitl::text {

struct Token {
  std::string text;  // lowercased
  std::size_t begin = 0;  // byte offsets into the original string
  std::size_t end = 0;
};

namespace detail {

inline bool is_split_punct(char c) { return c == '?' || c == '!' || c == '.' || c == ','; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace detail

// Lowercase, split on whitespace, and break "? ! . ," into their own tokens.
// A '.' or ',' between two digits stays inside the number ("2.5").
inline std::vector<Token> tokenize_spans(std::string_view text) {
  std::vector<Token> out;
  Token cur;
  bool open = false;
  auto flush = [&] {
    if (open) out.push_back(std::move(cur));
    cur = Token{};
    open = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (detail::is_split_punct(c)) {
      const bool numeric_sep = (c == '.' || c == ',') && open && !cur.text.empty() &&
                               detail::is_digit(cur.text.back()) && i + 1 < text.size() &&
                               detail::is_digit(text[i + 1]);
      if (!numeric_sep) {
        flush();
        out.push_back(Token{std::string(1, c), i, i + 1});
        continue;
      }
    }
    if (!open) {
      cur.begin = i;
      open = true;
    }
    cur.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    cur.end = i + 1;
  }
  flush();
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_spans(text)) out.push_back(std::move(t.text));
  return out;
}

// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct EmbedConfig {
  std::uint32_t dimension = 1u << 16;
  int ngram_max = 2;
  std::uint64_t hash_seed = 0;
};

inline bool is_power_of_two(std::uint64_t d) { return d != 0 && (d & (d - 1)) == 0; }

struct FeatureEntry {
  std::uint32_t index;
  double weight;
  friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

// Sparse vector, entries sorted by index with no duplicates.
struct FeatureVector {
  std::uint32_t dimension = 1u << 16;
  std::vector<FeatureEntry> entries;

  bool empty() const { return entries.empty(); }
  double norm() const {
    double s = 0;
    for (const auto& e : entries) s += e.weight * e.weight;
    return std::sqrt(s);
  }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline std::uint32_t hash_index(std::string_view feature, const EmbedConfig& cfg) {
  return static_cast<std::uint32_t>((fnv1a64(feature) ^ cfg.hash_seed) & (cfg.dimension - 1));
}

// Accumulates hashed string features and produces an L2-normalized vector.
class FeatureBuilder {
 public:
  explicit FeatureBuilder(const EmbedConfig& cfg) : cfg_(cfg) {
    if (!is_power_of_two(cfg.dimension))
      throw ValidationError("embedding dimension must be a power of two, got " +
                            std::to_string(cfg.dimension));
  }

  void add(std::string_view feature, double weight = 1.0) { counts_[hash_index(feature, cfg_)] += weight; }

  void add_ngrams(const std::vector<std::string>& tokens) {
    const int nmax = std::max(1, cfg_.ngram_max);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::string gram = tokens[i];
      add(gram);
      for (int n = 2; n <= nmax && i + n <= tokens.size(); ++n) {
        gram += ' ';
        gram += tokens[i + n - 1];
        add(gram);
      }
    }
  }

  FeatureVector build() const {
    FeatureVector v;
    v.dimension = cfg_.dimension;
    double s = 0;
    for (const auto& [idx, w] : counts_) s += w * w;
    if (s == 0) return v;
    const double inv = 1.0 / std::sqrt(s);
    v.entries.reserve(counts_.size());
    for (const auto& [idx, w] : counts_)
      if (w != 0) v.entries.push_back({idx, w * inv});
    return v;
  }

 private:
  EmbedConfig cfg_;
  std::map<std::uint32_t, double> counts_;
};

// Term-frequency n-grams (1..ngram_max) hashed and L2-normalized. Bigram
// strings join their tokens with a single space.
inline FeatureVector embed(std::string_view text, const EmbedConfig& cfg = {}) {
  FeatureBuilder b(cfg);
  b.add_ngrams(tokenize(text));
  return b.build();
}

inline double dot(const FeatureVector& u, const FeatureVector& v) {
  if (u.dimension != v.dimension)
    throw ValidationError("dimension mismatch: " + std::to_string(u.dimension) + " vs " +
                          std::to_string(v.dimension));
  double s = 0;
  auto a = u.entries.begin();
  auto b = v.entries.begin();
  while (a != u.entries.end() && b != v.entries.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      s += a->weight * b->weight;
      ++a;
      ++b;
    }
  }
  return s;
}

// Weights are nonnegative, so the dot product of unit vectors lands in [0,1];
// the clamp only absorbs rounding.
inline double cosine_similarity(const FeatureVector& u, const FeatureVector& v) {
  const double d = dot(u, v);
  if (u.empty() || v.empty()) return 0.0;
  return std::clamp(d, 0.0, 1.0);
}

// Indices of the k largest weights, ties broken by smaller index.
inline std::vector<std::uint32_t> top_indices(const FeatureVector& v, std::size_t k) {
  std::vector<FeatureEntry> e = v.entries;
  std::stable_sort(e.begin(), e.end(), [](const FeatureEntry& a, const FeatureEntry& b) {
    return a.weight > b.weight;
  });
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < e.size() && i < k; ++i) out.push_back(e[i].index);
  return out;
}

}  // namespace hitl::text
