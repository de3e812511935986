#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hitl {

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class CompileError : public Error {
 public:
  CompileError(std::size_t pattern_index, const std::string& what)
      : Error("pattern " + std::to_string(pattern_index) + ": " + what),
        pattern_index_(pattern_index) {}
  std::size_t pattern_index() const { return pattern_index_; }

 private:
  std::size_t pattern_index_;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dialogue acts

enum class DialogueAct : std::uint8_t { Probing = 0, Factual = 1, Expository = 2, Other = 3 };

inline constexpr std::size_t kNumActs = 4;
inline constexpr std::array<DialogueAct, kNumActs> kAllActs = {
    DialogueAct::Probing, DialogueAct::Factual, DialogueAct::Expository, DialogueAct::Other};

inline constexpr std::size_t index_of(DialogueAct a) { return static_cast<std::size_t>(a); }

inline DialogueAct act_from_index(std::size_t i) {
  if (i >= kNumActs) throw ValidationError("dialogue act index out of range: " + std::to_string(i));
  return static_cast<DialogueAct>(i);
}

inline std::string_view to_string(DialogueAct a) {
  switch (a) {
    case DialogueAct::Probing: return "Probing";
    case DialogueAct::Factual: return "Factual";
    case DialogueAct::Expository: return "Expository";
    case DialogueAct::Other: return "Other";
  }
  return "Other";
}

inline DialogueAct parse_act(std::string_view s) {
  for (auto a : kAllActs)
    if (to_string(a) == s) return a;
  throw ValidationError("unknown dialogue act: '" + std::string(s) + "'");
}

// A vote is either an act or abstain.
using Vote = std::optional<DialogueAct>;

// ---------------------------------------------------------------------------
// Random numbers. std::mt19937_64 output is specified by the standard; the
// distributions are not, so uniform draws are derived from raw bits here.

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Box-Muller; consumes two uniforms per call.
inline double normal(Rng& rng, double mean, double sd) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Shortest round-trip decimal; integers print without a fractional part.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, ptr);
}

}  // namespace hitl
