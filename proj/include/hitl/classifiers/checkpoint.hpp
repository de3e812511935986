#pragma once

// Versioned binary checkpoints. Layout (little-endian):
//
//   magic[8] version:u32 meta_len:u32 meta[meta_len]   (meta is JSON text)
//   MLP:      input_dim:u32 hidden:u32 classes:u32 dropout:f64 seed:u64
//             w1 b1 w2 b2 as f64 arrays
//   Logistic: dim:u32 bias:f64 weights as f64 array
//
// Doubles are copied bit for bit, so save/load round-trips exactly.

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "hitl/classifiers/logistic.hpp"
#include "hitl/classifiers/mlp.hpp"
#include "hitl/io.hpp"

namespace hitl::ml {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kMlpMagic[8] = {'H', 'I', 'T', 'L', 'M', 'L', 'P', '\0'};
inline constexpr char kLogisticMagic[8] = {'H', 'I', 'T', 'L', 'L', 'O', 'G', '\0'};

namespace detail {

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void put_doubles(const std::vector<double>& v) {
    put_bytes(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

  template <typename T>
  T get() {
    T v;
    take(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  void take(char* out, std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError(0, origin_ + ": checkpoint truncated");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  void get_doubles(std::vector<double>& v, std::size_t n) {
    v.resize(n);
    take(reinterpret_cast<char*>(v.data()), n * sizeof(double));
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline void write_header(Writer& w, const char (&magic)[8], const json& meta) {
  w.put_bytes(magic, 8);
  w.put(kCheckpointVersion);
  const auto m = meta.dump();
  w.put(static_cast<std::uint32_t>(m.size()));
  w.put_bytes(m.data(), m.size());
}

inline json read_header(Reader& r, const char (&magic)[8], const std::string& origin) {
  char got[8];
  r.take(got, 8);
  if (std::memcmp(got, magic, 8) != 0) throw ParseError(0, origin + ": not a checkpoint of the expected kind");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ParseError(0, origin + ": unsupported checkpoint version " + std::to_string(version));
  const auto len = r.get<std::uint32_t>();
  std::string meta(len, '\0');
  r.take(meta.data(), len);
  try {
    return json::parse(meta);
  } catch (const json::parse_error& e) {
    throw ParseError(0, origin + ": bad checkpoint metadata: " + e.what());
  }
}

}  // namespace detail

inline std::string serialize(const Classifier& m, const json& meta = json::object()) {
  if (!m.trained()) throw StateError("refusing to checkpoint an untrained classifier");
  detail::Writer w;
  detail::write_header(w, kMlpMagic, meta);
  w.put(m.input_dim());
  w.put(static_cast<std::uint32_t>(m.hidden()));
  w.put(static_cast<std::uint32_t>(m.classes()));
  w.put(m.dropout_rate());
  w.put(m.seed());
  const auto& p = m.params();
  for (const auto* v : {&p.w1, &p.b1, &p.w2, &p.b2}) w.put_doubles(*v);
  return w.str();
}

inline Classifier deserialize_classifier(std::string bytes, json* meta = nullptr, const std::string& origin = "checkpoint") {
  detail::Reader r(std::move(bytes), origin);
  auto header = detail::read_header(r, kMlpMagic, origin);
  const auto dim = r.get<std::uint32_t>();
  const auto hidden = r.get<std::uint32_t>();
  const auto classes = r.get<std::uint32_t>();
  const auto dropout = r.get<double>();
  const auto seed = r.get<std::uint64_t>();
  Classifier m(dim, hidden, classes, dropout, seed);
  auto& p = m.params();
  r.get_doubles(p.w1, static_cast<std::size_t>(dim) * hidden);
  r.get_doubles(p.b1, hidden);
  r.get_doubles(p.w2, static_cast<std::size_t>(classes) * hidden);
  r.get_doubles(p.b2, classes);
  if (!r.done()) throw ParseError(0, origin + ": trailing bytes after checkpoint");
  m.set_trained(true);
  if (meta) *meta = std::move(header);
  return m;
}

inline std::string serialize(const LogisticRegression& m, const json& meta = json::object()) {
  if (!m.trained()) throw StateError("refusing to checkpoint an untrained model");
  detail::Writer w;
  detail::write_header(w, kLogisticMagic, meta);
  w.put(m.dimension());
  w.put(m.bias());
  w.put_doubles(m.weights());
  return w.str();
}

inline LogisticRegression deserialize_logistic(std::string bytes, json* meta = nullptr,
                                               const std::string& origin = "checkpoint") {
  detail::Reader r(std::move(bytes), origin);
  auto header = detail::read_header(r, kLogisticMagic, origin);
  const auto dim = r.get<std::uint32_t>();
  LogisticRegression m(dim);
  m.bias() = r.get<double>();
  r.get_doubles(m.weights(), dim);
  if (!r.done()) throw ParseError(0, origin + ": trailing bytes after checkpoint");
  m.set_trained(true);
  if (meta) *meta = std::move(header);
  return m;
}

template <typename Model>
void save_checkpoint(const std::filesystem::path& path, const Model& m, const json& meta = json::object()) {
  io::write_file(path, serialize(m, meta));
}

inline Classifier load_classifier(const std::filesystem::path& path, json* meta = nullptr) {
  return deserialize_classifier(io::read_file(path), meta, path.string());
}

inline LogisticRegression load_logistic(const std::filesystem::path& path, json* meta = nullptr) {
  return deserialize_logistic(io::read_file(path), meta, path.string());
}

}  // namespace hitl::ml
