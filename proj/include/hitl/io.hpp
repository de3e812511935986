#pragma once

// Line-oriented JSON files: corpora, annotation records, capture files.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hitl/core.hpp"

namespace hitl {

using json = nlohmann::json;

namespace io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("write failed: " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

// Parses one JSON document per non-blank line. Line numbers are 1-based.
inline std::vector<json> parse_jsonl(const std::string& text, const std::string& origin = "") {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(n, (origin.empty() ? "" : origin + ": ") + e.what());
    }
  }
  return out;
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  write_file(path, out);
}

inline void append_jsonl(const std::filesystem::path& path, const json& row) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << row.dump() << '\n';
  out.flush();
  if (!out) throw IoError("append failed: " + path.string());
}

}  // namespace io

// One corpus record: {id, text, gold_label?}.
struct Utterance {
  std::string id;
  std::string text;
  std::optional<DialogueAct> gold;
};

inline json to_json(const Utterance& u) {
  json j{{"id", u.id}, {"text", u.text}};
  if (u.gold) j["gold_label"] = to_string(*u.gold);
  return j;
}

inline std::vector<Utterance> load_corpus(const std::filesystem::path& path) {
  std::vector<Utterance> out;
  std::size_t line = 0;
  for (const auto& j : io::read_jsonl(path)) {
    ++line;
    try {
      Utterance u;
      u.id = j.at("id").get<std::string>();
      u.text = j.at("text").get<std::string>();
      if (j.contains("gold_label") && !j["gold_label"].is_null())
        u.gold = parse_act(j["gold_label"].get<std::string>());
      out.push_back(std::move(u));
    } catch (const json::exception& e) {
      throw ParseError(line, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hitl
