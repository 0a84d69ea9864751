#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtab/core.hpp"
#include "mtab/records.hpp"

namespace mtab {

// One record per line: {"id": str, "text": str, "lang": str,
// "label": str|null, "origin": str|absent, "source_id": str|absent}.
inline TweetRecord record_from_json(const nlohmann::json& j) {
  TweetRecord r;
  r.id = j.at("id").get<std::string>();
  r.raw_text = j.at("text").get<std::string>();
  r.lang = LanguageTag(j.at("lang").get<std::string>());
  if (j.contains("label") && !j.at("label").is_null()) {
    r.raw_label = j.at("label").get<std::string>();
    r.label = label_from_string(*r.raw_label);
  }
  if (j.contains("origin") && !j.at("origin").is_null())
    r.origin = origin_from_string(j.at("origin").get<std::string>());
  if (j.contains("source_id") && !j.at("source_id").is_null())
    r.source_id = j.at("source_id").get<std::string>();
  return r;
}

inline nlohmann::json record_to_json(const TweetRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["text"] = r.text();
  j["lang"] = r.lang.str();
  if (auto s = r.label_string())
    j["label"] = *s;
  else
    j["label"] = nullptr;
  j["origin"] = to_string(r.origin);
  if (r.source_id) j["source_id"] = *r.source_id;
  return j;
}

inline Dataset load_corpus(const std::filesystem::path& path,
                           std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  if (name.empty()) name = path.stem().string();

  std::vector<TweetRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError(path.string() + ": malformed record on line " +
                       std::to_string(line_no));
    TweetRecord r;
    try {
      r = record_from_json(j);
      validate_record(r);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": malformed record on line " +
                       std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    auto [it, inserted] = seen.emplace(r.id, line_no);
    if (!inserted)
      throw DuplicateIdError(path.string() + ": duplicate id '" + r.id +
                             "' on line " + std::to_string(line_no));
    records.push_back(std::move(r));
  }
  return Dataset(std::move(name), std::move(records),
                 "loaded from " + path.string());
}

inline void save_corpus(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  for (const auto& r : d.records()) out << record_to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mtab
