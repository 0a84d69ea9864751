#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtab/core.hpp"
#include "mtab/pseudo_lang.hpp"
#include "mtab/records.hpp"

namespace mtab {

// Word-level tokenizer with a frequency-built vocabulary. Stands in for a
// pretrained subword vocabulary; deterministic and dependency-free.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kFirstVocabId = 4;

  Tokenizer() = default;
  Tokenizer(std::vector<std::string> tokens_by_id, int max_len, bool lowercase)
      : max_len_(max_len), lowercase_(lowercase) {
    int id = kFirstVocabId;
    for (auto& t : tokens_by_id) {
      token_to_id_.emplace(std::move(t), id++);
    }
  }

  int max_len() const { return max_len_; }
  bool lowercase() const { return lowercase_; }
  int vocab_size() const {
    return kFirstVocabId + static_cast<int>(token_to_id_.size());
  }

  int token_id(const std::string& token) const {
    auto it = token_to_id_.find(lowercase_ ? ascii_lower(token) : token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  struct Encoded {
    std::vector<int> ids;   // length = max_len exactly
    std::vector<int> mask;  // 1 on real tokens, 0 on padding
    int real_len() const {
      int n = 0;
      for (int m : mask) n += m;
      return n;
    }
  };

  // [CLS] tokens... [SEP], truncated so SEP is always the last real token,
  // padded to max_len.
  Encoded encode(const std::string& text) const {
    std::vector<std::string> tokens = whitespace_tokens(text);
    const std::size_t budget = static_cast<std::size_t>(max_len_) - 2;
    if (tokens.size() > budget) tokens.resize(budget);
    Encoded e;
    e.ids.reserve(max_len_);
    e.ids.push_back(kCls);
    for (const auto& t : tokens) e.ids.push_back(token_id(t));
    e.ids.push_back(kSep);
    e.mask.assign(e.ids.size(), 1);
    e.ids.resize(max_len_, kPad);
    e.mask.resize(max_len_, 0);
    return e;
  }

  const std::unordered_map<std::string, int>& vocabulary() const {
    return token_to_id_;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["version"] = 1;
    j["max_len"] = max_len_;
    j["lowercase"] = lowercase_;
    std::map<std::string, int> sorted(token_to_id_.begin(), token_to_id_.end());
    j["vocab"] = sorted;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write tokenizer to " + path.string());
    out << j.dump(2) << '\n';
  }

  static Tokenizer load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("tokenizer file not found: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed tokenizer file " + path.string());
    Tokenizer t;
    t.max_len_ = j.at("max_len").get<int>();
    t.lowercase_ = j.at("lowercase").get<bool>();
    for (auto& [token, id] : j.at("vocab").items())
      t.token_to_id_.emplace(token, id.get<int>());
    return t;
  }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  int max_len_ = 128;
  bool lowercase_ = true;
};

// Vocabulary = whitespace tokens with corpus frequency >= min_freq, ids in
// (-frequency, token) order for determinism. Builds over every dataset given
// so the vocabulary can cover unlabeled target-language text as well.
inline Tokenizer build_vocab(const std::vector<const Dataset*>& corpora,
                             int min_freq, int max_len = 128,
                             bool lowercase = true) {
  bool any_records = false;
  std::map<std::string, std::size_t> freq;
  for (const Dataset* d : corpora) {
    if (!d->empty()) any_records = true;
    for (const auto& r : d->records())
      for (auto& tok : whitespace_tokens(r.text()))
        freq[lowercase ? ascii_lower(tok) : tok]++;
  }
  if (!any_records) throw EmptyCorpusError("cannot build vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(),
                                                           freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  for (auto& [token, count] : entries)
    if (count >= static_cast<std::size_t>(min_freq)) tokens.push_back(token);
  return Tokenizer(std::move(tokens), max_len, lowercase);
}

inline Tokenizer build_vocab(const Dataset& d, int min_freq, int max_len = 128,
                             bool lowercase = true) {
  return build_vocab(std::vector<const Dataset*>{&d}, min_freq, max_len,
                     lowercase);
}

}  // namespace mtab
