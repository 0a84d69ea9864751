#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtab/core.hpp"
#include "mtab/pseudo_lang.hpp"
#include "mtab/records.hpp"

namespace mtab {

// Translation backend contract: equal-length output, deterministic for fixed
// inputs, never empty for non-empty input. Real MT systems plug in here; the
// artifact ships a pseudo-language translator and a cache-only adapter.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::vector<std::string> translate(
      const std::vector<std::string>& texts, const LanguageTag& source,
      const LanguageTag& target) = 0;
  virtual std::string name() const = 0;
};

class PseudoTranslator final : public Translator {
 public:
  explicit PseudoTranslator(std::map<std::string, PseudoLanguageSpec> specs)
      : specs_(std::move(specs)) {}

  std::vector<std::string> translate(const std::vector<std::string>& texts,
                                     const LanguageTag& /*source*/,
                                     const LanguageTag& target) override {
    auto it = specs_.find(target.str());
    if (it == specs_.end())
      throw AugmentationError("no pseudo-language spec for target '" +
                              target.str() + "'");
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(pseudo_translate(t, it->second));
    return out;
  }

  std::string name() const override { return "pseudo"; }

 private:
  std::map<std::string, PseudoLanguageSpec> specs_;
};

// Serves translations exclusively from a warm cache; any miss is an error.
// Lets audited translation runs be replayed offline.
class CacheOnlyTranslator final : public Translator {
 public:
  std::vector<std::string> translate(const std::vector<std::string>&,
                                     const LanguageTag&,
                                     const LanguageTag& target) override {
    throw AugmentationError("cache miss for target '" + target.str() +
                            "' under cache-only translator");
  }
  std::string name() const override { return "cache-only"; }
};

// Persistent (source, target, text-hash) -> translation map backed by a JSONL
// sidecar. Append-only within a run; hits are byte-identical replays.
class TranslationCache {
 public:
  TranslationCache() = default;

  explicit TranslationCache(std::filesystem::path path)
      : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw IoError("cannot open translation cache " + path_.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw ParseError(path_.string() + ": malformed cache entry on line " +
                         std::to_string(line_no));
      entries_[key(j.at("src").get<std::string>(),
                   j.at("tgt").get<std::string>(),
                   j.at("hash").get<std::string>())] =
          j.at("text_out").get<std::string>();
    }
  }

  static std::string text_hash(const std::string& text) {
    return fnv1a64_hex(text);
  }

  const std::string* lookup(const LanguageTag& src, const LanguageTag& tgt,
                            const std::string& text) const {
    auto it = entries_.find(key(src.str(), tgt.str(), text_hash(text)));
    return it == entries_.end() ? nullptr : &it->second;
  }

  void insert(const LanguageTag& src, const LanguageTag& tgt,
              const std::string& text, const std::string& translated) {
    const std::string h = text_hash(text);
    if (entries_.emplace(key(src.str(), tgt.str(), h), translated).second &&
        !path_.empty()) {
      nlohmann::json j;
      j["src"] = src.str();
      j["tgt"] = tgt.str();
      j["hash"] = h;
      j["text_out"] = translated;
      pending_.push_back(j.dump());
    }
  }

  // Appends entries recorded since the last flush to the sidecar file.
  void flush() {
    if (path_.empty() || pending_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to translation cache " +
                            path_.string());
    for (const auto& line : pending_) out << line << '\n';
    pending_.clear();
  }

  std::size_t size() const { return entries_.size(); }

 private:
  static std::string key(const std::string& s, const std::string& t,
                         const std::string& h) {
    return s + '\t' + t + '\t' + h;
  }

  std::filesystem::path path_;
  std::unordered_map<std::string, std::string> entries_;
  std::vector<std::string> pending_;
};

// Id for a translated copy; unique as long as no original id uses the suffix.
inline std::string translated_id(const std::string& source_id,
                                 const LanguageTag& target) {
  return source_id + "__" + target.str();
}

// Translates a batch of cleaned records into `target`. The cache is consulted
// first; repeated texts trigger a single backend call.
inline std::vector<TweetRecord> translate_records(
    const std::vector<TweetRecord>& records, Translator& translator,
    const LanguageTag& target, TranslationCache& cache) {
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  for (const auto& r : records) {
    if (r.lang != records.front().lang)
      throw PreconditionError("translate_records requires a single source language");
    const std::string& text = r.text();
    if (!cache.lookup(r.lang, target, text) && !miss_index.count(text)) {
      miss_index.emplace(text, misses.size());
      misses.push_back(text);
    }
  }
  if (!misses.empty()) {
    const LanguageTag source = records.front().lang;
    std::vector<std::string> translated;
    try {
      translated = translator.translate(misses, source, target);
    } catch (const AugmentationError&) {
      throw;
    } catch (const std::exception& e) {
      throw AugmentationError("translator '" + translator.name() +
                              "' failed on batch of " +
                              std::to_string(misses.size()) + " texts: " +
                              e.what());
    }
    if (translated.size() != misses.size())
      throw AugmentationError("translator returned " +
                              std::to_string(translated.size()) +
                              " texts for a batch of " +
                              std::to_string(misses.size()));
    for (std::size_t i = 0; i < misses.size(); ++i) {
      if (translated[i].empty() && !misses[i].empty())
        throw AugmentationError("translator returned empty text");
      cache.insert(source, target, misses[i], translated[i]);
    }
    cache.flush();
  }

  std::vector<TweetRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::string* text = cache.lookup(r.lang, target, r.text());
    if (!text) throw AugmentationError("cache lookup failed after fill");
    TweetRecord t;
    t.id = translated_id(r.id, target);
    t.raw_text = *text;
    t.clean_text = *text;  // translated copies are not re-cleaned
    t.lang = target;
    t.label = r.label;
    t.raw_label = r.raw_label;
    t.origin = Origin::Translated;
    t.source_id = r.id;
    out.push_back(std::move(t));
  }
  return out;
}

// Expands a labeled source dataset with one translated copy per record and
// target language. Output size is |d| * (1 + |targets|).
inline Dataset augment_with_translations(const Dataset& d,
                                         const std::vector<LanguageTag>& targets,
                                         Translator& translator,
                                         TranslationCache& cache) {
  if (targets.empty())
    throw PreconditionError("augmentation requires at least one target language");
  for (const auto& r : d.records()) {
    if (r.origin == Origin::Translated)
      throw PreconditionError(
          "augmentation input already contains translated copies");
    if (!r.label)
      throw PreconditionError("augmentation input must be fully labeled");
    for (const auto& t : targets)
      if (t == r.lang)
        throw PreconditionError("target language '" + t.str() +
                                "' equals source language");
  }
  std::vector<TweetRecord> out(d.records());
  for (const auto& target : targets) {
    std::vector<TweetRecord> translated =
        translate_records(d.records(), translator, target, cache);
    out.insert(out.end(), std::make_move_iterator(translated.begin()),
               std::make_move_iterator(translated.end()));
  }
  Dataset result = d.with_records(std::move(out), "translation-augmented");
  result.check_source_links();
  return result;
}

}  // namespace mtab
