#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mtab/core.hpp"
#include "mtab/labels.hpp"

namespace mtab {

enum class Origin { Original, Translated, Synthetic };

inline std::string to_string(Origin o) {
  switch (o) {
    case Origin::Original: return "original";
    case Origin::Translated: return "translated";
    case Origin::Synthetic: return "synthetic";
  }
  throw ConfigError("invalid origin");
}

inline Origin origin_from_string(std::string_view s) {
  if (s == "original") return Origin::Original;
  if (s == "translated") return Origin::Translated;
  if (s == "synthetic") return Origin::Synthetic;
  throw ParseError("invalid origin '" + std::string(s) + "'");
}

struct TweetRecord {
  std::string id;
  std::string raw_text;
  std::optional<std::string> clean_text;
  LanguageTag lang;
  std::optional<StanceLabel> label;
  // Label string as found in the source file, kept until harmonization so
  // out-of-scheme classes can still be filtered on.
  std::optional<std::string> raw_label;
  Origin origin = Origin::Original;
  std::optional<std::string> source_id;

  // Model-facing text: the cleaned form once preprocessing has run.
  const std::string& text() const { return clean_text ? *clean_text : raw_text; }

  // The label string this record would serialize with.
  std::optional<std::string> label_string() const {
    if (label) return to_string(*label);
    return raw_label;
  }
};

inline void validate_record(const TweetRecord& r) {
  if (r.id.empty()) throw ParseError("record with empty id");
  if (r.origin == Origin::Translated && !r.source_id)
    throw ParseError("translated record '" + r.id + "' lacks source_id");
  if (r.origin == Origin::Original && r.source_id)
    throw ParseError("original record '" + r.id + "' carries source_id");
}

// Ordered, id-unique collection of records. Immutable once built; pipeline
// stages produce new datasets rather than mutating.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<TweetRecord> records,
          std::string provenance = {})
      : name_(std::move(name)),
        records_(std::move(records)),
        provenance_(std::move(provenance)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      validate_record(records_[i]);
      auto [it, inserted] = index_.emplace(records_[i].id, i);
      if (!inserted)
        throw DuplicateIdError("duplicate record id '" + records_[i].id + "'");
    }
  }

  const std::string& name() const { return name_; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<TweetRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const TweetRecord& operator[](std::size_t i) const { return records_[i]; }

  const TweetRecord* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
  }

  // Every translated record must point at an id in this dataset or in the
  // declared parent (the pre-augmentation originals).
  void check_source_links(const Dataset* parent = nullptr) const {
    for (const auto& r : records_) {
      if (!r.source_id) continue;
      if (find(*r.source_id)) continue;
      if (parent && parent->find(*r.source_id)) continue;
      throw ParseError("record '" + r.id + "' references unknown source_id '" +
                       *r.source_id + "'");
    }
  }

  std::vector<LanguageTag> languages() const {
    std::vector<LanguageTag> langs;
    std::unordered_set<std::string> seen;
    for (const auto& r : records_)
      if (seen.insert(r.lang.str()).second) langs.push_back(r.lang);
    return langs;
  }

  Dataset with_records(std::vector<TweetRecord> records,
                       std::string provenance) const {
    return Dataset(name_, std::move(records), std::move(provenance));
  }

 private:
  std::string name_;
  std::vector<TweetRecord> records_;
  std::string provenance_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mtab
