#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtab/clean.hpp"
#include "mtab/core.hpp"
#include "mtab/labels.hpp"
#include "mtab/records.hpp"
#include "mtab/rng.hpp"

namespace mtab {

// Applies the label map to every labeled record. Records whose raw label is
// unmapped are removed under the drop policy (counted), or raise
// UnknownLabelError under the error policy.
struct HarmonizeOutcome {
  Dataset dataset;
  std::size_t dropped = 0;
};

inline HarmonizeOutcome harmonize_dataset(const Dataset& d,
                                          const LabelMap& map) {
  std::vector<TweetRecord> out;
  out.reserve(d.size());
  std::size_t dropped = 0;
  for (const auto& r : d.records()) {
    if (!r.raw_label) {
      out.push_back(r);
      continue;
    }
    HarmonizeResult h = harmonize_label(*r.raw_label, map);
    if (std::holds_alternative<Dropped>(h)) {
      ++dropped;
      continue;
    }
    TweetRecord copy = r;
    copy.label = std::get<StanceLabel>(h);
    copy.raw_label = to_string(*copy.label);
    out.push_back(std::move(copy));
  }
  return {d.with_records(std::move(out), "harmonized"), dropped};
}

// Runs clean_text over every record. Records left empty by cleaning carry no
// trainable content and are removed (count reported to the caller).
struct CleanOutcome {
  Dataset dataset;
  std::size_t removed_empty = 0;
};

inline CleanOutcome clean_dataset(const Dataset& d) {
  std::vector<TweetRecord> out;
  out.reserve(d.size());
  std::size_t removed = 0;
  for (const auto& r : d.records()) {
    TweetRecord copy = r;
    copy.clean_text = clean_text(copy.raw_text);
    if (copy.clean_text->empty()) {
      ++removed;
      continue;
    }
    out.push_back(std::move(copy));
  }
  return {d.with_records(std::move(out), "cleaned"), removed};
}

// Keeps records whose label string is in `allowed` (case-insensitive).
// Unlabeled records are retained; only an explicit out-of-scheme label
// excludes a record.
inline Dataset filter_classes(const Dataset& d,
                              const std::vector<std::string>& allowed) {
  std::set<std::string> allow;
  for (const auto& a : allowed) allow.insert(ascii_lower(a));
  std::vector<TweetRecord> out;
  for (const auto& r : d.records()) {
    auto s = r.label_string();
    if (!s || allow.count(ascii_lower(*s))) out.push_back(r);
  }
  return d.with_records(std::move(out), "class-filtered");
}

inline Dataset filter_classes(const Dataset& d,
                              const std::set<StanceLabel>& allowed) {
  std::vector<std::string> names;
  for (auto l : allowed) names.push_back(to_string(l));
  return filter_classes(d, names);
}

// Per-language label counts in the style of the dataset-statistics table.
struct StatsTable {
  struct Row {
    std::string lang;
    std::array<std::size_t, kNumClasses> by_label{};
    std::size_t unlabeled = 0;
    std::size_t total = 0;
  };
  std::vector<Row> rows;  // one per language, sorted by tag
  Row totals;             // lang = "all"
};

inline StatsTable dataset_stats(const Dataset& d) {
  std::map<std::string, StatsTable::Row> rows;
  StatsTable table;
  table.totals.lang = "all";
  for (const auto& r : d.records()) {
    auto& row = rows[r.lang.str()];
    row.lang = r.lang.str();
    if (r.label) {
      row.by_label[label_code(*r.label)]++;
      table.totals.by_label[label_code(*r.label)]++;
    } else {
      row.unlabeled++;
      table.totals.unlabeled++;
    }
    row.total++;
    table.totals.total++;
  }
  for (auto& [_, row] : rows) table.rows.push_back(row);
  return table;
}

inline std::string stats_to_csv(const StatsTable& t) {
  std::ostringstream out;
  out << "lang,positive,negative,neutral,unlabeled,total\n";
  auto emit = [&](const StatsTable::Row& r) {
    out << r.lang;
    for (auto c : r.by_label) out << ',' << c;
    out << ',' << r.unlabeled << ',' << r.total << '\n';
  };
  for (const auto& r : t.rows) emit(r);
  emit(t.totals);
  return out.str();
}

inline nlohmann::json stats_to_json(const StatsTable& t) {
  nlohmann::json j;
  j["version"] = 1;
  auto row_json = [](const StatsTable::Row& r) {
    nlohmann::json o;
    o["lang"] = r.lang;
    o["positive"] = r.by_label[0];
    o["negative"] = r.by_label[1];
    o["neutral"] = r.by_label[2];
    o["unlabeled"] = r.unlabeled;
    o["total"] = r.total;
    return o;
  };
  j["languages"] = nlohmann::json::array();
  for (const auto& r : t.rows) j["languages"].push_back(row_json(r));
  j["totals"] = row_json(t.totals);
  return j;
}

// Stratified train/dev split, deterministic per seed. Selection shuffles
// within each class; both outputs preserve the input record order.
struct Split {
  Dataset train;
  Dataset dev;
};

inline Split split(const Dataset& d, double dev_fraction,
                   std::uint64_t seed) {
  if (dev_fraction < 0.0 || dev_fraction >= 1.0)
    throw ConfigError("dev_fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d[i].label)
      throw StratificationError("cannot stratify: record '" + d[i].id +
                                "' is unlabeled");
    by_class[label_code(*d[i].label)].push_back(i);
  }
  std::vector<bool> in_dev(d.size(), false);
  Rng rng(seed);
  for (auto& [code, idx] : by_class) {
    if (idx.size() < 2 && dev_fraction > 0.0)
      throw StratificationError("class " +
                                to_string(label_from_code(code)) +
                                " has fewer than 2 records");
    auto k = static_cast<std::size_t>(
        std::llround(static_cast<double>(idx.size()) * dev_fraction));
    k = std::min(k, idx.size() - 1);
    rng.shuffle(idx);
    for (std::size_t j = 0; j < k; ++j) in_dev[idx[j]] = true;
  }
  std::vector<TweetRecord> train, dev;
  for (std::size_t i = 0; i < d.size(); ++i)
    (in_dev[i] ? dev : train).push_back(d[i]);
  return {d.with_records(std::move(train), "train split"),
          d.with_records(std::move(dev), "dev split")};
}

}  // namespace mtab
