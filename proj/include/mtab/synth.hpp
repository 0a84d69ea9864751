#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mtab/core.hpp"
#include "mtab/labels.hpp"
#include "mtab/pseudo_lang.hpp"
#include "mtab/records.hpp"
#include "mtab/rng.hpp"

namespace mtab {

enum class SynthBalance { Uniform, Table1b };

inline SynthBalance synth_balance_from_string(const std::string& s) {
  if (s == "uniform") return SynthBalance::Uniform;
  if (s == "table1b") return SynthBalance::Table1b;
  throw ConfigError("unknown balance '" + s + "' (expected uniform or table1b)");
}

inline std::string to_string(SynthBalance b) {
  return b == SynthBalance::Uniform ? "uniform" : "table1b";
}

struct SynthConfig {
  int filler_vocab = 200;   // base vocabulary size per language
  int cues_per_class = 6;
  int min_len = 8;          // sentence length range, in tokens
  int max_len = 20;
  int train_size = 2000;
  int unlabeled_size = 1000;  // per target
  int test_size = 500;        // per target
  SynthBalance balance = SynthBalance::Uniform;
  // Target pseudo-languages and their word-order rules.
  std::vector<std::pair<std::string, OrderRule>> targets = {
      {"x1", OrderRule{OrderRule::Kind::Reverse, 0}},
      {"x2", OrderRule{OrderRule::Kind::Rotate, 3}}};
  std::uint64_t seed = 7;

  void validate() const {
    if (filler_vocab <= 0 || cues_per_class <= 0 || train_size <= 0 ||
        unlabeled_size <= 0 || test_size <= 0)
      throw ConfigError("synth sizes must be positive");
    if (min_len < 5 || max_len < min_len)
      throw ConfigError("sentence length range must satisfy 5 <= min <= max");
    if (targets.empty()) throw ConfigError("at least one target language");
    for (const auto& [lang, rule] : targets) {
      if (!LanguageTag(lang).is_pseudo())
        throw ConfigError("synth targets must be pseudo-language tags: " + lang);
      (void)rule;
    }
  }
};

struct SynthBundle {
  Dataset source;  // labeled, lang x0
  std::map<std::string, Dataset> unlabeled;  // per target lang
  std::map<std::string, Dataset> tests;      // labeled, per target lang
  std::map<std::string, PseudoLanguageSpec> specs;
  std::array<std::vector<std::string>, kNumClasses> cue_sets;  // source-side
};

// Strict-majority cue count; any tie (including all-zero) is Neutral.
inline StanceLabel oracle_label(
    const std::string& text,
    const std::array<std::vector<std::string>, kNumClasses>& cue_sets) {
  std::array<long, kNumClasses> counts{};
  for (const auto& tok : whitespace_tokens(text))
    for (int c = 0; c < kNumClasses; ++c)
      for (const auto& cue : cue_sets[c])
        if (tok == cue) ++counts[c];
  int best = label_code(StanceLabel::Neutral);
  long best_count = -1;
  bool tie = false;
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] > best_count) {
      best_count = counts[c];
      best = c;
      tie = false;
    } else if (counts[c] == best_count) {
      tie = true;
    }
  }
  if (tie || best_count == 0) return StanceLabel::Neutral;
  return label_from_code(best);
}

// Cue sets carried over a pseudo-language bijection (cue -> cue, same class).
inline std::array<std::vector<std::string>, kNumClasses> translate_cue_sets(
    const std::array<std::vector<std::string>, kNumClasses>& cue_sets,
    const PseudoLanguageSpec& spec) {
  std::array<std::vector<std::string>, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c)
    for (const auto& cue : cue_sets[c]) {
      auto it = spec.token_map.find(cue);
      out[c].push_back(it == spec.token_map.end() ? cue : it->second);
    }
  return out;
}

namespace detail {

// Pronounceable unique nonsense words: 2-3 consonant-vowel syllables.
class WordMinter {
 public:
  explicit WordMinter(Rng& rng) : rng_(rng) {}

  std::string mint() {
    static const char* consonants = "bdfgklmnprstvz";
    static const char* vowels = "aeiou";
    for (;;) {
      const int syllables = 2 + static_cast<int>(rng_.below(2));
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += consonants[rng_.below(14)];
        w += vowels[rng_.below(5)];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> mint_many(int n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(mint());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

// Shuffled sequence of labels whose class counts deviate from the requested
// totals by construction zero; uniform = near-equal thirds.
inline std::vector<StanceLabel> label_sequence(
    const std::array<int, kNumClasses>& counts, Rng& rng) {
  std::vector<StanceLabel> out;
  for (int c = 0; c < kNumClasses; ++c)
    for (int i = 0; i < counts[c]; ++i) out.push_back(label_from_code(c));
  rng.shuffle(out);
  return out;
}

inline std::array<int, kNumClasses> uniform_counts(int total) {
  std::array<int, kNumClasses> counts{};
  const int base = total / kNumClasses;
  int extra = total - base * kNumClasses;
  for (int c = 0; c < kNumClasses; ++c)
    counts[c] = base + (c < extra ? 1 : 0);
  return counts;
}

// One source-language sentence whose oracle label is `label`, by injecting
// cue tokens over filler text. Neutral comes in three flavours: its own cue
// majority, no cues at all, or a positive/negative tie.
inline std::string make_sentence(
    StanceLabel label, const std::vector<std::string>& fillers,
    const std::array<std::vector<std::string>, kNumClasses>& cue_sets,
    int min_len, int max_len, Rng& rng) {
  const int len = static_cast<int>(rng.range(min_len, max_len));
  std::vector<std::string> cues;
  auto draw_cue = [&](int cls) {
    cues.push_back(cue_sets[cls][rng.below(cue_sets[cls].size())]);
  };
  const int majority = 2 + static_cast<int>(rng.below(2));
  const int code = label_code(label);
  if (label == StanceLabel::Neutral) {
    const double flavour = rng.uniform();
    if (flavour < 0.5) {
      for (int i = 0; i < majority; ++i) draw_cue(code);
      if (rng.uniform() < 0.3)
        draw_cue(static_cast<int>(rng.below(2)));  // one P or N distractor
    } else if (flavour < 0.8) {
      // no cues at all
    } else {
      draw_cue(label_code(StanceLabel::Positive));
      draw_cue(label_code(StanceLabel::Negative));
    }
  } else {
    for (int i = 0; i < majority; ++i) draw_cue(code);
    if (rng.uniform() < 0.3) {
      int other = static_cast<int>(rng.below(2));
      if (other >= code) ++other;  // pick one of the two other classes
      draw_cue(other);
    }
  }
  std::vector<std::string> tokens = cues;
  while (static_cast<int>(tokens.size()) < len)
    tokens.push_back(fillers[rng.below(fillers.size())]);
  rng.shuffle(tokens);
  return join_tokens(tokens);
}

}  // namespace detail

inline SynthBundle generate_synthetic_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  detail::WordMinter minter(rng);

  SynthBundle bundle;
  const std::vector<std::string> fillers = minter.mint_many(cfg.filler_vocab);
  for (int c = 0; c < kNumClasses; ++c)
    bundle.cue_sets[c] = minter.mint_many(cfg.cues_per_class);

  // Defensive re-check of the disjointness invariant the minter guarantees.
  {
    std::set<std::string> seen(fillers.begin(), fillers.end());
    for (const auto& cues : bundle.cue_sets)
      for (const auto& cue : cues)
        if (!seen.insert(cue).second)
          throw ConfigError("cue/filler vocabulary collision: " + cue);
  }

  for (const auto& [lang, rule] : cfg.targets) {
    PseudoLanguageSpec spec;
    spec.lang = LanguageTag(lang);
    spec.order = rule;
    for (const auto& w : fillers) spec.token_map[w] = minter.mint();
    for (const auto& cues : bundle.cue_sets)
      for (const auto& cue : cues) spec.token_map[cue] = minter.mint();
    bundle.specs.emplace(lang, std::move(spec));
  }

  auto make_labeled = [&](const std::string& lang, const std::string& id_stem,
                          const std::array<int, kNumClasses>& counts,
                          bool keep_labels) {
    std::vector<TweetRecord> records;
    const auto labels = detail::label_sequence(counts, rng);
    const PseudoLanguageSpec* spec = nullptr;
    if (lang != "x0") spec = &bundle.specs.at(lang);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::string text = detail::make_sentence(
          labels[i], fillers, bundle.cue_sets, cfg.min_len, cfg.max_len, rng);
      if (oracle_label(text, bundle.cue_sets) != labels[i])
        throw ConfigError("oracle/label mismatch during generation");
      if (spec != nullptr) text = pseudo_translate(text, *spec);
      TweetRecord r;
      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "%s-%05zu", id_stem.c_str(), i);
      r.id = idbuf;
      r.raw_text = text;
      r.clean_text = text;  // synthetic text is born clean
      r.lang = LanguageTag(lang);
      if (keep_labels) {
        r.label = labels[i];
        r.raw_label = to_string(labels[i]);
      }
      r.origin = Origin::Synthetic;
      records.push_back(std::move(r));
    }
    return records;
  };

  bundle.source = Dataset("synth-train",
                          make_labeled("x0", "synth-x0-train",
                                       detail::uniform_counts(cfg.train_size),
                                       true),
                          "synthetic");

  // Table I(b)-style per-target class skews (favor/against/none).
  static const std::array<std::array<int, kNumClasses>, 3> kTable1b = {
      {{419, 135, 279}, {547, 108, 169}, {314, 151, 458}}};

  int target_index = 0;
  for (const auto& [lang, rule] : cfg.targets) {
    (void)rule;
    std::array<int, kNumClasses> test_counts{};
    if (cfg.balance == SynthBalance::Table1b)
      test_counts = kTable1b[target_index % kTable1b.size()];
    else
      test_counts = detail::uniform_counts(cfg.test_size);
    bundle.unlabeled.emplace(
        lang, Dataset("synth-" + lang + "-pool",
                      make_labeled(lang, "synth-" + lang + "-pool",
                                   detail::uniform_counts(cfg.unlabeled_size),
                                   false),
                      "synthetic"));
    bundle.tests.emplace(
        lang, Dataset("synth-" + lang + "-test",
                      make_labeled(lang, "synth-" + lang + "-test",
                                   test_counts, true),
                      "synthetic"));
    ++target_index;
  }
  return bundle;
}

inline nlohmann::json synth_spec_to_json(const SynthBundle& bundle) {
  nlohmann::json j;
  j["schema"] = "mtab.synthspec.v1";
  for (int c = 0; c < kNumClasses; ++c)
    j["cue_sets"][to_string(label_from_code(c))] = bundle.cue_sets[c];
  for (const auto& [lang, spec] : bundle.specs)
    j["languages"][lang] = pseudo_spec_to_json(spec);
  return j;
}

}  // namespace mtab
