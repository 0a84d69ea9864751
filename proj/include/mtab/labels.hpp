#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mtab/core.hpp"

namespace mtab {

// Three-way stance. Codes index classifier logits and confusion-matrix axes.
enum class StanceLabel : int { Positive = 0, Negative = 1, Neutral = 2 };

inline constexpr int kNumClasses = 3;

inline int label_code(StanceLabel l) { return static_cast<int>(l); }

inline StanceLabel label_from_code(int code) {
  if (code < 0 || code >= kNumClasses)
    throw ConfigError("invalid stance label code " + std::to_string(code));
  return static_cast<StanceLabel>(code);
}

inline std::string to_string(StanceLabel l) {
  switch (l) {
    case StanceLabel::Positive: return "positive";
    case StanceLabel::Negative: return "negative";
    case StanceLabel::Neutral: return "neutral";
  }
  throw ConfigError("invalid stance label");
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline std::optional<StanceLabel> label_from_string(std::string_view s) {
  const std::string l = ascii_lower(s);
  if (l == "positive") return StanceLabel::Positive;
  if (l == "negative") return StanceLabel::Negative;
  if (l == "neutral") return StanceLabel::Neutral;
  return std::nullopt;
}

// Language code: ISO 639-1 two-letter, or a pseudo-language "x<digit>"
// reserved for the synthetic benchmark. "x" plus a digit never collides with
// an ISO code because ISO codes are two letters.
class LanguageTag {
 public:
  LanguageTag() = default;
  explicit LanguageTag(std::string code) : code_(std::move(code)) {
    if (!valid(code_))
      throw ConfigError("invalid language tag '" + code_ + "'");
  }

  static bool valid(std::string_view code) {
    if (code.size() != 2) return false;
    if (code[0] == 'x' && code[1] >= '0' && code[1] <= '9') return true;
    return std::islower(static_cast<unsigned char>(code[0])) &&
           std::islower(static_cast<unsigned char>(code[1]));
  }

  bool is_pseudo() const { return code_[0] == 'x' && std::isdigit(static_cast<unsigned char>(code_[1])); }
  const std::string& str() const { return code_; }

  friend bool operator==(const LanguageTag& a, const LanguageTag& b) = default;
  friend auto operator<=>(const LanguageTag& a, const LanguageTag& b) = default;

 private:
  std::string code_ = "en";
};

// Raw-label harmonization table. Keys are matched case-insensitively.
class LabelMap {
 public:
  enum class UnmappedPolicy { Error, Drop };

  LabelMap() = default;
  LabelMap(std::map<std::string, StanceLabel> mapping, UnmappedPolicy policy)
      : policy_(policy) {
    for (auto& [raw, label] : mapping) add(raw, label);
  }

  void add(std::string_view raw, StanceLabel label) {
    std::string key = ascii_lower(raw);
    auto it = mapping_.find(key);
    if (it != mapping_.end() && it->second != label)
      throw ConfigError("label map key '" + key + "' maps to two labels");
    mapping_[key] = label;
  }

  void set_policy(UnmappedPolicy p) { policy_ = p; }
  UnmappedPolicy policy() const { return policy_; }

  std::optional<StanceLabel> lookup(std::string_view raw) const {
    auto it = mapping_.find(ascii_lower(raw));
    if (it == mapping_.end()) return std::nullopt;
    return it->second;
  }

  // Conventions of the aggregated stance corpora; overridable via config.
  static LabelMap defaults() {
    LabelMap m;
    for (const char* k : {"favor", "positive", "support", "pro"})
      m.add(k, StanceLabel::Positive);
    for (const char* k : {"against", "negative", "anti"})
      m.add(k, StanceLabel::Negative);
    for (const char* k : {"none", "neutral", "neither"})
      m.add(k, StanceLabel::Neutral);
    return m;
  }

 private:
  std::map<std::string, StanceLabel> mapping_;
  UnmappedPolicy policy_ = UnmappedPolicy::Error;
};

// Outcome of harmonizing one raw label under a drop-capable map.
struct Dropped {};
using HarmonizeResult = std::variant<StanceLabel, Dropped>;

inline HarmonizeResult harmonize_label(std::string_view raw,
                                       const LabelMap& map) {
  if (auto label = map.lookup(raw)) return *label;
  if (map.policy() == LabelMap::UnmappedPolicy::Drop) return Dropped{};
  throw UnknownLabelError("unknown stance label '" + std::string(raw) + "'");
}

}  // namespace mtab
