#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtab {

namespace detail {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Codepoint blocks treated as emoji, plus variation selectors and the
// zero-width joiner that glue emoji sequences together.
inline bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // pictographs, emoticons, ...
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2B00 && cp <= 0x2B55) ||    // stars, heavy arrows
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         (cp >= 0x1F1E6 && cp <= 0x1F1FF) ||  // regional indicators
         (cp == 0x231A || cp == 0x231B) ||    // watch, hourglass
         (cp >= 0x23E9 && cp <= 0x23FA) ||    // av-control pictographs
         cp == 0x200D;
}

// Permissive UTF-8 scan: returns the codepoint at s[i] and advances i.
// Invalid bytes are passed through as-is (reported with valid=false) so
// cleaning never throws on malformed input.
struct Scanned {
  char32_t cp;
  std::size_t len;
  bool valid;
};

inline Scanned scan_utf8(std::string_view s, std::size_t i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(s[k]);
  };
  const unsigned char b0 = byte(i);
  if (b0 < 0x80) return {b0, 1, true};
  int extra = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    return {b0, 1, false};
  }
  if (i + static_cast<std::size_t>(extra) >= s.size()) return {b0, 1, false};
  for (int k = 1; k <= extra; ++k) {
    const unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) return {b0, 1, false};
    cp = (cp << 6) | (bk & 0x3F);
  }
  return {cp, static_cast<std::size_t>(extra) + 1, true};
}

inline bool has_prefix_ci(std::string_view token, std::string_view prefix) {
  if (token.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = token[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (a != prefix[i]) return false;
  }
  return true;
}

inline bool is_url_token(std::string_view t) {
  return has_prefix_ci(t, "http://") || has_prefix_ci(t, "https://") ||
         has_prefix_ci(t, "www.");
}

inline bool is_smiley_token(std::string_view t) {
  static constexpr std::array<std::string_view, 7> kSmileys = {
      ":)", ":(", ":D", ";)", ":-)", ":-(", ":P"};
  for (auto s : kSmileys)
    if (t == s) return true;
  return false;
}

// Standalone number: at least one digit, all characters digits, signs or
// separators. Digits embedded in words ("2nd", "COVID19") are not numbers.
inline bool is_number_token(std::string_view t) {
  bool has_digit = false;
  for (char c : t) {
    if (c >= '0' && c <= '9') {
      has_digit = true;
    } else if (c != '+' && c != '-' && c != '.' && c != ',') {
      return false;
    }
  }
  return has_digit;
}

// Strips '#' and emoji from a token, byte-exact otherwise.
inline std::string strip_hash_and_emoji(std::string_view t) {
  std::string out;
  out.reserve(t.size());
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '#') {
      ++i;
      continue;
    }
    const Scanned sc = scan_utf8(t, i);
    if (!(sc.valid && is_emoji_codepoint(sc.cp))) out.append(t, i, sc.len);
    i += sc.len;
  }
  return out;
}

// Removes leading "RT <mention>[:]" prefixes, repeatedly for nested retweets.
inline std::string_view strip_rt_prefix(std::string_view s) {
  for (;;) {
    std::size_t i = 0;
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    std::size_t j = i;
    if (j + 1 >= s.size() || s[j] != 'R' || s[j + 1] != 'T') return s;
    j += 2;
    if (j >= s.size() || !is_ascii_space(s[j])) return s;
    while (j < s.size() && is_ascii_space(s[j])) ++j;
    if (j >= s.size() || s[j] != '@') return s;
    std::size_t name = 0;
    ++j;
    while (j < s.size() && !is_ascii_space(s[j]) && s[j] != ':') {
      ++j;
      ++name;
    }
    if (name == 0) return s;
    if (j < s.size() && s[j] == ':') ++j;
    s.remove_prefix(j);
  }
}

}  // namespace detail

// Tweet text normalization: removes URLs, emoji, @-mentions, smileys and
// standalone numbers, strips a leading retweet prefix, keeps hashtag keywords
// without the '#', collapses whitespace and trims. Idempotent.
inline std::string clean_text(std::string_view raw) {
  using namespace detail;
  std::string_view body = strip_rt_prefix(raw);

  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && is_ascii_space(body[i])) ++i;
    std::size_t start = i;
    while (i < body.size() && !is_ascii_space(body[i])) ++i;
    if (i == start) break;
    std::string token = strip_hash_and_emoji(body.substr(start, i - start));
    if (token.empty()) continue;
    if (is_url_token(token)) continue;
    if (token[0] == '@') continue;
    if (is_smiley_token(token)) continue;
    if (is_number_token(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

}  // namespace mtab
