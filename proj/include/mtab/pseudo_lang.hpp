#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtab/core.hpp"
#include "mtab/labels.hpp"

namespace mtab {

// Synthetic language: a token-level bijection over the base vocabulary plus
// a word-order rule. Serves as a deterministic stand-in for a translation
// model in tests and on the synthetic benchmark.
struct OrderRule {
  enum class Kind { Identity, Reverse, Rotate };
  Kind kind = Kind::Identity;
  int k = 0;  // rotation amount, Rotate only

  void apply(std::vector<std::string>& tokens) const {
    switch (kind) {
      case Kind::Identity:
        return;
      case Kind::Reverse:
        std::reverse(tokens.begin(), tokens.end());
        return;
      case Kind::Rotate: {
        if (tokens.empty()) return;
        const auto n = static_cast<long>(tokens.size());
        long shift = ((k % n) + n) % n;
        std::rotate(tokens.begin(), tokens.begin() + (n - shift),
                    tokens.end());
        return;
      }
    }
  }

  OrderRule inverse() const {
    if (kind == Kind::Rotate) return {Kind::Rotate, -k};
    return *this;
  }
};

struct PseudoLanguageSpec {
  LanguageTag lang;
  std::map<std::string, std::string> token_map;
  OrderRule order;

  PseudoLanguageSpec inverse() const {
    PseudoLanguageSpec inv;
    inv.lang = lang;
    inv.order = order.inverse();
    for (const auto& [from, to] : token_map) {
      auto [it, inserted] = inv.token_map.emplace(to, from);
      if (!inserted)
        throw ConfigError("pseudo-language map for '" + lang.str() +
                          "' is not injective at token '" + to + "'");
    }
    return inv;
  }
};

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' ||
                               text[i] == '\n' || text[i] == '\r'))
      ++i;
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' &&
           text[i] != '\n' && text[i] != '\r')
      ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Maps each token through the bijection (unknown tokens pass through), then
// applies the word-order rule.
inline std::string pseudo_translate(std::string_view text,
                                    const PseudoLanguageSpec& spec) {
  std::vector<std::string> tokens = whitespace_tokens(text);
  for (auto& t : tokens) {
    auto it = spec.token_map.find(t);
    if (it != spec.token_map.end()) t = it->second;
  }
  spec.order.apply(tokens);
  return join_tokens(tokens);
}

inline nlohmann::json order_rule_to_json(const OrderRule& r) {
  nlohmann::json j;
  switch (r.kind) {
    case OrderRule::Kind::Identity: j["rule"] = "identity"; break;
    case OrderRule::Kind::Reverse: j["rule"] = "reverse"; break;
    case OrderRule::Kind::Rotate:
      j["rule"] = "rotate";
      j["k"] = r.k;
      break;
  }
  return j;
}

inline OrderRule order_rule_from_json(const nlohmann::json& j) {
  OrderRule r;
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "identity") {
    r.kind = OrderRule::Kind::Identity;
  } else if (rule == "reverse") {
    r.kind = OrderRule::Kind::Reverse;
  } else if (rule == "rotate") {
    r.kind = OrderRule::Kind::Rotate;
    r.k = j.at("k").get<int>();
  } else {
    throw ParseError("unknown order rule '" + rule + "'");
  }
  return r;
}

inline nlohmann::json pseudo_spec_to_json(const PseudoLanguageSpec& s) {
  nlohmann::json j;
  j["lang"] = s.lang.str();
  j["order"] = order_rule_to_json(s.order);
  j["map"] = s.token_map;
  return j;
}

inline PseudoLanguageSpec pseudo_spec_from_json(const nlohmann::json& j) {
  PseudoLanguageSpec s;
  s.lang = LanguageTag(j.at("lang").get<std::string>());
  s.order = order_rule_from_json(j.at("order"));
  s.token_map = j.at("map").get<std::map<std::string, std::string>>();
  s.inverse();  // validates injectivity
  return s;
}

}  // namespace mtab
