#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtab/core.hpp"
#include "mtab/labels.hpp"

namespace mtab {

// Rows = gold label code, columns = predicted label code.
struct ConfusionMatrix {
  std::array<std::array<long, kNumClasses>, kNumClasses> cells{};

  long& at(int gold, int pred) { return cells[gold][pred]; }
  long at(int gold, int pred) const { return cells[gold][pred]; }

  long total() const {
    long t = 0;
    for (const auto& row : cells)
      for (long c : row) t += c;
    return t;
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<StanceLabel>& gold,
                                        const std::vector<StanceLabel>& pred) {
  if (gold.size() != pred.size())
    throw ShapeError("gold/pred length mismatch: " +
                     std::to_string(gold.size()) + " vs " +
                     std::to_string(pred.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i)
    ++cm.at(label_code(gold[i]), label_code(pred[i]));
  return cm;
}

struct ClassScores {
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
};

// 0/0 is defined as 0 throughout.
inline ClassScores per_class_scores(const ConfusionMatrix& cm) {
  ClassScores s;
  for (int c = 0; c < kNumClasses; ++c) {
    long tp = cm.at(c, c), fp = 0, fn = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const double p =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r =
        tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.precision[c] = p;
    s.recall[c] = r;
    s.f1[c] = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  return s;
}

inline std::array<double, kNumClasses> per_class_f1(const ConfusionMatrix& cm) {
  return per_class_scores(cm).f1;
}

inline double macro_f1(const ConfusionMatrix& cm) {
  const auto f1 = per_class_f1(cm);
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(kNumClasses);
}

// Micro F1 over 3 exhaustive classes equals plain accuracy.
inline double micro_f1(const ConfusionMatrix& cm) {
  const long total = cm.total();
  if (total == 0) return 0.0;
  long correct = 0;
  for (int c = 0; c < kNumClasses; ++c) correct += cm.at(c, c);
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Off-diagonal cells row-normalized; rows with no errors stay all-zero.
inline std::array<std::array<double, kNumClasses>, kNumClasses>
incorrect_distribution(const ConfusionMatrix& cm) {
  std::array<std::array<double, kNumClasses>, kNumClasses> dist{};
  for (int g = 0; g < kNumClasses; ++g) {
    long errors = 0;
    for (int p = 0; p < kNumClasses; ++p)
      if (p != g) errors += cm.at(g, p);
    if (errors == 0) continue;
    for (int p = 0; p < kNumClasses; ++p)
      if (p != g)
        dist[g][p] =
            static_cast<double>(cm.at(g, p)) / static_cast<double>(errors);
  }
  return dist;
}

struct MetricsReport {
  std::string variant_id;
  std::string lang;
  ConfusionMatrix cm;
  ClassScores scores;
  double macro = 0.0;
  double micro = 0.0;
  std::array<std::array<double, kNumClasses>, kNumClasses> incorrect{};
  std::array<long, kNumClasses> gold_counts{};

  static MetricsReport from_pairs(const std::vector<StanceLabel>& gold,
                                  const std::vector<StanceLabel>& pred,
                                  std::string variant_id, std::string lang) {
    MetricsReport r;
    r.variant_id = std::move(variant_id);
    r.lang = std::move(lang);
    r.cm = confusion_matrix(gold, pred);
    r.scores = per_class_scores(r.cm);
    r.macro = macro_f1(r.cm);
    r.micro = micro_f1(r.cm);
    r.incorrect = incorrect_distribution(r.cm);
    for (const auto& g : gold) ++r.gold_counts[label_code(g)];
    return r;
  }
};

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["schema"] = "mtab.metrics.v1";
  j["variant"] = r.variant_id;
  j["lang"] = r.lang;
  j["macro_f1"] = r.macro;
  j["micro_f1"] = r.micro;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string name = to_string(label_from_code(c));
    j["per_class"][name] = {{"precision", r.scores.precision[c]},
                            {"recall", r.scores.recall[c]},
                            {"f1", r.scores.f1[c]},
                            {"gold_count", r.gold_counts[c]}};
  }
  auto& cm = j["confusion_matrix"];
  cm = nlohmann::json::array();
  for (int g = 0; g < kNumClasses; ++g) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(r.cm.at(g, p));
    cm.push_back(row);
  }
  auto& inc = j["incorrect_distribution"];
  inc = nlohmann::json::array();
  for (int g = 0; g < kNumClasses; ++g) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(r.incorrect[g][p]);
    inc.push_back(row);
  }
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema") != "mtab.metrics.v1")
    throw ParseError("unsupported metrics schema");
  MetricsReport r;
  r.variant_id = j.at("variant").get<std::string>();
  r.lang = j.at("lang").get<std::string>();
  r.macro = j.at("macro_f1").get<double>();
  r.micro = j.at("micro_f1").get<double>();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& pc = j.at("per_class").at(to_string(label_from_code(c)));
    r.scores.precision[c] = pc.at("precision").get<double>();
    r.scores.recall[c] = pc.at("recall").get<double>();
    r.scores.f1[c] = pc.at("f1").get<double>();
    r.gold_counts[c] = pc.at("gold_count").get<long>();
    for (int p = 0; p < kNumClasses; ++p) {
      r.cm.at(c, p) = j.at("confusion_matrix").at(c).at(p).get<long>();
      r.incorrect[c][p] =
          j.at("incorrect_distribution").at(c).at(p).get<double>();
    }
  }
  return r;
}

}  // namespace mtab
