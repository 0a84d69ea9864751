#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtab/fs.hpp"
#include "mtab/metrics.hpp"

namespace mtab {

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline const char* class_short_name(int code) {
  switch (code) {
    case 0: return "Pos";
    case 1: return "Neg";
    default: return "Neu";
  }
}

}  // namespace detail

// Results table shaped like the experiment matrix: one row per variant,
// one column per language plus the unweighted average.
inline std::string results_csv(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> variant_order;
  std::set<std::string> seen_variants;
  std::set<std::string> langs;
  std::map<std::string, std::map<std::string, double>> table;
  for (const auto& r : reports) {
    if (seen_variants.insert(r.variant_id).second)
      variant_order.push_back(r.variant_id);
    langs.insert(r.lang);
    table[r.variant_id][r.lang] = r.macro;
  }
  std::string out = "variant";
  for (const auto& l : langs) out += "," + l;
  out += ",average\n";
  for (const auto& v : variant_order) {
    out += v;
    double sum = 0.0;
    int n = 0;
    for (const auto& l : langs) {
      auto it = table[v].find(l);
      if (it == table[v].end()) {
        out += ",";
        continue;
      }
      out += "," + detail::fmt("%.4f", it->second);
      sum += it->second;
      ++n;
    }
    out += "," + (n > 0 ? detail::fmt("%.4f", sum / n) : std::string());
    out += "\n";
  }
  return out;
}

// Standalone bar chart of the three class-wise F1 scores.
inline std::string f1_bar_chart_svg(const MetricsReport& r) {
  const int width = 360, height = 260;
  const int plot_x = 50, plot_y = 40, plot_w = 280, plot_h = 170;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       std::to_string(width) + "\" height=\"" + std::to_string(height) +
       "\" viewBox=\"0 0 " + std::to_string(width) + " " +
       std::to_string(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(width / 2) +
       "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">class-wise F1 — " +
       r.variant_id + " / " + r.lang + "</text>\n";
  // y axis with 0/0.5/1 gridlines
  for (double tick : {0.0, 0.5, 1.0}) {
    const int y = plot_y + plot_h - static_cast<int>(tick * plot_h);
    s += "<line x1=\"" + std::to_string(plot_x) + "\" y1=\"" +
         std::to_string(y) + "\" x2=\"" + std::to_string(plot_x + plot_w) +
         "\" y2=\"" + std::to_string(y) +
         "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + std::to_string(plot_x - 8) + "\" y=\"" +
         std::to_string(y + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         detail::fmt("%.1f", tick) + "</text>\n";
  }
  static const char* fills[3] = {"#4f81bd", "#c0504d", "#9bbb59"};
  const int bar_w = 56;
  for (int c = 0; c < kNumClasses; ++c) {
    const double v = r.scores.f1[c];
    const int bar_h = static_cast<int>(v * plot_h);
    const int x = plot_x + 30 + c * 90;
    const int y = plot_y + plot_h - bar_h;
    s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
         "\" width=\"" + std::to_string(bar_w) + "\" height=\"" +
         std::to_string(bar_h) + "\" fill=\"" + fills[c] + "\"/>\n";
    s += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" +
         std::to_string(y - 5) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\">" +
         detail::fmt("%.3f", v) + "</text>\n";
    s += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" +
         std::to_string(plot_y + plot_h + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" +
         to_string(label_from_code(c)) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

// Row-normalized incorrect-prediction heatmap (diagonal blank).
inline std::string incorrect_heatmap_svg(const MetricsReport& r) {
  const int cell = 70, pad_left = 70, pad_top = 60;
  const int width = pad_left + 3 * cell + 20;
  const int height = pad_top + 3 * cell + 30;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       std::to_string(width) + "\" height=\"" + std::to_string(height) +
       "\" viewBox=\"0 0 " + std::to_string(width) + " " +
       std::to_string(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(width / 2) +
       "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">incorrect predictions — " +
       r.variant_id + " / " + r.lang + "</text>\n";
  for (int g = 0; g < kNumClasses; ++g) {
    s += "<text x=\"" + std::to_string(pad_left - 10) + "\" y=\"" +
         std::to_string(pad_top + g * cell + cell / 2 + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         detail::class_short_name(g) + "</text>\n";
    s += "<text x=\"" + std::to_string(pad_left + g * cell + cell / 2) +
         "\" y=\"" + std::to_string(pad_top - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" +
         detail::class_short_name(g) + "</text>\n";
    for (int p = 0; p < kNumClasses; ++p) {
      const int x = pad_left + p * cell, y = pad_top + g * cell;
      if (g == p) {
        s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell) + "\" height=\"" +
             std::to_string(cell) +
             "\" fill=\"#eeeeee\" stroke=\"#999999\"/>\n";
        continue;
      }
      const double v = r.incorrect[g][p];
      const int shade = static_cast<int>(255.0 * (1.0 - v));
      char color[8];
      std::snprintf(color, sizeof(color), "#ff%02x%02x", shade, shade);
      s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
           "\" width=\"" + std::to_string(cell) + "\" height=\"" +
           std::to_string(cell) + "\" fill=\"" + color +
           "\" stroke=\"#999999\"/>\n";
      s += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" +
           std::to_string(y + cell / 2 + 4) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           detail::fmt("%.2f", v) + "</text>\n";
    }
  }
  s += "<text x=\"" + std::to_string(pad_left + 3 * cell / 2) + "\" y=\"" +
       std::to_string(height - 8) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"11\">predicted (rows = gold)</text>\n";
  s += "</svg>\n";
  return s;
}

// Writes metrics.json, results.csv, and per-(variant, language) charts.
// Returns the written paths in a deterministic order.
inline std::vector<std::filesystem::path> render_report(
    const std::vector<MetricsReport>& reports,
    const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(metrics_to_json(r));
  nlohmann::json top;
  top["schema"] = "mtab.report.v1";
  top["reports"] = all;
  const auto metrics_path = out_dir / "metrics.json";
  write_text_file(metrics_path, top.dump(2) + "\n");
  written.push_back(metrics_path);
  const auto csv_path = out_dir / "results.csv";
  write_text_file(csv_path, results_csv(reports));
  written.push_back(csv_path);
  for (const auto& r : reports) {
    const auto f1_path =
        out_dir / ("f1_" + r.variant_id + "_" + r.lang + ".svg");
    write_text_file(f1_path, f1_bar_chart_svg(r));
    written.push_back(f1_path);
    const auto err_path =
        out_dir / ("errors_" + r.variant_id + "_" + r.lang + ".svg");
    write_text_file(err_path, incorrect_heatmap_svg(r));
    written.push_back(err_path);
  }
  return written;
}

}  // namespace mtab
