// Copyright 2026 storymine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "storymine/text.hpp"

namespace storymine {

// Human-readable class names per labeling dimension, index-aligned with the
// integer labels in the corpus. Class 0 is the "unspecified" category in
// every dimension.
inline const std::vector<std::vector<std::string>>& dim_class_labels() {
  static const std::vector<std::vector<std::string>> labels = {
      {"unspecified", "young", "adult"},
      {"unspecified", "single", "multiple"},
      {"unspecified", "relative", "teacher", "classmate", "friend", "neighbor",
       "conductor_driver", "work_related", "police_guard", "other"},
      {"unspecified", "street", "transportation", "station_stop",
       "private_places", "shopping_places", "neighborhood", "park", "hotel",
       "bush_woods", "parking_lot", "school", "restaurant", "other"},
      {"unspecified", "day", "evening_night"},
  };
  return labels;
}

// One categorical axis an analysis can count over: a dimension or a binary
// harassment form.
struct LabelAxis {
  std::string name;
  bool is_form = false;
  int index = 0;
  int classes = 0;

  std::string class_label(int cls) const {
    if (cls < 0 || cls >= classes)
      throw DataError(name + ": class " + std::to_string(cls) +
                      " outside 0.." + std::to_string(classes - 1));
    if (is_form) return cls == 0 ? "no" : "yes";
    return dim_class_labels()[static_cast<size_t>(index)]
                             [static_cast<size_t>(cls)];
  }

  // The story's label on this axis; -1 when not annotated.
  int value(const Story& story) const {
    return is_form ? story.forms[static_cast<size_t>(index)]
                   : story.dims[static_cast<size_t>(index)];
  }

  // Class 0 means "unspecified" only for the five dimensions; a form's 0 is
  // a real answer ("did not happen"), so the exclusion flag ignores forms.
  bool class0_is_unspecified() const { return !is_form; }
};

inline LabelAxis parse_axis(const std::string& name) {
  for (int d = 0; d < kNumDims; ++d)
    if (name == kDimNames[d])
      return LabelAxis{name, false, d, kDimClassCounts[d]};
  for (int f = 0; f < kNumForms; ++f)
    if (name == kFormNames[f]) return LabelAxis{name, true, f, 2};
  throw ConfigError("unknown analysis axis '" + name +
                    "' (dimensions: age, single_multiple, harasser_type, "
                    "location_type, time_of_day; forms: commenting, ogling, "
                    "groping)");
}

// Counts per class of one axis (a Fig.-5-style distribution).
struct Distribution {
  std::string axis;
  std::vector<std::string> labels;
  std::vector<long long> counts;
  long long total = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", "distribution"},
                          {"axis", axis},
                          {"labels", labels},
                          {"counts", counts},
                          {"total", total}};
  }
};

inline Distribution distribution(const std::vector<const Story*>& stories,
                                 const LabelAxis& axis,
                                 bool exclude_unspecified = false) {
  const int drop0 = exclude_unspecified && axis.class0_is_unspecified() ? 1 : 0;
  Distribution d;
  d.axis = axis.name;
  d.counts.assign(static_cast<size_t>(axis.classes - drop0), 0);
  for (int c = drop0; c < axis.classes; ++c)
    d.labels.push_back(axis.class_label(c));
  for (const Story* s : stories) {
    const int v = axis.value(*s);
    if (v < drop0) continue;  // unlabeled, or excluded class 0
    ++d.counts[static_cast<size_t>(v - drop0)];
    ++d.total;
  }
  return d;
}

// Two-way count table between two axes.
struct ContingencyTable {
  std::string row_axis, col_axis;
  std::vector<std::string> row_labels, col_labels;
  std::vector<std::vector<long long>> counts;  // rows x cols

  int rows() const { return static_cast<int>(counts.size()); }
  int cols() const {
    return counts.empty() ? 0 : static_cast<int>(counts[0].size());
  }

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long c : row) t += c;
    return t;
  }

  std::vector<long long> row_sums() const {
    std::vector<long long> s(counts.size(), 0);
    for (size_t r = 0; r < counts.size(); ++r)
      for (long long c : counts[r]) s[r] += c;
    return s;
  }

  std::vector<long long> col_sums() const {
    std::vector<long long> s(static_cast<size_t>(cols()), 0);
    for (const auto& row : counts)
      for (size_t c = 0; c < row.size(); ++c) s[c] += row[c];
    return s;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"row_axis", row_axis},
                          {"col_axis", col_axis},
                          {"row_labels", row_labels},
                          {"col_labels", col_labels},
                          {"counts", counts}};
  }
};

// Cross-tabulates stories labeled on both axes. Stories missing either
// label are skipped; the exclusion flag drops the "unspecified" class 0 of
// dimension axes (forms keep both classes, their 0 is an answer).
inline ContingencyTable crosstab(const std::vector<const Story*>& stories,
                                 const LabelAxis& row, const LabelAxis& col,
                                 bool exclude_unspecified = false) {
  if (row.name == col.name)
    throw ConfigError("crosstab: axis '" + row.name + "' crossed with itself");
  const int row0 = exclude_unspecified && row.class0_is_unspecified() ? 1 : 0;
  const int col0 = exclude_unspecified && col.class0_is_unspecified() ? 1 : 0;
  ContingencyTable t;
  t.row_axis = row.name;
  t.col_axis = col.name;
  for (int r = row0; r < row.classes; ++r)
    t.row_labels.push_back(row.class_label(r));
  for (int c = col0; c < col.classes; ++c)
    t.col_labels.push_back(col.class_label(c));
  t.counts.assign(t.row_labels.size(),
                  std::vector<long long>(t.col_labels.size(), 0));
  for (const Story* s : stories) {
    const int rv = row.value(*s);
    const int cv = col.value(*s);
    if (rv < row0 || cv < col0) continue;
    ++t.counts[static_cast<size_t>(rv - row0)][static_cast<size_t>(cv - col0)];
  }
  return t;
}

// Regularized upper incomplete gamma Q(s, x): series expansion below the
// x = s+1 crossover, modified Lentz continued fraction above it.
inline double gamma_q(double s, double x) {
  if (!(s > 0.0))
    throw NumericError("gamma_q: s must be positive, got " +
                       std::to_string(s));
  if (!(x >= 0.0))
    throw NumericError("gamma_q: x must be nonnegative, got " +
                       std::to_string(x));
  if (x == 0.0) return 1.0;
  const double log_front = -x + s * std::log(x) - std::lgamma(s);
  if (x < s + 1.0) {
    // P(s,x) series: sum_{n>=0} x^n / (s(s+1)...(s+n)).
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (s + static_cast<double>(n));
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17)
        return 1.0 - sum * std::exp(log_front);
    }
    throw NumericError("gamma_q: series failed to converge");
  }
  // Q(s,x) continued fraction evaluated by the modified Lentz method.
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-17) return h * std::exp(log_front);
  }
  throw NumericError("gamma_q: continued fraction failed to converge");
}

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  bool significant = false;  // at alpha = 0.05
  std::vector<std::vector<double>> expected;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    return nlohmann::json{{"statistic", statistic},
                          {"df", df},
                          {"p_value", p_value},
                          {"significant", significant},
                          {"warnings", warnings}};
  }
};

// Pearson's test of independence on a contingency table. The optional Yates
// correction applies on one degree of freedom.
inline ChiSquareResult chi_square(const ContingencyTable& table,
                                  bool yates = false) {
  const int r = table.rows();
  const int c = table.cols();
  if (r < 2 || c < 2)
    throw DataError("chi_square: table is " + std::to_string(r) + "x" +
                    std::to_string(c) + "; need at least 2x2");
  const std::vector<long long> row_sums = table.row_sums();
  const std::vector<long long> col_sums = table.col_sums();
  for (int i = 0; i < r; ++i)
    if (row_sums[static_cast<size_t>(i)] == 0)
      throw DataError("chi_square: row '" +
                      table.row_labels[static_cast<size_t>(i)] +
                      "' of " + table.row_axis + " has no observations");
  for (int j = 0; j < c; ++j)
    if (col_sums[static_cast<size_t>(j)] == 0)
      throw DataError("chi_square: column '" +
                      table.col_labels[static_cast<size_t>(j)] +
                      "' of " + table.col_axis + " has no observations");
  const double total = static_cast<double>(table.total());

  ChiSquareResult result;
  result.df = (r - 1) * (c - 1);
  result.expected.assign(static_cast<size_t>(r),
                         std::vector<double>(static_cast<size_t>(c), 0.0));
  const bool correct = yates && result.df == 1;
  int low = 0;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double e = static_cast<double>(row_sums[static_cast<size_t>(i)]) *
                       static_cast<double>(col_sums[static_cast<size_t>(j)]) /
                       total;
      result.expected[static_cast<size_t>(i)][static_cast<size_t>(j)] = e;
      if (e < 5.0) ++low;
      double diff = std::abs(
          static_cast<double>(
              table.counts[static_cast<size_t>(i)][static_cast<size_t>(j)]) -
          e);
      if (correct) diff = std::max(0.0, diff - 0.5);
      result.statistic += diff * diff / e;
    }
  }
  if (low > 0)
    result.warnings.push_back(std::to_string(low) + " of " +
                              std::to_string(r * c) +
                              " cells have expected count below 5; the "
                              "chi-square approximation may be loose");
  result.p_value = gamma_q(static_cast<double>(result.df) / 2.0,
                           result.statistic / 2.0);
  result.significant = result.p_value < 0.05;
  return result;
}

namespace detail {

// Minimal bar chart, deterministic byte-for-byte for fixed input.
inline std::string bar_chart_svg(const Distribution& d) {
  const int width = 640, height = 360;
  const int left = 40, right = 20, top = 40, bottom = 70;
  const int plot_w = width - left - right;
  const int plot_h = height - top - bottom;
  long long max_count = 1;
  for (long long c : d.counts) max_count = std::max(max_count, c);
  const size_t n = d.counts.size();
  const double slot = static_cast<double>(plot_w) / static_cast<double>(n);
  const double bar_w = slot * 0.7;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" "
        "font-size=\"16\">"
     << d.axis << " (n=" << d.total << ")</text>\n";
  char buf[160];
  for (size_t i = 0; i < n; ++i) {
    const double h = static_cast<double>(plot_h) *
                     static_cast<double>(d.counts[i]) /
                     static_cast<double>(max_count);
    const double x = static_cast<double>(left) +
                     slot * static_cast<double>(i) + (slot - bar_w) / 2.0;
    const double y = static_cast<double>(top + plot_h) - h;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\""
                  " fill=\"#4477aa\"/>\n",
                  x, y, bar_w, h);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\""
                  " font-size=\"11\" text-anchor=\"middle\">%lld</text>\n",
                  x + bar_w / 2.0, y - 4.0, d.counts[i]);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\""
                  " font-size=\"11\" text-anchor=\"end\""
                  " transform=\"rotate(-45 %.2f %.2f)\">",
                  x + bar_w / 2.0, static_cast<double>(top + plot_h + 14),
                  x + bar_w / 2.0, static_cast<double>(top + plot_h + 14));
    os << buf << d.labels[i] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  f.flush();
  if (!f) throw IoError(path + ": write failed");
}

}  // namespace detail

// One independence test bundled with its table for reporting.
struct CrosstabAnalysis {
  ContingencyTable table;
  ChiSquareResult test;
};

// Writes records.jsonl (one line per distribution and per test), one SVG
// bar chart per distribution, and manifest.json listing everything. Returns
// the written file names, manifest first.
inline std::vector<std::string> emit_report(
    const std::vector<Distribution>& distributions,
    const std::vector<CrosstabAnalysis>& tests, const std::string& out_dir,
    const std::string& source = "gold") {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir + ": cannot create directory: " + ec.message());

  std::vector<std::string> written;
  std::string records;
  nlohmann::json manifest;
  manifest["source"] = source;
  manifest["charts"] = nlohmann::json::array();
  for (const Distribution& d : distributions) {
    nlohmann::json dj = d.to_json();
    dj["source"] = source;
    records += dj.dump();
    records += "\n";
    const std::string chart_name = "dist_" + d.axis + ".svg";
    detail::write_text_file((std::filesystem::path(out_dir) / chart_name)
                                .string(),
                            detail::bar_chart_svg(d));
    manifest["charts"].push_back(chart_name);
  }
  for (const CrosstabAnalysis& a : tests) {
    nlohmann::json j = a.test.to_json();
    j["kind"] = "chi_square";
    j["source"] = source;
    j["table"] = a.table.to_json();
    records += j.dump();
    records += "\n";
  }
  manifest["distributions"] = distributions.size();
  manifest["tests"] = tests.size();
  manifest["records"] = "records.jsonl";
  detail::write_text_file(
      (std::filesystem::path(out_dir) / "records.jsonl").string(), records);
  detail::write_text_file(
      (std::filesystem::path(out_dir) / "manifest.json").string(),
      manifest.dump(2) + "\n");
  written.push_back("manifest.json");
  written.push_back("records.jsonl");
  for (const auto& c : manifest["charts"])
    written.push_back(c.get<std::string>());
  return written;
}

}  // namespace storymine
