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
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "storymine/model.hpp"
#include "storymine/text.hpp"

namespace storymine {

// Accuracy, macro-F1, and the confusion matrix for one labeling task.
// Classes that appear in neither the gold nor the predicted labels are
// listed in `absent`; they count toward the macro-F1 mean (as zero) only
// when `include_absent` was set.
struct TaskMetrics {
  std::string task;
  int classes = 0;
  bool include_absent = false;
  std::vector<std::vector<long long>> confusion;  // [gold][pred]
  long long total = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<int> absent;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["classes"] = classes;
    j["total"] = total;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["absent_classes"] = absent;
    j["include_absent"] = include_absent;
    j["confusion"] = confusion;
    return j;
  }
};

// Builds TaskMetrics from aligned prediction/gold label lists.
inline TaskMetrics classification_metrics(const std::string& task, int classes,
                                          const std::vector<int>& pred,
                                          const std::vector<int>& gold,
                                          bool include_absent = false) {
  if (pred.size() != gold.size())
    throw DataError(task + ": " + std::to_string(pred.size()) +
                    " predictions for " + std::to_string(gold.size()) +
                    " gold labels");
  if (pred.empty()) throw DataError(task + ": nothing to evaluate");
  TaskMetrics m;
  m.task = task;
  m.classes = classes;
  m.include_absent = include_absent;
  m.confusion.assign(static_cast<size_t>(classes),
                     std::vector<long long>(static_cast<size_t>(classes), 0));
  for (size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i];
    const int g = gold[i];
    if (p < 0 || p >= classes || g < 0 || g >= classes)
      throw DataError(task + ": label pair (" + std::to_string(g) + ", " +
                      std::to_string(p) + ") at position " +
                      std::to_string(i) + " is outside " +
                      std::to_string(classes) + " classes");
    ++m.confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
  }
  m.total = static_cast<long long>(pred.size());
  long long diag = 0;
  for (int c = 0; c < classes; ++c)
    diag += m.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
  m.accuracy = static_cast<double>(diag) / static_cast<double>(m.total);

  double f1_sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    long long tp = m.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
    long long gold_c = 0, pred_c = 0;
    for (int o = 0; o < classes; ++o) {
      gold_c += m.confusion[static_cast<size_t>(c)][static_cast<size_t>(o)];
      pred_c += m.confusion[static_cast<size_t>(o)][static_cast<size_t>(c)];
    }
    if (gold_c == 0 && pred_c == 0) {
      m.absent.push_back(c);
      if (include_absent) ++counted;  // contributes F1 = 0
      continue;
    }
    const double precision =
        pred_c > 0 ? static_cast<double>(tp) / static_cast<double>(pred_c)
                   : 0.0;
    const double recall =
        gold_c > 0 ? static_cast<double>(tp) / static_cast<double>(gold_c)
                   : 0.0;
    if (precision + recall > 0.0)
      f1_sum += 2.0 * precision * recall / (precision + recall);
    ++counted;
  }
  m.macro_f1 = counted > 0 ? f1_sum / static_cast<double>(counted) : 0.0;
  return m;
}

// Token-level extraction metrics over per-story tag sequences; the five
// element classes (the none tag included) share one confusion matrix.
inline TaskMetrics token_metrics(const std::vector<std::vector<int>>& pred,
                                 const std::vector<std::vector<int>>& gold,
                                 bool include_absent = false) {
  if (pred.size() != gold.size())
    throw DataError("extraction: " + std::to_string(pred.size()) +
                    " predicted stories for " + std::to_string(gold.size()) +
                    " gold stories");
  std::vector<int> flat_pred, flat_gold;
  for (size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size())
      throw DataError("extraction: story " + std::to_string(s) + " has " +
                      std::to_string(pred[s].size()) + " predicted tags for " +
                      std::to_string(gold[s].size()) + " tokens");
    flat_pred.insert(flat_pred.end(), pred[s].begin(), pred[s].end());
    flat_gold.insert(flat_gold.end(), gold[s].begin(), gold[s].end());
  }
  return classification_metrics("extraction", kNumElementTags, flat_pred,
                                flat_gold, include_absent);
}

// Agreement between two categorical labelings, chance-corrected through the
// raters' marginal distributions.
inline double cohens_kappa(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size())
    throw DataError("kappa: " + std::to_string(a.size()) + " labels vs " +
                    std::to_string(b.size()));
  if (a.empty()) throw DataError("kappa: empty labelings");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  long long agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    if (a[i] == b[i]) ++agree;
  }
  const double po = static_cast<double>(agree) / n;
  double pe = 0.0;
  for (const auto& [cls, count] : ca) {
    auto it = cb.find(cls);
    if (it != cb.end()) pe += (count / n) * (it->second / n);
  }
  if (pe >= 1.0) return 1.0;  // both raters constant on one class
  return (po - pe) / (1.0 - pe);
}

inline double cohens_kappa(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  std::map<std::string, int> ids;
  auto mapped = [&ids](const std::vector<std::string>& labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels)
      out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
    return out;
  };
  const std::vector<int> ia = mapped(a);
  const std::vector<int> ib = mapped(b);
  return cohens_kappa(ia, ib);
}

// Model quality on one story set: token-level extraction metrics when the
// model has an extraction head, plus one TaskMetrics per classification
// task. Stories lacking a task's gold label are skipped for that task.
struct EvalReport {
  std::optional<TaskMetrics> extraction;
  std::vector<TaskMetrics> tasks;

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (extraction) j["extraction"] = extraction->to_json();
    j["tasks"] = nlohmann::json::array();
    for (const auto& t : tasks) j["tasks"].push_back(t.to_json());
    return j;
  }

  // Human-readable summary; accuracy and macro-F1 are scaled by 100.
  std::string table() const {
    std::ostringstream os;
    os << "task                 n      acc   macro-F1\n";
    auto line = [&os](const TaskMetrics& m) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-18s %6lld %8.1f %10.1f", m.task.c_str(),
                    m.total, 100.0 * m.accuracy, 100.0 * m.macro_f1);
      os << buf;
      if (!m.absent.empty()) {
        os << "  (absent classes:";
        for (int c : m.absent) os << " " << c;
        os << (m.include_absent ? ", counted as 0" : ", excluded") << ")";
      }
      os << "\n";
    };
    if (extraction) line(*extraction);
    for (const auto& t : tasks) line(t);
    return os.str();
  }
};

inline EvalReport evaluate_model(JointModel& model,
                                 const std::vector<const Story*>& stories,
                                 bool include_absent = false) {
  if (stories.empty()) throw DataError("evaluation: no stories");
  std::vector<std::vector<int>> pred_tags, gold_tags;
  const std::vector<TaskSpec>& tasks = model.tasks();
  std::vector<std::vector<int>> task_pred(tasks.size()), task_gold(tasks.size());
  for (const Story* story : stories) {
    Tape tape;
    JointOutput out = model.forward(tape, *story, Mode::eval);
    Prediction p = model.predict(out);
    if (model.has_extraction()) {
      if (story->element_tags.size() != p.element_tags.size())
        throw DataError("story " + story->id + ": " +
                        std::to_string(story->element_tags.size()) +
                        " gold tags for " +
                        std::to_string(p.element_tags.size()) + " tokens");
      pred_tags.push_back(p.element_tags);
      gold_tags.push_back(story->element_tags);
    }
    for (size_t t = 0; t < tasks.size(); ++t) {
      const int gold = tasks[t].is_form
                           ? story->forms[static_cast<size_t>(tasks[t].index)]
                           : story->dims[static_cast<size_t>(tasks[t].index)];
      if (gold < 0) continue;  // not annotated for this task
      task_pred[t].push_back(p.task_classes[t]);
      task_gold[t].push_back(gold);
    }
  }
  EvalReport report;
  if (model.has_extraction())
    report.extraction = token_metrics(pred_tags, gold_tags, include_absent);
  for (size_t t = 0; t < tasks.size(); ++t) {
    if (task_gold[t].empty())
      throw DataError("task '" + tasks[t].name +
                      "': no story carries a gold label");
    report.tasks.push_back(classification_metrics(
        tasks[t].name, tasks[t].classes, task_pred[t], task_gold[t],
        include_absent));
  }
  return report;
}

// Scalar used for dev-set model selection. Task-level names average over
// the classification tasks and fall back to the extraction metrics for
// extraction-only models.
inline double selection_value(const EvalReport& report,
                              const std::string& metric) {
  auto task_mean = [&report](double TaskMetrics::*field) {
    double sum = 0.0;
    for (const auto& t : report.tasks) sum += t.*field;
    return sum / static_cast<double>(report.tasks.size());
  };
  if (metric == "macro_f1") {
    if (!report.tasks.empty()) return task_mean(&TaskMetrics::macro_f1);
    if (report.extraction) return report.extraction->macro_f1;
    throw ConfigError("selection metric 'macro_f1': nothing was evaluated");
  }
  if (metric == "accuracy") {
    if (!report.tasks.empty()) return task_mean(&TaskMetrics::accuracy);
    if (report.extraction) return report.extraction->accuracy;
    throw ConfigError("selection metric 'accuracy': nothing was evaluated");
  }
  if (metric == "token_accuracy" || metric == "token_macro_f1") {
    if (!report.extraction)
      throw ConfigError("selection metric '" + metric +
                        "' needs an extraction head");
    return metric == "token_accuracy" ? report.extraction->accuracy
                                      : report.extraction->macro_f1;
  }
  throw ConfigError("unknown selection metric '" + metric +
                    "' (use macro_f1, accuracy, token_accuracy, or "
                    "token_macro_f1)");
}

}  // namespace storymine
