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

#include "storymine/metrics.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "storymine/verify.hpp"

namespace storymine {
namespace {

TEST(Classification, PerfectPredictionsScoreOne) {
  const std::vector<int> gold = {0, 1, 2, 1, 0, 2};
  TaskMetrics m = classification_metrics("age", 3, gold, gold);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  EXPECT_TRUE(m.absent.empty());
  EXPECT_EQ(m.total, 6);
}

// Two classes, gold balanced, predictions stuck on class 0: accuracy is a
// coin flip and macro-F1 averages 2/3 (class 0) with 0 (class 1).
TEST(Classification, ConstantPredictorHandOracle) {
  std::vector<int> pred(10, 0);
  std::vector<int> gold = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  TaskMetrics m = classification_metrics("toy", 2, pred, gold);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_NEAR(m.macro_f1, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(m.absent.empty());  // class 1 appears in gold
}

TEST(Classification, ConfusionRowsMatchGoldCounts) {
  const std::vector<int> pred = {0, 2, 1, 1, 0, 2, 2, 1};
  const std::vector<int> gold = {0, 1, 1, 2, 0, 2, 1, 0};
  TaskMetrics m = classification_metrics("toy", 3, pred, gold);
  long long total = 0;
  for (int g = 0; g < 3; ++g) {
    long long row = 0;
    for (int p = 0; p < 3; ++p) row += m.confusion[g][p];
    const long long expected =
        std::count(gold.begin(), gold.end(), g);
    EXPECT_EQ(row, expected);
    total += row;
  }
  EXPECT_EQ(total, m.total);
  long long diag = 0;
  for (int c = 0; c < 3; ++c) diag += m.confusion[c][c];
  EXPECT_DOUBLE_EQ(m.accuracy,
                   static_cast<double>(diag) / static_cast<double>(total));
}

TEST(Classification, AbsentClassConventionIsConfigurable) {
  // Class 2 of 3 never appears; default excludes it from the mean.
  const std::vector<int> both = {0, 1, 0, 1};
  TaskMetrics skip = classification_metrics("toy", 3, both, both);
  EXPECT_DOUBLE_EQ(skip.macro_f1, 1.0);
  ASSERT_EQ(skip.absent.size(), 1u);
  EXPECT_EQ(skip.absent[0], 2);

  TaskMetrics counted = classification_metrics("toy", 3, both, both, true);
  EXPECT_NEAR(counted.macro_f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(counted.accuracy, 1.0);
}

TEST(Classification, ErrorsOnBadInput) {
  EXPECT_THROW(classification_metrics("t", 2, {0, 1}, {0}), DataError);
  EXPECT_THROW(classification_metrics("t", 2, {}, {}), DataError);
  EXPECT_THROW(classification_metrics("t", 2, {0, 2}, {0, 1}), DataError);
  EXPECT_THROW(classification_metrics("t", 2, {0, 1}, {-1, 1}), DataError);
}

TEST(Classification, PermutationInvariant) {
  std::vector<int> pred = {0, 1, 2, 0, 1, 2, 1, 1};
  std::vector<int> gold = {0, 1, 1, 0, 2, 2, 1, 0};
  TaskMetrics a = classification_metrics("toy", 3, pred, gold);
  std::vector<size_t> order = {7, 2, 5, 0, 3, 6, 1, 4};
  std::vector<int> pred2, gold2;
  for (size_t i : order) {
    pred2.push_back(pred[i]);
    gold2.push_back(gold[i]);
  }
  TaskMetrics b = classification_metrics("toy", 3, pred2, gold2);
  EXPECT_DOUBLE_EQ(a.accuracy, b.accuracy);
  EXPECT_DOUBLE_EQ(a.macro_f1, b.macro_f1);
  EXPECT_EQ(a.confusion, b.confusion);
}

TEST(TokenMetrics, PerfectAndDegenerateCases) {
  std::vector<std::vector<int>> gold = {{0, 4, 2}, {4, 4}, {1, 3, 4, 4}};
  TaskMetrics perfect = token_metrics(gold, gold);
  EXPECT_DOUBLE_EQ(perfect.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(perfect.macro_f1, 1.0);
  EXPECT_EQ(perfect.total, 9);

  // Everything tagged none: only the none class enters the default mean.
  std::vector<std::vector<int>> all_none = {{4, 4, 4}, {4}};
  TaskMetrics quiet = token_metrics(all_none, all_none);
  EXPECT_DOUBLE_EQ(quiet.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(quiet.macro_f1, 1.0);
  EXPECT_EQ(quiet.absent.size(), 4u);
  TaskMetrics strict = token_metrics(all_none, all_none, true);
  EXPECT_NEAR(strict.macro_f1, 0.2, 1e-15);
}

TEST(TokenMetrics, LengthMismatchFails) {
  EXPECT_THROW(token_metrics({{0, 1}}, {{0}}), DataError);
  EXPECT_THROW(token_metrics({{0}}, {{0}, {1}}), DataError);
}

TEST(Kappa, IdenticalLabelingsScoreOne) {
  EXPECT_DOUBLE_EQ(cohens_kappa({1, 2, 3, 1, 2}, {1, 2, 3, 1, 2}), 1.0);
  // Both raters constant on the same class: degenerate full agreement.
  EXPECT_DOUBLE_EQ(cohens_kappa({5, 5, 5}, {5, 5, 5}), 1.0);
}

// A=[1,1,1,1], B=[1,1,0,0]: observed agreement 0.5, chance agreement
// 1.0*0.5 = 0.5, so kappa is exactly zero.
TEST(Kappa, HandComputedZeroCase) {
  EXPECT_DOUBLE_EQ(cohens_kappa({1, 1, 1, 1}, {1, 1, 0, 0}), 0.0);
}

TEST(Kappa, SymmetricInItsArguments) {
  const std::vector<int> a = {0, 1, 2, 2, 1, 0, 0, 1};
  const std::vector<int> b = {0, 2, 2, 1, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(cohens_kappa(a, b), cohens_kappa(b, a));
}

TEST(Kappa, StringLabelsWork) {
  EXPECT_DOUBLE_EQ(
      cohens_kappa(std::vector<std::string>{"x", "x", "x", "x"},
                   std::vector<std::string>{"x", "x", "y", "y"}),
      0.0);
}

TEST(Kappa, ErrorsOnBadInput) {
  EXPECT_THROW(cohens_kappa({1}, {1, 2}), DataError);
  EXPECT_THROW(cohens_kappa(std::vector<int>{}, std::vector<int>{}),
               DataError);
}

TEST(EvalReport, CoversExtractionAndTasks) {
  const Story story = gradcheck_story();
  Rng rng(3);
  JointModel model(gradcheck_config("j-cnn"), story_vocab(story), rng);
  EvalReport report = evaluate_model(model, {&story});
  ASSERT_TRUE(report.extraction.has_value());
  EXPECT_EQ(report.extraction->total, 6);
  ASSERT_EQ(report.tasks.size(), 2u);
  EXPECT_EQ(report.tasks[0].task, "age");
  EXPECT_EQ(report.tasks[1].task, "ogling");
  const std::string table = report.table();
  EXPECT_NE(table.find("extraction"), std::string::npos);
  EXPECT_NE(table.find("age"), std::string::npos);
  const auto j = report.to_json();
  EXPECT_TRUE(j.contains("extraction"));
  EXPECT_EQ(j["tasks"].size(), 2u);
}

TEST(EvalReport, SkipsStoriesWithoutGoldForATask) {
  Story a = gradcheck_story();
  Story b = gradcheck_story();
  b.id = "second";
  b.dims[0] = -1;  // no age label; the ogling label remains
  Rng rng(3);
  JointModel model(gradcheck_config("j-cnn"), story_vocab(a), rng);
  EvalReport report = evaluate_model(model, {&a, &b});
  EXPECT_EQ(report.tasks[0].total, 1);  // age: only the first story
  EXPECT_EQ(report.tasks[1].total, 2);
}

TEST(EvalReport, FailsWhenNoStoryCarriesALabel) {
  Story story = gradcheck_story();
  story.dims[0] = -1;
  Rng rng(3);
  JointModel model(gradcheck_config("j-cnn"), story_vocab(story), rng);
  try {
    evaluate_model(model, {&story});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("age"), std::string::npos);
  }
  EXPECT_THROW(evaluate_model(model, {}), DataError);
}

TEST(SelectionValue, KnownMetricsAndFallbacks) {
  EvalReport report;
  TaskMetrics a;
  a.accuracy = 0.5;
  a.macro_f1 = 0.25;
  TaskMetrics b;
  b.accuracy = 1.0;
  b.macro_f1 = 0.75;
  report.tasks = {a, b};
  EXPECT_DOUBLE_EQ(selection_value(report, "accuracy"), 0.75);
  EXPECT_DOUBLE_EQ(selection_value(report, "macro_f1"), 0.5);
  EXPECT_THROW(selection_value(report, "token_accuracy"), ConfigError);
  EXPECT_THROW(selection_value(report, "bleu"), ConfigError);

  EvalReport extraction_only;
  TaskMetrics tok;
  tok.accuracy = 0.9;
  tok.macro_f1 = 0.6;
  extraction_only.extraction = tok;
  EXPECT_DOUBLE_EQ(selection_value(extraction_only, "macro_f1"), 0.6);
  EXPECT_DOUBLE_EQ(selection_value(extraction_only, "token_accuracy"), 0.9);
}

}  // namespace
}  // namespace storymine
