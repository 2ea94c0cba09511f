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

#include "storymine/model.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "storymine/verify.hpp"

namespace storymine {
namespace {

Vocabulary vocab_for(const Story& story) {
  Vocabulary v;
  for (const auto& t : story.tokens) v.add(t);
  return v;
}

Story one_token_story() {
  Story s;
  s.id = "one";
  s.tokens = {"stalker"};
  s.element_tags = {kTagHarasser};
  s.dims = {0, 1, 2, 3, 0};
  s.forms = {1, 0, 0};
  return s;
}

Story two_token_story() {
  Story s;
  s.id = "two";
  s.tokens = {"stalker", "followed"};
  s.element_tags = {kTagHarasser, kTagTrigger};
  s.dims = {0, 1, 2, 3, 0};
  s.forms = {1, 0, 0};
  return s;
}

Param* find_param(std::vector<Param*>& params, const std::string& name) {
  for (Param* p : params)
    if (p->name == name) return p;
  ADD_FAILURE() << "no parameter named " << name;
  return nullptr;
}

void zero_params(JointModel& model) {
  for (Param* p : model.params())
    std::fill(p->value.begin(), p->value.end(), 0.0);
}

TEST(Variant, ParseAndNameRoundTrip) {
  for (const std::string& name : all_variant_names())
    EXPECT_EQ(variant_name(parse_variant(name)), name);
  EXPECT_EQ(parse_variant("j-cnn-star"), Variant::JCnnStar);
  EXPECT_THROW(parse_variant("transformer"), ConfigError);
}

TEST(Variant, FamilyPredicates) {
  EXPECT_TRUE(is_joint(Variant::JCnnStar));
  EXPECT_FALSE(is_joint(Variant::ABiLstm));
  EXPECT_TRUE(is_cnn_family(Variant::JSACnn));
  EXPECT_FALSE(is_cnn_family(Variant::JSABiLstm));
  EXPECT_TRUE(is_attentive(Variant::ABiLstm));
  EXPECT_FALSE(is_attentive(Variant::JCnn));
  EXPECT_TRUE(is_supervised(Variant::JSABiLstm));
  EXPECT_FALSE(is_supervised(Variant::JABiLstm));
}

TEST(ModelConfig, DefaultsValidate) {
  ModelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.tasks.size(), 8u);
}

TEST(ModelConfig, BaselineCannotMixExtractionAndClassification) {
  ModelConfig cfg = gradcheck_config("cnn");
  cfg.tasks = {"extraction", "age"};
  try {
    cfg.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("one task at a time"),
              std::string::npos)
        << e.what();
  }
}

TEST(ModelConfig, AttentiveBiLstmBaselineRejectsExtraction) {
  ModelConfig cfg = gradcheck_config("abilstm");
  cfg.tasks = {"extraction"};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, SupervisionNeedsSupervisedVariant) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.supervision["age"] = "time";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, SupervisionElementMustBeReal) {
  ModelConfig cfg = gradcheck_config("j-sacnn");
  cfg.supervision["age"] = "none";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.supervision["age"] = "weather";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, SupervisionForDisabledTaskFails) {
  ModelConfig cfg = gradcheck_config("j-sacnn");
  cfg.tasks = {"age"};
  cfg.supervision["ogling"] = "trigger";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, DuplicateAndUnknownTasksFail) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.tasks = {"age", "age"};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.tasks = {"mood"};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.tasks = {};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, AnchorWidthMustBeAFilterWidth) {
  ModelConfig cfg = gradcheck_config("j-sacnn");
  cfg.attention_anchor_width = 5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.attention_anchor_width = 2;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ModelConfig, WindowMustCoverWidestFilter) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.half_width = 1;  // window of 3 slots, widest filter is 4
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, DropoutRangeChecked) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.dropout_cnn = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.dropout_cnn = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTripIsExact) {
  ModelConfig cfg = gradcheck_config("j-sabilstm");
  cfg.supervision["age"] = "time";
  cfg.lambda_attention = 0.25;
  const auto j = cfg.to_json();
  const ModelConfig back = ModelConfig::from_json(j);
  EXPECT_EQ(back.to_json().dump(), j.dump());
  EXPECT_EQ(back.fingerprint(), cfg.fingerprint());
  EXPECT_EQ(back.filter_widths, cfg.filter_widths);
  EXPECT_EQ(back.supervision.at("age"), "time");
}

TEST(ModelConfig, UnknownJsonFieldFails) {
  nlohmann::json j = gradcheck_config("j-cnn").to_json();
  j["learning_rate"] = 0.1;
  try {
    ModelConfig::from_json(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(ModelConfig, FiltersParseSortedByWidth) {
  nlohmann::json j;
  j["filters"] = {{"3", 7}, {"1", 5}};
  ModelConfig cfg = ModelConfig::from_json(j);
  EXPECT_EQ(cfg.filter_widths, (std::vector<int>{1, 3}));
  EXPECT_EQ(cfg.filter_counts, (std::vector<int>{5, 7}));
}

TEST(ModelConfig, FingerprintTracksContent) {
  ModelConfig a = gradcheck_config("j-cnn");
  ModelConfig b = a;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.variant = "j-acnn";
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(ModelConfig, SupervisionDefaultsFollowTaskMeaning) {
  ModelConfig cfg = gradcheck_config("j-sacnn");
  cfg.tasks = {"age", "single_multiple", "harasser_type", "location_type",
               "time_of_day", "commenting", "ogling", "groping"};
  const auto specs = cfg.resolve_tasks();
  EXPECT_EQ(specs[0].supervision_tag, kTagHarasser);
  EXPECT_EQ(specs[1].supervision_tag, kTagHarasser);
  EXPECT_EQ(specs[2].supervision_tag, kTagHarasser);
  EXPECT_EQ(specs[3].supervision_tag, kTagLocation);
  EXPECT_EQ(specs[4].supervision_tag, kTagTime);
  EXPECT_EQ(specs[5].supervision_tag, kTagTrigger);
  EXPECT_EQ(specs[6].supervision_tag, kTagTrigger);
  EXPECT_EQ(specs[7].supervision_tag, kTagTrigger);

  cfg.supervision["age"] = "time";
  const auto overridden = cfg.resolve_tasks();
  EXPECT_EQ(overridden[0].supervision_tag, kTagTime);
}

TEST(JointModel, JointCnnOutputShapesCoverAllTasks) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.tasks = all_task_names();
  const Story story = gradcheck_story();
  Rng rng(11);
  JointModel model(cfg, vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::train, &rng);
  ASSERT_TRUE(out.element_logits.defined());
  EXPECT_EQ(out.element_logits.shape(), (Shape{6, 5}));
  ASSERT_EQ(out.task_logits.size(), 8u);
  const int expected_classes[8] = {3, 3, 10, 14, 3, 2, 2, 2};
  for (int i = 0; i < 8; ++i)
    EXPECT_EQ(out.task_logits[static_cast<size_t>(i)].shape(),
              (Shape{expected_classes[i]}));
  EXPECT_TRUE(out.attention.empty());

  Prediction p = model.predict(out);
  EXPECT_EQ(p.element_tags.size(), 6u);
  EXPECT_EQ(p.task_classes.size(), 8u);
}

TEST(JointModel, ShortStoriesRunThroughEveryVariant) {
  for (const std::string& name : all_variant_names()) {
    for (const Story& story : {one_token_story(), two_token_story()}) {
      ModelConfig cfg = gradcheck_config(name);
      Rng rng(5);
      JointModel model(cfg, vocab_for(story), rng);
      Tape tape;
      JointOutput out = model.forward(tape, story, Mode::train, &rng);
      LossReport report = model.loss(out, story);
      EXPECT_TRUE(std::isfinite(report.total.item()))
          << name << " on " << story.id;
    }
  }
}

TEST(JointModel, BaselineClassifierHasNoExtractionHead) {
  ModelConfig cfg = gradcheck_config("cnn");
  cfg.tasks = {"age"};
  const Story story = gradcheck_story();
  Rng rng(3);
  JointModel model(cfg, vocab_for(story), rng);
  EXPECT_FALSE(model.has_extraction());
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  EXPECT_FALSE(out.element_logits.defined());
  ASSERT_EQ(out.task_logits.size(), 1u);
  Prediction p = model.predict(out);
  EXPECT_TRUE(p.element_tags.empty());
  LossReport report = model.loss(out, story);
  EXPECT_EQ(report.extraction, 0.0);
  ASSERT_EQ(report.classification.size(), 1u);
}

TEST(JointModel, BaselineExtractorHasNoClassHeads) {
  for (const std::string& name : {std::string("cnn"), std::string("bilstm")}) {
    ModelConfig cfg = gradcheck_config(name);
    cfg.tasks = {"extraction"};
    const Story story = gradcheck_story();
    Rng rng(3);
    JointModel model(cfg, vocab_for(story), rng);
    EXPECT_TRUE(model.has_extraction());
    Tape tape;
    JointOutput out = model.forward(tape, story, Mode::eval);
    ASSERT_TRUE(out.element_logits.defined());
    EXPECT_EQ(out.element_logits.shape(), (Shape{6, 5}));
    EXPECT_TRUE(out.task_logits.empty());
    LossReport report = model.loss(out, story);
    EXPECT_TRUE(report.classification.empty());
    EXPECT_GT(report.extraction, 0.0);
  }
}

TEST(JointModel, EvalForwardIsBitwiseRepeatable) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.dropout_cnn = 0.5;  // must not fire in eval mode
  const Story story = gradcheck_story();
  Rng rng(17);
  JointModel model(cfg, vocab_for(story), rng);
  Tape t1, t2;
  JointOutput a = model.forward(t1, story, Mode::eval);
  JointOutput b = model.forward(t2, story, Mode::eval);
  EXPECT_EQ(a.element_logits.value(), b.element_logits.value());
  for (size_t i = 0; i < a.task_logits.size(); ++i)
    EXPECT_EQ(a.task_logits[i].value(), b.task_logits[i].value());
}

TEST(JointModel, TrainModeDropoutPerturbsTheForwardPass) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.dropout_cnn = 0.5;
  const Story story = gradcheck_story();
  Rng rng(17);
  JointModel model(cfg, vocab_for(story), rng);
  Tape t1, t2;
  Rng stream(99);
  JointOutput a = model.forward(t1, story, Mode::train, &stream);
  JointOutput b = model.forward(t2, story, Mode::train, &stream);
  EXPECT_NE(a.element_logits.value(), b.element_logits.value());
}

TEST(JointModel, TrainModeWithDropoutNeedsAStream) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.dropout_cnn = 0.5;
  const Story story = gradcheck_story();
  Rng rng(17);
  JointModel model(cfg, vocab_for(story), rng);
  Tape tape;
  EXPECT_THROW(model.forward(tape, story, Mode::train), ConfigError);
}

TEST(JointModel, ZeroParametersGiveUniformLosses) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.tasks = all_task_names();
  const Story story = gradcheck_story();
  Rng rng(1);
  JointModel model(cfg, vocab_for(story), rng);
  zero_params(model);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  LossReport report = model.loss(out, story);
  EXPECT_NEAR(report.extraction, std::log(5.0), 1e-12);
  const int expected_classes[8] = {3, 3, 10, 14, 3, 2, 2, 2};
  ASSERT_EQ(report.classification.size(), 8u);
  for (int i = 0; i < 8; ++i)
    EXPECT_NEAR(report.classification[static_cast<size_t>(i)],
                std::log(static_cast<double>(expected_classes[i])), 1e-12);

  // Uniform logits resolve every argmax tie toward the lowest index.
  Prediction p = model.predict(out);
  for (int tag : p.element_tags) EXPECT_EQ(tag, 0);
  for (int cls : p.task_classes) EXPECT_EQ(cls, 0);
}

TEST(JointModel, BiasOnlyModelDrivesLossToZero) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  cfg.tasks = {"age"};
  const Story story = one_token_story();  // tagged harasser, age class 0
  Rng rng(1);
  JointModel model(cfg, vocab_for(story), rng);
  zero_params(model);
  auto params = model.params();
  Param* eb = find_param(params, "extract.b");
  Param* hb = find_param(params, "task.age.head.b");
  ASSERT_NE(eb, nullptr);
  ASSERT_NE(hb, nullptr);
  eb->value[kTagHarasser] = 50.0;
  hb->value[0] = 50.0;
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  LossReport report = model.loss(out, story);
  EXPECT_LT(report.total.item(), 1e-10);
  Prediction p = model.predict(out);
  EXPECT_EQ(p.element_tags[0], kTagHarasser);
  EXPECT_EQ(p.task_classes[0], 0);
}

// Supervised attention adds exactly lambda times the attention penalty on
// top of the unsupervised attentive loss, for the same parameters.
TEST(JointModel, SupervisedLossDecomposes) {
  const struct {
    const char* supervised;
    const char* attentive;
  } pairs[] = {{"j-sacnn", "j-acnn"}, {"j-sabilstm", "j-abilstm"}};
  for (const auto& pair : pairs) {
    for (double lambda : {1.0, 0.7}) {
      const Story story = gradcheck_story();
      ModelConfig sa_cfg = gradcheck_config(pair.supervised);
      sa_cfg.lambda_attention = lambda;
      Rng r1(123);
      JointModel sa(sa_cfg, vocab_for(story), r1);
      Rng r2(123);
      JointModel a(gradcheck_config(pair.attentive), vocab_for(story), r2);

      Tape t1, t2;
      LossReport sa_report = sa.loss(sa.forward(t1, story, Mode::eval), story);
      LossReport a_report = a.loss(a.forward(t2, story, Mode::eval), story);
      EXPECT_GT(sa_report.attention, 0.0);
      EXPECT_NEAR(sa_report.total.item(),
                  a_report.total.item() + lambda * sa_report.attention, 1e-12)
          << pair.supervised << " lambda " << lambda;
    }
  }
}

// Disabling the extraction loss changes nothing about the classification
// pass: same seed, same story, bitwise-equal task losses.
TEST(JointModel, StarVariantMatchesJointClassification) {
  const Story story = gradcheck_story();
  Rng r1(7);
  JointModel star(gradcheck_config("j-cnn*"), vocab_for(story), r1);
  Rng r2(7);
  JointModel joint(gradcheck_config("j-cnn"), vocab_for(story), r2);

  Tape t1, t2;
  JointOutput star_out = star.forward(t1, story, Mode::eval);
  JointOutput joint_out = joint.forward(t2, story, Mode::eval);
  // The graph structure is shared; the element logits still exist.
  ASSERT_TRUE(star_out.element_logits.defined());
  EXPECT_EQ(star_out.element_logits.value(), joint_out.element_logits.value());

  LossReport star_report = star.loss(star_out, story);
  LossReport joint_report = joint.loss(joint_out, story);
  ASSERT_EQ(star_report.classification.size(),
            joint_report.classification.size());
  for (size_t i = 0; i < star_report.classification.size(); ++i)
    EXPECT_EQ(star_report.classification[i], joint_report.classification[i]);
  EXPECT_EQ(star_report.extraction, 0.0);
  double class_sum = 0.0;
  for (double ce : star_report.classification) class_sum += ce;
  EXPECT_NEAR(star_report.total.item(), class_sum, 1e-12);
  EXPECT_NEAR(joint_report.total.item(),
              joint_report.extraction + class_sum, 1e-12);
}

TEST(JointModel, AttentionWeightsAreSimplexPoints) {
  const Story story = gradcheck_story();
  const struct {
    const char* variant;
    int q;
  } cases[] = {{"abilstm", 6},  {"j-acnn", 4},    {"j-sacnn", 4},
               {"j-abilstm", 6}, {"j-sabilstm", 6}};
  for (const auto& c : cases) {
    Rng rng(29);
    JointModel model(gradcheck_config(c.variant), vocab_for(story), rng);
    Tape tape;
    JointOutput out = model.forward(tape, story, Mode::eval);
    ASSERT_EQ(out.attention.size(), model.tasks().size()) << c.variant;
    for (const Tensor& alpha : out.attention) {
      EXPECT_EQ(alpha.shape(), (Shape{c.q})) << c.variant;
      double sum = 0.0;
      for (double v : alpha.value()) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12) << c.variant;
    }
    // Independent pools per task: the weights should not coincide.
    ASSERT_EQ(out.attention.size(), 2u);
    EXPECT_NE(out.attention[0].value(), out.attention[1].value());
  }
}

TEST(JointModel, TokenAttributionKeepsMassAndCenters) {
  const Story story = gradcheck_story();
  Rng rng(29);
  JointModel model(gradcheck_config("j-acnn"), vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  std::vector<double> per_token = model.attention_by_token(out, 0);
  ASSERT_EQ(per_token.size(), 6u);
  double sum = 0.0;
  for (double v : per_token) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // Width-3 windows starting at 0..3 center on tokens 1..4.
  EXPECT_EQ(per_token[0], 0.0);
  EXPECT_EQ(per_token[5], 0.0);
  for (int i = 0; i < 4; ++i)
    EXPECT_EQ(per_token[static_cast<size_t>(i + 1)],
              out.attention[0].value()[static_cast<size_t>(i)]);
}

TEST(JointModel, BiLstmTokenAttributionIsDirect) {
  const Story story = gradcheck_story();
  Rng rng(29);
  JointModel model(gradcheck_config("j-abilstm"), vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  std::vector<double> per_token = model.attention_by_token(out, 1);
  ASSERT_EQ(per_token.size(), 6u);
  for (size_t i = 0; i < 6; ++i)
    EXPECT_EQ(per_token[i], out.attention[1].value()[i]);
}

TEST(JointModel, SingleTokenStoryGetsFullAttention) {
  for (const std::string& name :
       {std::string("j-acnn"), std::string("j-abilstm")}) {
    const Story story = one_token_story();
    Rng rng(31);
    JointModel model(gradcheck_config(name), vocab_for(story), rng);
    Tape tape;
    JointOutput out = model.forward(tape, story, Mode::eval);
    std::vector<double> per_token = model.attention_by_token(out, 0);
    ASSERT_EQ(per_token.size(), 1u);
    EXPECT_DOUBLE_EQ(per_token[0], 1.0);
    const std::string dump = model.attention_dump(out, story);
    EXPECT_NE(dump.find("1.000000"), std::string::npos) << dump;
    EXPECT_NE(dump.find("age"), std::string::npos);
    EXPECT_NE(dump.find("ogling"), std::string::npos);
    EXPECT_NE(dump.find("stalker"), std::string::npos);
  }
}

TEST(JointModel, AttentionDumpNeedsAttentiveVariant) {
  const Story story = gradcheck_story();
  Rng rng(2);
  JointModel model(gradcheck_config("j-cnn"), vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  EXPECT_THROW(model.attention_dump(out, story), ConfigError);
  EXPECT_THROW(model.attention_by_token(out, 0), ConfigError);
}

TEST(JointModel, MissingGoldLabelIsReported) {
  ModelConfig cfg = gradcheck_config("j-cnn");
  Story story = gradcheck_story();
  story.dims[0] = -1;  // age missing, but the age task is enabled
  Rng rng(2);
  JointModel model(cfg, vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  try {
    model.loss(out, story);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("age"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(story.id), std::string::npos);
  }
}

TEST(JointModel, TagCountMismatchIsReported) {
  Story story = gradcheck_story();
  Rng rng(2);
  JointModel model(gradcheck_config("j-cnn"), vocab_for(story), rng);
  Tape tape;
  JointOutput out = model.forward(tape, story, Mode::eval);
  story.element_tags.pop_back();
  EXPECT_THROW(model.loss(out, story), DataError);
}

TEST(JointModel, SupervisionTargetMatchesDirectConstruction) {
  const Story story = gradcheck_story();
  {
    Rng rng(4);
    JointModel model(gradcheck_config("j-sacnn"), vocab_for(story), rng);
    const TaskSpec& age = model.tasks()[0];
    ASSERT_EQ(age.supervision_tag, kTagHarasser);
    std::vector<int> e;
    for (int tag : story.element_tags) e.push_back(tag == kTagHarasser);
    const auto expected = supervised_target(e, 3);
    EXPECT_EQ(model.supervision_target(story, age), expected);
    EXPECT_EQ(expected.size(), 4u);
  }
  {
    Rng rng(4);
    JointModel model(gradcheck_config("j-sabilstm"), vocab_for(story), rng);
    const TaskSpec& ogling = model.tasks()[1];
    ASSERT_EQ(ogling.supervision_tag, kTagTrigger);
    std::vector<int> e;
    for (int tag : story.element_tags) e.push_back(tag == kTagTrigger);
    EXPECT_EQ(model.supervision_target(story, ogling), supervised_target(e, 1));
  }
  {
    // Shorter than the anchor window: labels pad with zeros and the single
    // surviving window covers the whole story.
    const Story two = two_token_story();
    Rng rng(4);
    JointModel model(gradcheck_config("j-sacnn"), vocab_for(two), rng);
    const auto target = model.supervision_target(two, model.tasks()[0]);
    ASSERT_EQ(target.size(), 1u);
    EXPECT_DOUBLE_EQ(target[0], 1.0);
  }
}

TEST(JointModel, PretrainedEmbeddingsAreAdopted) {
  const Story story = one_token_story();
  ModelConfig cfg = gradcheck_config("j-cnn");
  Vocabulary vocab = vocab_for(story);
  std::vector<double> table(static_cast<size_t>(vocab.size() * cfg.word_dim));
  for (size_t i = 0; i < table.size(); ++i)
    table[i] = 0.01 * static_cast<double>(i);
  Rng rng(8);
  JointModel model(cfg, vocab, rng, &table);
  EXPECT_EQ(model.word_embeddings().value, table);

  std::vector<double> wrong(table.size() + 1, 0.0);
  Rng rng2(8);
  EXPECT_THROW(JointModel(cfg, vocab, rng2, &wrong), ConfigError);
}

TEST(JointModel, ParamNamesAreUniqueAndOrderIsStable) {
  const Story story = gradcheck_story();
  for (const std::string& name : all_variant_names()) {
    Rng rng(13);
    JointModel model(gradcheck_config(name), vocab_for(story), rng);
    auto params = model.params();
    std::set<std::string> names;
    for (Param* p : params) {
      EXPECT_TRUE(names.insert(p->name).second)
          << "duplicate param name " << p->name << " in " << name;
      EXPECT_GT(p->size(), 0);
    }
    EXPECT_EQ(model.params(), params) << name;
  }
}

TEST(JointModel, PadRowStartsAtZero) {
  const Story story = gradcheck_story();
  Rng rng(21);
  JointModel model(gradcheck_config("j-cnn"), vocab_for(story), rng);
  for (int d = 0; d < 4; ++d)
    EXPECT_EQ(model.word_embeddings().value[static_cast<size_t>(d)], 0.0);
}

// Reverse-mode gradients of the full training loss agree with central
// finite differences on every variant. The acceptance run uses more draws;
// two per variant keeps this suite quick.
TEST(JointModel, GradientsMatchFiniteDifferencesEverywhere) {
  for (const auto& r : check_all_variant_gradients(2, 2026)) {
    EXPECT_LT(r.max_rel_err, 1e-4) << r.variant;
    EXPECT_GT(r.coordinates, 0) << r.variant;
  }
}

}  // namespace
}  // namespace storymine
