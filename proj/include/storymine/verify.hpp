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

#include <string>
#include <vector>

#include "storymine/model.hpp"

namespace storymine {

inline std::vector<std::string> all_variant_names() {
  return {"cnn",    "bilstm",  "abilstm",   "j-cnn*",    "j-cnn",
          "j-acnn", "j-sacnn", "j-bilstm", "j-abilstm", "j-sabilstm"};
}

// Desk-scale configuration for end-to-end gradient verification: small
// embeddings, the full (1,2,3,4) width ladder, no dropout (the loss must be
// deterministic across the finite-difference evaluations).
inline ModelConfig gradcheck_config(const std::string& variant) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.half_width = 2;
  cfg.pos_dim = 3;
  cfg.word_dim = 4;
  cfg.filter_widths = {1, 2, 3, 4};
  cfg.filter_counts = {2, 2, 2, 2};
  cfg.hidden = 3;
  cfg.attn_size = 3;
  cfg.lstm_layers = 1;
  cfg.dropout_cnn = 0.0;
  cfg.dropout_bilstm = 0.0;
  cfg.tasks = {"age", "ogling"};
  return cfg;
}

// Six distinct tokens so pooling ties cannot arise from repeated inputs;
// every element type appears at least once.
inline Story gradcheck_story() {
  Story s;
  s.id = "synthetic-6";
  s.tokens = {"vendor", "kept", "leering", "near", "station", "dusk"};
  s.element_tags = {kTagHarasser, kTagNone,     kTagTrigger,
                    kTagTrigger,  kTagLocation, kTagTime};
  s.dims = {1, 2, 3, 5, 1};
  s.forms = {1, 1, 0};
  s.split = Split::train;
  return s;
}

inline Vocabulary story_vocab(const Story& story) {
  Vocabulary v;
  for (const auto& t : story.tokens) v.add(t);
  return v;
}

struct VariantGradCheck {
  std::string variant;
  int coordinates = 0;    // parameter entries compared
  double max_rel_err = 0.0;
};

// Checks reverse-mode gradients of the full training loss against central
// finite differences for one variant, at `draws` random parameter draws.
inline VariantGradCheck check_variant_gradients(const std::string& variant,
                                                int draws, uint64_t seed,
                                                double eps = 1e-5) {
  const Story story = gradcheck_story();
  VariantGradCheck result;
  result.variant = variant;
  for (int draw = 0; draw < draws; ++draw) {
    Rng rng(seed + 7919ull * static_cast<uint64_t>(draw));
    JointModel model(gradcheck_config(variant), story_vocab(story), rng);
    std::vector<Param*> params = model.params();
    int coords = 0;
    for (Param* p : params) {
      for (double& v : p->value) v = rng.uniform(-0.6, 0.6);
      coords += p->size();
    }
    result.coordinates = coords;
    const double err = grad_check(
        [&](Tape& tape) {
          JointOutput out = model.forward(tape, story, Mode::train);
          return model.loss(out, story).total;
        },
        std::span<Param* const>(params.data(), params.size()), eps);
    result.max_rel_err = std::max(result.max_rel_err, err);
  }
  return result;
}

inline std::vector<VariantGradCheck> check_all_variant_gradients(
    int draws, uint64_t seed, double eps = 1e-5) {
  std::vector<VariantGradCheck> out;
  for (const std::string& v : all_variant_names())
    out.push_back(check_variant_gradients(v, draws, seed, eps));
  return out;
}

}  // namespace storymine
