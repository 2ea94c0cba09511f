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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "storymine/layers.hpp"
#include "storymine/rng.hpp"
#include "storymine/tensor.hpp"
#include "storymine/text.hpp"

namespace storymine {

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

enum class Variant {
  Cnn,        // single-task: classification or extraction, not both
  BiLstm,     // single-task: classification or extraction, not both
  ABiLstm,    // single-task classification with attentive pooling
  JCnnStar,   // joint structure, extraction loss disabled
  JCnn,
  JACnn,
  JSACnn,
  JBiLstm,
  JABiLstm,
  JSABiLstm,
};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Cnn: return "cnn";
    case Variant::BiLstm: return "bilstm";
    case Variant::ABiLstm: return "abilstm";
    case Variant::JCnnStar: return "j-cnn*";
    case Variant::JCnn: return "j-cnn";
    case Variant::JACnn: return "j-acnn";
    case Variant::JSACnn: return "j-sacnn";
    case Variant::JBiLstm: return "j-bilstm";
    case Variant::JABiLstm: return "j-abilstm";
    case Variant::JSABiLstm: return "j-sabilstm";
  }
  return "?";
}

inline Variant parse_variant(const std::string& name) {
  if (name == "cnn") return Variant::Cnn;
  if (name == "bilstm") return Variant::BiLstm;
  if (name == "abilstm") return Variant::ABiLstm;
  if (name == "j-cnn*" || name == "j-cnn-star") return Variant::JCnnStar;
  if (name == "j-cnn") return Variant::JCnn;
  if (name == "j-acnn") return Variant::JACnn;
  if (name == "j-sacnn") return Variant::JSACnn;
  if (name == "j-bilstm") return Variant::JBiLstm;
  if (name == "j-abilstm") return Variant::JABiLstm;
  if (name == "j-sabilstm") return Variant::JSABiLstm;
  throw ConfigError("unknown model variant '" + name + "'");
}

inline bool is_joint(Variant v) {
  switch (v) {
    case Variant::JCnnStar:
    case Variant::JCnn:
    case Variant::JACnn:
    case Variant::JSACnn:
    case Variant::JBiLstm:
    case Variant::JABiLstm:
    case Variant::JSABiLstm:
      return true;
    default:
      return false;
  }
}

inline bool is_cnn_family(Variant v) {
  switch (v) {
    case Variant::Cnn:
    case Variant::JCnnStar:
    case Variant::JCnn:
    case Variant::JACnn:
    case Variant::JSACnn:
      return true;
    default:
      return false;
  }
}

inline bool is_attentive(Variant v) {
  switch (v) {
    case Variant::ABiLstm:
    case Variant::JACnn:
    case Variant::JSACnn:
    case Variant::JABiLstm:
    case Variant::JSABiLstm:
      return true;
    default:
      return false;
  }
}

inline bool is_supervised(Variant v) {
  return v == Variant::JSACnn || v == Variant::JSABiLstm;
}

// ---------------------------------------------------------------------------
// Model configuration
// ---------------------------------------------------------------------------

inline std::vector<std::string> all_task_names() {
  std::vector<std::string> names;
  for (int d = 0; d < kNumDims; ++d) names.emplace_back(kDimNames[d]);
  for (int f = 0; f < kNumForms; ++f) names.emplace_back(kFormNames[f]);
  return names;
}

// One enabled classification head.
struct TaskSpec {
  std::string name;
  bool is_form = false;
  int index = 0;            // dim index or form index
  int classes = 0;          // 2 for forms, Table-style class count for dims
  int supervision_tag = kTagNone;  // element used as the attention target
};

inline int default_supervision_tag(const std::string& task) {
  if (task == "age" || task == "single_multiple" || task == "harasser_type")
    return kTagHarasser;
  if (task == "location_type") return kTagLocation;
  if (task == "time_of_day") return kTagTime;
  return kTagTrigger;  // the three harassment-form tasks
}

struct ModelConfig {
  std::string variant = "j-cnn";
  int half_width = 5;   // context window covers 2*half_width+1 tokens
  int pos_dim = 20;
  int word_dim = 100;
  std::vector<int> filter_widths = {1, 2, 3, 4};
  std::vector<int> filter_counts = {50, 50, 50, 50};
  int hidden = 50;      // LSTM units per direction
  int attn_size = 50;
  int lstm_layers = 1;
  double dropout_cnn = 0.5;
  double dropout_bilstm = 0.25;
  double lambda_attention = 1.0;
  // Time axis the attentive-CNN pools share across filter widths: weights
  // are indexed by the start of a window this many tokens wide.
  int attention_anchor_width = 3;
  // "extraction" plus/or any of the five dimension and three form names.
  std::vector<std::string> tasks = all_task_names();
  std::map<std::string, std::string> supervision;  // task -> element name

  Variant parsed_variant() const { return parse_variant(variant); }

  bool wants_extraction() const {
    if (is_joint(parsed_variant())) return true;
    for (const auto& t : tasks)
      if (t == "extraction") return true;
    return false;
  }

  std::vector<std::string> classification_tasks() const {
    std::vector<std::string> out;
    for (const auto& t : tasks)
      if (t != "extraction") out.push_back(t);
    return out;
  }

  // Resolved per-task specs, with supervision defaults applied.
  std::vector<TaskSpec> resolve_tasks() const {
    std::vector<TaskSpec> out;
    for (const std::string& name : classification_tasks()) {
      TaskSpec spec;
      spec.name = name;
      bool known = false;
      for (int d = 0; d < kNumDims; ++d) {
        if (name == kDimNames[d]) {
          spec.is_form = false;
          spec.index = d;
          spec.classes = kDimClassCounts[d];
          known = true;
        }
      }
      for (int f = 0; f < kNumForms; ++f) {
        if (name == kFormNames[f]) {
          spec.is_form = true;
          spec.index = f;
          spec.classes = 2;
          known = true;
        }
      }
      if (!known) throw ConfigError("unknown task '" + name + "'");
      spec.supervision_tag = default_supervision_tag(name);
      auto it = supervision.find(name);
      if (it != supervision.end()) {
        int tag = -1;
        for (int t = 0; t < kNumElementTags; ++t)
          if (it->second == kElementTagNames[t]) tag = t;
        if (tag < 0 || tag == kTagNone)
          throw ConfigError("task '" + name + "': supervision element '" +
                            it->second + "' is not one of harasser/time/"
                            "location/trigger");
        spec.supervision_tag = tag;
      }
      out.push_back(spec);
    }
    return out;
  }

  void validate() const {
    const Variant v = parsed_variant();
    if (half_width < 1)
      throw ConfigError("half_width must be >= 1, got " +
                        std::to_string(half_width));
    if (pos_dim < 1 || word_dim < 1 || hidden < 1 || attn_size < 1 ||
        lstm_layers < 1)
      throw ConfigError("embedding, hidden, attention, and layer sizes must "
                        "be >= 1");
    if (dropout_cnn < 0.0 || dropout_cnn >= 1.0 || dropout_bilstm < 0.0 ||
        dropout_bilstm >= 1.0)
      throw ConfigError("dropout rates must lie in [0, 1)");
    if (lambda_attention < 0.0)
      throw ConfigError("lambda_attention must be nonnegative");
    if (filter_widths.empty() || filter_widths.size() != filter_counts.size())
      throw ConfigError("filters: need one count per width");
    int max_width = 0;
    for (size_t i = 0; i < filter_widths.size(); ++i) {
      if (filter_widths[i] < 1 || filter_counts[i] < 1)
        throw ConfigError("filters: widths and counts must be >= 1");
      max_width = std::max(max_width, filter_widths[i]);
    }
    if (is_cnn_family(v) && 2 * half_width + 1 < max_width)
      throw ConfigError("context window of " +
                        std::to_string(2 * half_width + 1) +
                        " slots is shorter than the widest filter (" +
                        std::to_string(max_width) + ")");
    if (is_cnn_family(v) && is_attentive(v)) {
      if (std::find(filter_widths.begin(), filter_widths.end(),
                    attention_anchor_width) == filter_widths.end())
        throw ConfigError("attention_anchor_width " +
                          std::to_string(attention_anchor_width) +
                          " is not one of the filter widths");
    }

    // Task set rules.
    std::vector<std::string> seen;
    bool extraction_listed = false;
    for (const auto& t : tasks) {
      if (std::find(seen.begin(), seen.end(), t) != seen.end())
        throw ConfigError("task '" + t + "' listed twice");
      seen.push_back(t);
      if (t == "extraction") extraction_listed = true;
    }
    const std::vector<TaskSpec> specs = resolve_tasks();  // validates names
    if (tasks.empty())
      throw ConfigError("no tasks enabled");
    if (!is_joint(v)) {
      if (extraction_listed && !specs.empty())
        throw ConfigError(std::string("variant '") + variant_name(v) +
                          "' trains one task at a time: extraction and "
                          "classification together need a joint variant");
      if (extraction_listed && v == Variant::ABiLstm)
        throw ConfigError("variant 'abilstm' classifies only; use 'bilstm' "
                          "or a joint variant for extraction");
      if (!extraction_listed && specs.empty())
        throw ConfigError("no tasks enabled");
    }
    if (!is_supervised(v) && !supervision.empty())
      throw ConfigError(std::string("variant '") + variant_name(v) +
                        "' has no supervised attention; remove the "
                        "supervision mapping or use j-sacnn / j-sabilstm");
    if (is_supervised(v) && specs.empty())
      throw ConfigError("supervised variants need at least one "
                        "classification task");
    for (const auto& entry : supervision) {
      bool enabled = false;
      for (const auto& s : specs) enabled = enabled || s.name == entry.first;
      if (!enabled)
        throw ConfigError("supervision names task '" + entry.first +
                          "' which is not enabled");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["variant"] = variant;
    j["half_width"] = half_width;
    j["pos_dim"] = pos_dim;
    j["word_dim"] = word_dim;
    nlohmann::json filters;
    for (size_t i = 0; i < filter_widths.size(); ++i)
      filters[std::to_string(filter_widths[i])] = filter_counts[i];
    j["filters"] = filters;
    j["hidden"] = hidden;
    j["attn_size"] = attn_size;
    j["lstm_layers"] = lstm_layers;
    j["dropout_cnn"] = dropout_cnn;
    j["dropout_bilstm"] = dropout_bilstm;
    j["lambda_attention"] = lambda_attention;
    j["attention_anchor_width"] = attention_anchor_width;
    j["tasks"] = tasks;
    j["supervision"] = supervision;
    return j;
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    static const std::vector<std::string> known = {
        "variant",        "half_width",       "pos_dim",
        "word_dim",       "filters",          "hidden",
        "attn_size",      "lstm_layers",      "dropout_cnn",
        "dropout_bilstm", "lambda_attention", "attention_anchor_width",
        "tasks",          "supervision"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end())
        throw ConfigError("unknown model config field '" + it.key() + "'");
    }
    try {
      if (j.contains("variant")) cfg.variant = j["variant"].get<std::string>();
      if (j.contains("half_width")) cfg.half_width = j["half_width"].get<int>();
      if (j.contains("pos_dim")) cfg.pos_dim = j["pos_dim"].get<int>();
      if (j.contains("word_dim")) cfg.word_dim = j["word_dim"].get<int>();
      if (j.contains("filters")) {
        cfg.filter_widths.clear();
        cfg.filter_counts.clear();
        std::vector<std::pair<int, int>> pairs;
        for (auto it = j["filters"].begin(); it != j["filters"].end(); ++it) {
          int w;
          try {
            w = std::stoi(it.key());
          } catch (...) {
            throw ConfigError("filters: width '" + it.key() +
                              "' is not an integer");
          }
          pairs.emplace_back(w, it.value().get<int>());
        }
        std::sort(pairs.begin(), pairs.end());
        for (auto& [w, c] : pairs) {
          cfg.filter_widths.push_back(w);
          cfg.filter_counts.push_back(c);
        }
      }
      if (j.contains("hidden")) cfg.hidden = j["hidden"].get<int>();
      if (j.contains("attn_size")) cfg.attn_size = j["attn_size"].get<int>();
      if (j.contains("lstm_layers"))
        cfg.lstm_layers = j["lstm_layers"].get<int>();
      if (j.contains("dropout_cnn"))
        cfg.dropout_cnn = j["dropout_cnn"].get<double>();
      if (j.contains("dropout_bilstm"))
        cfg.dropout_bilstm = j["dropout_bilstm"].get<double>();
      if (j.contains("lambda_attention"))
        cfg.lambda_attention = j["lambda_attention"].get<double>();
      if (j.contains("attention_anchor_width"))
        cfg.attention_anchor_width = j["attention_anchor_width"].get<int>();
      if (j.contains("tasks"))
        cfg.tasks = j["tasks"].get<std::vector<std::string>>();
      if (j.contains("supervision"))
        cfg.supervision =
            j["supervision"].get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("model config: ") + e.what());
    }
    return cfg;
  }

  // Stable fingerprint of the canonical JSON form (64-bit FNV-1a).
  uint64_t fingerprint() const {
    const std::string s = to_json().dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }
};

// ---------------------------------------------------------------------------
// Outputs, predictions, losses
// ---------------------------------------------------------------------------

struct JointOutput {
  int n = 0;                        // story length in tokens
  Tensor element_logits;            // {n,5}; defined iff extraction head ran
  std::vector<Tensor> task_logits;  // one per enabled classification task
  std::vector<Tensor> attention;    // per task; defined iff attentive variant
};

struct Prediction {
  std::vector<int> element_tags;  // empty unless the extraction head ran
  std::vector<int> task_classes;  // one per enabled classification task
};

struct LossReport {
  Tensor total;
  double extraction = 0.0;
  std::vector<double> classification;  // per task
  double attention = 0.0;              // summed over tasks, before lambda
};

namespace detail {
inline int argmax_lowest(const double* v, int k) {
  int best = 0;
  for (int i = 1; i < k; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}
}  // namespace detail

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// The model
// ---------------------------------------------------------------------------

// Joint extraction + classification model covering all ten variants. Owns
// the vocabulary and every trainable parameter; forward passes record onto a
// caller-supplied tape.
class JointModel {
 public:
  JointModel(ModelConfig cfg, Vocabulary vocab, Rng& rng,
             const std::vector<double>* pretrained = nullptr)
      : cfg_(std::move(cfg)),
        variant_(cfg_.parsed_variant()),
        vocab_(std::move(vocab)) {
    cfg_.validate();
    tasks_ = cfg_.resolve_tasks();
    has_extraction_ = cfg_.wants_extraction();
    extraction_loss_weight_ = variant_ == Variant::JCnnStar ? 0.0 : 1.0;

    word_emb_ = Param("emb.words", {vocab_.size(), cfg_.word_dim});
    if (pretrained) {
      if (pretrained->size() != word_emb_.value.size())
        throw ConfigError("pretrained table holds " +
                          std::to_string(pretrained->size()) +
                          " values; vocabulary of " +
                          std::to_string(vocab_.size()) + " x " +
                          std::to_string(cfg_.word_dim) + " needs " +
                          std::to_string(word_emb_.value.size()));
      word_emb_.value = *pretrained;
    } else {
      detail::init_uniform(word_emb_, rng);
      // PAD stays zero so boundary slots contribute nothing.
      std::fill(word_emb_.value.begin(),
                word_emb_.value.begin() + cfg_.word_dim, 0.0);
    }

    const bool cnn = is_cnn_family(variant_);
    if (cnn) {
      if (has_extraction_)
        word_encoder_ = CnnWordEncoder("wordenc", cfg_.half_width,
                                       cfg_.word_dim, cfg_.pos_dim,
                                       cfg_.filter_widths, cfg_.filter_counts,
                                       rng);
    } else {
      int in = cfg_.word_dim;
      for (int layer = 0; layer < cfg_.lstm_layers; ++layer) {
        lstm_stack_.emplace_back("lstm" + std::to_string(layer), in,
                                 cfg_.hidden, rng);
        in = 2 * cfg_.hidden;
      }
    }

    const int feat = feature_dim();
    if (has_extraction_) {
      extract_w_ = Param("extract.w", {feat, kNumElementTags});
      extract_b_ = Param("extract.b", {kNumElementTags});
      detail::init_uniform(extract_w_, rng);
    }
    for (const TaskSpec& task : tasks_) {
      const std::string prefix = "task." + task.name;
      if (cnn)
        task_banks_.emplace_back(prefix, cfg_.filter_widths,
                                 cfg_.filter_counts, class_input_dim(), rng);
      if (is_attentive(variant_))
        pools_.emplace_back(prefix + ".att", pooled_dim(), cfg_.attn_size,
                            rng);
      head_w_.emplace_back(prefix + ".head.w", Shape{task.classes,
                                                     pooled_dim()});
      head_b_.emplace_back(prefix + ".head.b", Shape{task.classes});
      detail::init_uniform(head_w_.back(), rng);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  bool has_extraction() const { return has_extraction_; }
  Param& word_embeddings() { return word_emb_; }

  // Every trainable parameter, in a fixed order.
  std::vector<Param*> params() {
    std::vector<Param*> out;
    out.push_back(&word_emb_);
    if (word_encoder_) word_encoder_->collect_params(out);
    for (auto& l : lstm_stack_) l.collect_params(out);
    if (has_extraction_) {
      out.push_back(&extract_w_);
      out.push_back(&extract_b_);
    }
    for (size_t i = 0; i < tasks_.size(); ++i) {
      if (i < task_banks_.size()) task_banks_[i].collect_params(out);
      if (i < pools_.size()) pools_[i].collect_params(out);
      out.push_back(&head_w_[i]);
      out.push_back(&head_b_[i]);
    }
    return out;
  }

  JointOutput forward(Tape& tape, const Story& story, Mode mode,
                      Rng* rng = nullptr) {
    const std::vector<int> ids = token_ids(story.tokens, vocab_);
    if (ids.empty())
      throw DataError("story " + story.id + " has no tokens");
    JointOutput out;
    out.n = static_cast<int>(ids.size());
    if (is_cnn_family(variant_))
      forward_cnn(tape, ids, mode, rng, out);
    else
      forward_bilstm(tape, ids, mode, rng, out);
    return out;
  }

  // Builds the summed training loss on the output's tape. Extraction is
  // token-averaged; each enabled task adds its own cross entropy; supervised
  // variants add lambda times the attention loss.
  LossReport loss(const JointOutput& out, const Story& story) {
    std::vector<Tensor> terms;
    LossReport report;
    if (has_extraction_ && extraction_loss_weight_ != 0.0) {
      if (static_cast<int>(story.element_tags.size()) != out.n)
        throw DataError("story " + story.id + ": " +
                        std::to_string(story.element_tags.size()) +
                        " element tags for " + std::to_string(out.n) +
                        " tokens");
      Tensor ex = cross_entropy_rows(out.element_logits, story.element_tags);
      report.extraction = ex.item();
      terms.push_back(ex);
    }
    for (size_t i = 0; i < tasks_.size(); ++i) {
      const TaskSpec& task = tasks_[i];
      const int gold = task.is_form
                           ? story.forms[static_cast<size_t>(task.index)]
                           : story.dims[static_cast<size_t>(task.index)];
      if (gold < 0)
        throw DataError("story " + story.id + " has no gold label for task '" +
                        task.name + "'");
      Tensor ce = cross_entropy(out.task_logits[i], gold);
      report.classification.push_back(ce.item());
      terms.push_back(ce);
    }
    if (is_supervised(variant_)) {
      Tensor att_sum;
      for (size_t i = 0; i < tasks_.size(); ++i) {
        std::vector<double> target = supervision_target(story, tasks_[i]);
        Tensor al = attention_loss(out.attention[i], target);
        att_sum = att_sum.defined() ? add(att_sum, al) : al;
      }
      report.attention = att_sum.item();
      if (cfg_.lambda_attention != 0.0)
        terms.push_back(cfg_.lambda_attention == 1.0
                            ? att_sum
                            : scale(att_sum, cfg_.lambda_attention));
    }
    if (terms.empty()) throw ConfigError("model has no loss terms");
    Tensor total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    report.total = total;
    return report;
  }

  Prediction predict(const JointOutput& out) const {
    Prediction p;
    if (out.element_logits.defined()) {
      p.element_tags.resize(static_cast<size_t>(out.n));
      for (int i = 0; i < out.n; ++i)
        p.element_tags[static_cast<size_t>(i)] = detail::argmax_lowest(
            out.element_logits.value().data() + i * kNumElementTags,
            kNumElementTags);
    }
    for (size_t i = 0; i < tasks_.size(); ++i)
      p.task_classes.push_back(detail::argmax_lowest(
          out.task_logits[i].value().data(), tasks_[i].classes));
    return p;
  }

  // Per-token attention weights for one task: pooled window weights are
  // attributed to the windows' center tokens, so the columns still sum to 1.
  std::vector<double> attention_by_token(const JointOutput& out,
                                         size_t task_index) const {
    if (!is_attentive(variant_))
      throw ConfigError(std::string("variant '") + variant_name(variant_) +
                        "' has no attention weights to dump");
    const Tensor& alpha = out.attention.at(task_index);
    std::vector<double> per_token(static_cast<size_t>(out.n), 0.0);
    const int q = alpha.size();
    if (is_cnn_family(variant_)) {
      const int center_shift = (cfg_.attention_anchor_width - 1) / 2;
      for (int t = 0; t < q; ++t) {
        int tok = std::min(out.n - 1, std::max(0, t + center_shift));
        per_token[static_cast<size_t>(tok)] += alpha.value()[t];
      }
    } else {
      for (int t = 0; t < q && t < out.n; ++t)
        per_token[static_cast<size_t>(t)] = alpha.value()[t];
    }
    return per_token;
  }

  // Text table: one row per token, one weight column per task.
  std::string attention_dump(const JointOutput& out, const Story& story) const {
    if (!is_attentive(variant_))
      throw ConfigError(std::string("variant '") + variant_name(variant_) +
                        "' has no attention weights to dump");
    std::vector<std::vector<double>> cols;
    for (size_t i = 0; i < tasks_.size(); ++i)
      cols.push_back(attention_by_token(out, i));
    std::ostringstream os;
    os << "story " << story.id << "\n";
    os << "token";
    for (const TaskSpec& t : tasks_) os << "\t" << t.name;
    os << "\n";
    for (int i = 0; i < out.n; ++i) {
      os << story.tokens[static_cast<size_t>(i)];
      for (const auto& col : cols) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", col[static_cast<size_t>(i)]);
        os << "\t" << buf;
      }
      os << "\n";
    }
    return os.str();
  }

  // Binary labels marking the task's supervision element, shaped to match
  // the task's attention weights.
  std::vector<double> supervision_target(const Story& story,
                                         const TaskSpec& task) const {
    std::vector<int> e;
    e.reserve(story.element_tags.size());
    for (int tag : story.element_tags)
      e.push_back(tag == task.supervision_tag ? 1 : 0);
    if (is_cnn_family(variant_)) {
      const int w = cfg_.attention_anchor_width;
      if (static_cast<int>(e.size()) < w)
        e.resize(static_cast<size_t>(w), 0);  // window covers the whole story
      return supervised_target(e, w);
    }
    return supervised_target(e, 1);
  }

 private:
  int feature_dim() const {
    if (is_cnn_family(variant_)) {
      int total = 0;
      for (int c : cfg_.filter_counts) total += c;
      return total;  // layer-1 output per token
    }
    return 2 * cfg_.hidden;
  }

  // Input dimension of the per-task banks: layer-1 features for joint
  // variants, raw word embeddings for the single-task baseline.
  int class_input_dim() const {
    return has_extraction_ ? feature_dim() : cfg_.word_dim;
  }

  int pooled_dim() const {
    if (is_cnn_family(variant_)) {
      int total = 0;
      for (int c : cfg_.filter_counts) total += c;
      return total;
    }
    return 2 * cfg_.hidden;
  }

  Tensor maybe_dropout(Tape& tape, const Tensor& x, double rate, Mode mode,
                       Rng* rng) {
    if (mode != Mode::train || rate == 0.0) return x;
    if (!rng)
      throw ConfigError("training forward pass needs a random stream for "
                        "dropout masks");
    Tensor mask =
        tape.constant(x.shape(), rng->dropout_mask(x.size(), rate));
    return dropout(x, mask);
  }

  // Rows [0, q+w-1) of the feature sequence, zero-padded when the story is
  // shorter, so a width-w bank emits exactly q steps.
  static Tensor aligned_rows(const Tensor& h, int q, int w) {
    const int need = q + w - 1;
    const int n = h.dim(0);
    if (n == need) return h;
    if (n > need) return slice_rows(h, 0, need);
    return pad_rows_end(h, need - n);
  }

  // Zero-pads the feature sequence so every bank width fits.
  static Tensor fit_to_width(const Tensor& h, int max_width) {
    return h.dim(0) >= max_width ? h
                                 : pad_rows_end(h, max_width - h.dim(0));
  }

  Tensor head_logits(Tape& tape, size_t task, const Tensor& v) {
    return add(matmul(tape.param(head_w_[task]), v),
               tape.param(head_b_[task]));
  }

  void classify_from_features(Tape& tape, const Tensor& feats,
                              JointOutput& out) {
    for (size_t i = 0; i < tasks_.size(); ++i) {
      ConvFilterBank& bank = task_banks_[i];
      if (is_attentive(variant_)) {
        const int n = feats.dim(0);
        const int q = std::max(n - cfg_.attention_anchor_width + 1, 1);
        std::vector<Tensor> maps;
        for (size_t wi = 0; wi < bank.widths.size(); ++wi)
          maps.push_back(bank.conv_map(
              tape, aligned_rows(feats, q, bank.widths[wi]), wi));
        Tensor m = maps[0];
        for (size_t wi = 1; wi < maps.size(); ++wi) m = hconcat(m, maps[wi]);
        auto r = pools_[i].attend(tape, m);
        out.attention.push_back(r.alpha);
        out.task_logits.push_back(head_logits(tape, i, r.v));
      } else {
        Tensor z = bank.encode_pooled(
            tape, fit_to_width(feats, bank.max_width()));
        out.task_logits.push_back(head_logits(tape, i, z));
      }
    }
  }

  void forward_cnn(Tape& tape, const std::vector<int>& ids, Mode mode,
                   Rng* rng, JointOutput& out) {
    Tensor feats;
    if (has_extraction_) {
      ContextSequence ctx = build_context_sequences(ids, cfg_.half_width);
      Tensor h = word_encoder_->encode(tape, ctx, word_emb_);
      feats = maybe_dropout(tape, h, cfg_.dropout_cnn, mode, rng);
      out.element_logits = add_rowwise(matmul(feats, tape.param(extract_w_)),
                                       tape.param(extract_b_));
    } else {
      Tensor rows = tape.gather_rows(word_emb_, ids);
      feats = maybe_dropout(tape, rows, cfg_.dropout_cnn, mode, rng);
    }
    classify_from_features(tape, feats, out);
  }

  void forward_bilstm(Tape& tape, const std::vector<int>& ids, Mode mode,
                      Rng* rng, JointOutput& out) {
    Tensor rows = tape.gather_rows(word_emb_, ids);
    BiLstmEncoder::Result res;
    for (auto& layer : lstm_stack_) {
      res = layer.encode(tape, rows);
      rows = res.per_token;
    }
    Tensor per_token =
        maybe_dropout(tape, res.per_token, cfg_.dropout_bilstm, mode, rng);
    if (has_extraction_)
      out.element_logits = add_rowwise(matmul(per_token, tape.param(extract_w_)),
                                       tape.param(extract_b_));
    if (is_attentive(variant_)) {
      for (size_t i = 0; i < tasks_.size(); ++i) {
        auto r = pools_[i].attend(tape, per_token);
        out.attention.push_back(r.alpha);
        out.task_logits.push_back(head_logits(tape, i, r.v));
      }
    } else {
      Tensor doc = maybe_dropout(tape, res.doc, cfg_.dropout_bilstm, mode, rng);
      for (size_t i = 0; i < tasks_.size(); ++i)
        out.task_logits.push_back(head_logits(tape, i, doc));
    }
  }

  ModelConfig cfg_;
  Variant variant_;
  std::vector<TaskSpec> tasks_;
  bool has_extraction_ = false;
  double extraction_loss_weight_ = 1.0;
  Vocabulary vocab_;
  Param word_emb_;
  std::optional<CnnWordEncoder> word_encoder_;
  std::vector<BiLstmEncoder> lstm_stack_;
  Param extract_w_;
  Param extract_b_;
  std::vector<ConvFilterBank> task_banks_;
  std::vector<AttentionPool> pools_;
  std::vector<Param> head_w_;
  std::vector<Param> head_b_;
};

}  // namespace storymine
