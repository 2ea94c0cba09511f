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
//
// Command-line front end. One process runs one command; every command is
// deterministic given its config and seed, and none of them touch their
// input files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "storymine/checkpoint.hpp"
#include "storymine/metrics.hpp"
#include "storymine/model.hpp"
#include "storymine/stats.hpp"
#include "storymine/text.hpp"
#include "storymine/train.hpp"
#include "storymine/verify.hpp"

namespace storymine {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// ---------------------------------------------------------------------------
// Run configuration: model + training plan + file locations, loadable from a
// single JSON file so runs are pinned by an artifact rather than a shell
// history. Flags override individual fields afterwards.
// ---------------------------------------------------------------------------

struct RunConfig {
  ModelConfig model;
  TrainPlan train;
  std::string corpus;
  std::string splits;
  std::string vectors;  // optional; empty means random embeddings
  std::string checkpoint = "model.ckpt";
  std::string out_dir = "out";

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key != "model" && key != "train" && key != "paths")
        throw ConfigError("unknown run config section '" + key + "'");
    }
    if (j.contains("model")) cfg.model = ModelConfig::from_json(j["model"]);
    if (j.contains("train")) cfg.train = TrainPlan::from_json(j["train"]);
    if (j.contains("paths")) {
      const nlohmann::json& p = j["paths"];
      static const std::vector<std::string> known = {
          "corpus", "splits", "vectors", "checkpoint", "out_dir"};
      for (auto it = p.begin(); it != p.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
          throw ConfigError("unknown path field '" + it.key() + "'");
      }
      try {
        if (p.contains("corpus")) cfg.corpus = p["corpus"].get<std::string>();
        if (p.contains("splits")) cfg.splits = p["splits"].get<std::string>();
        if (p.contains("vectors"))
          cfg.vectors = p["vectors"].get<std::string>();
        if (p.contains("checkpoint"))
          cfg.checkpoint = p["checkpoint"].get<std::string>();
        if (p.contains("out_dir"))
          cfg.out_dir = p["out_dir"].get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("paths: ") + e.what());
      }
    }
    return cfg;
  }
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

// Unset corpus/splits/vectors paths fall back to conventional names under
// the directory named by this environment variable.
void apply_data_dir_defaults(RunConfig& cfg) {
  const char* dir = std::getenv("STORYMINE_DATA_DIR");
  if (dir == nullptr || *dir == '\0') return;
  const std::filesystem::path base(dir);
  if (cfg.corpus.empty()) cfg.corpus = (base / "corpus.jsonl").string();
  if (cfg.splits.empty()) cfg.splits = (base / "splits.txt").string();
  if (cfg.vectors.empty()) {
    const std::filesystem::path vec = base / "vectors.vec";
    if (std::filesystem::exists(vec)) cfg.vectors = vec.string();
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty())
    throw ConfigError("no " + what +
                      " path configured (set paths." + what +
                      " in the config file or STORYMINE_DATA_DIR)");
  if (!std::filesystem::exists(path))
    throw DataError(what + " file '" + path + "' does not exist");
}

std::string read_stream(std::istream& in) {
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string read_input(const std::string& in_path) {
  if (in_path.empty()) return read_stream(std::cin);
  std::ifstream f(in_path);
  if (!f) throw IoError("cannot open input file '" + in_path + "'");
  return read_stream(f);
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> seeds;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty())
      throw ConfigError("--seed: empty entry in '" + text + "'");
    try {
      size_t pos = 0;
      seeds.push_back(std::stoull(part, &pos));
      if (pos != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("--seed: '" + part + "' is not an unsigned integer");
    }
  }
  if (seeds.empty()) throw ConfigError("--seed: no seeds given");
  return seeds;
}

uint64_t parse_single_seed(const std::string& text) {
  const std::vector<uint64_t> seeds = parse_seed_list(text);
  if (seeds.size() != 1)
    throw ConfigError("this command takes a single --seed value");
  return seeds[0];
}

// Inserts a suffix before the extension: model.ckpt -> model.seed7.ckpt.
std::string with_seed_suffix(const std::string& path, uint64_t seed,
                             bool multi) {
  if (!multi) return path;
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path();
  out /= p.stem().string() + ".seed" + std::to_string(seed) +
         p.extension().string();
  return out.string();
}

void write_output_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec)
      throw IoError(p.parent_path().string() + ": cannot create directory: " +
                    ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << content;
  if (!out) throw IoError(path + ": write failed");
}

// Builds the vocabulary and optional pretrained table for a fresh model.
// With a vector file, the vocabulary is the vector file's; without one,
// it is grown from the training split and embeddings start random.
struct EmbeddingSource {
  Vocabulary vocab;
  std::vector<double> table;
  bool pretrained = false;
};

EmbeddingSource embedding_source(const RunConfig& cfg, const Corpus& corpus) {
  EmbeddingSource src;
  if (!cfg.vectors.empty()) {
    require_file(cfg.vectors, "vectors");
    WordVectors wv = load_word_vectors(cfg.vectors, cfg.model.word_dim);
    for (const std::string& w : wv.warnings)
      std::cerr << "storymine: " << w << "\n";
    src.vocab = std::move(wv.vocab);
    src.table = std::move(wv.table);
    src.pretrained = true;
    return src;
  }
  for (const Story* s : stories_in_split(corpus, Split::train))
    for (const std::string& t : s->tokens) src.vocab.add(t);
  return src;
}

Corpus load_configured_corpus(const RunConfig& cfg) {
  require_file(cfg.corpus, "corpus");
  require_file(cfg.splits, "splits");
  Corpus corpus = load_corpus(cfg.corpus, cfg.splits);
  for (const std::string& w : corpus.warnings)
    std::cerr << "storymine: " << w << "\n";
  return corpus;
}

Split parse_split_flag(const std::string& name) {
  try {
    return parse_split(name);
  } catch (const DataError&) {
    throw ConfigError("--split must be train, dev, or test; got '" + name +
                      "'");
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_preprocess(const RunConfig& cfg, const std::string& in_path,
                   bool have_config, const std::string& out_dir) {
  nlohmann::json result;
  if (!have_config) {
    // Single-text mode: normalize whatever arrives on --in or stdin.
    const std::string raw = read_input(in_path);
    const std::string clean = preprocess(raw);
    result["text"] = clean;
    result["tokens"] = tokenize(clean);
  } else {
    Corpus corpus = load_configured_corpus(cfg);
    Vocabulary vocab;
    long long train_tokens = 0;
    for (const Story* s : stories_in_split(corpus, Split::train)) {
      for (const std::string& t : s->tokens) vocab.add(t);
      train_tokens += static_cast<long long>(s->tokens.size());
    }
    result["stories"] = corpus.stories.size();
    result["split_counts"] = {{"train", corpus.split_counts[0]},
                              {"dev", corpus.split_counts[1]},
                              {"test", corpus.split_counts[2]}};
    result["train_tokens"] = train_tokens;
    result["train_vocabulary"] = vocab.size();
    result["warnings"] = corpus.warnings;
  }
  const std::string text = result.dump(2) + "\n";
  std::cout << text;
  if (!out_dir.empty())
    write_output_file(
        (std::filesystem::path(out_dir) / "preprocess.json").string(), text);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::vector<uint64_t>& seeds) {
  Corpus corpus = load_configured_corpus(cfg);
  const std::vector<const Story*> train_set =
      stories_in_split(corpus, Split::train);
  const std::vector<const Story*> dev_set =
      stories_in_split(corpus, Split::dev);
  const EmbeddingSource src = embedding_source(cfg, corpus);

  const bool multi = seeds.size() > 1;
  double value_sum = 0.0;
  for (uint64_t seed : seeds) {
    Rng rng(seed);
    JointModel model(cfg.model, src.vocab, rng,
                     src.pretrained ? &src.table : nullptr);
    TrainPlan plan = cfg.train;
    plan.seed = seed;
    const TrainResult result = train(model, train_set, dev_set, plan);

    const std::string ckpt_path =
        with_seed_suffix(cfg.checkpoint, seed, multi);
    {
      const std::filesystem::path p(ckpt_path);
      if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec)
          throw IoError(p.parent_path().string() +
                        ": cannot create directory: " + ec.message());
      }
    }
    save_checkpoint(ckpt_path, model);
    const std::string log_path = with_seed_suffix(
        (std::filesystem::path(cfg.out_dir) / "metrics.jsonl").string(), seed,
        multi);
    write_output_file(log_path, result.log_lines(plan.selection_metric));

    char line[160];
    std::snprintf(line, sizeof line,
                  "seed %llu: best epoch %d, %s %.4f; wrote %s and %s\n",
                  static_cast<unsigned long long>(seed), result.best_epoch,
                  plan.selection_metric.c_str(), result.best_value,
                  ckpt_path.c_str(), log_path.c_str());
    std::cout << line;
    value_sum += result.best_value;
  }
  if (multi) {
    char line[96];
    std::snprintf(line, sizeof line, "mean best %s over %zu seeds: %.4f\n",
                  cfg.train.selection_metric.c_str(), seeds.size(),
                  value_sum / static_cast<double>(seeds.size()));
    std::cout << line;
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& split_name,
             const std::string& expected_variant) {
  Corpus corpus = load_configured_corpus(cfg);
  require_file(cfg.checkpoint, "checkpoint");
  JointModel model = load_checkpoint(cfg.checkpoint);
  if (!expected_variant.empty() &&
      model.config().variant != expected_variant)
    throw ConfigError("checkpoint holds variant '" + model.config().variant +
                      "', not the requested '" + expected_variant + "'");
  const Split split = parse_split_flag(split_name);
  const std::vector<const Story*> stories = stories_in_split(corpus, split);
  if (stories.empty())
    throw DataError("split '" + split_name + "' has no stories");

  const EvalReport report = evaluate_model(model, stories);
  const std::string table = report.table();
  std::cout << table;
  const std::string base =
      (std::filesystem::path(cfg.out_dir) / ("eval_" + split_name)).string();
  write_output_file(base + ".txt", table);
  write_output_file(base + ".json", report.to_json().dump(2) + "\n");
  std::cout << "wrote " << base << ".txt and " << base << ".json\n";
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& in_path,
                const std::string& out_dir) {
  require_file(checkpoint, "checkpoint");
  JointModel model = load_checkpoint(checkpoint);

  const std::string raw = read_input(in_path);
  const std::string clean = preprocess(raw);
  Story story;
  story.id = in_path.empty() ? "<stdin>" : in_path;
  story.tokens = tokenize(clean);
  if (story.tokens.empty())
    throw DataError("input has no tokens after preprocessing");
  story.element_tags.assign(story.tokens.size(), kTagNone);
  story.dims.fill(-1);
  story.forms.fill(-1);

  Tape tape;
  const JointOutput out = model.forward(tape, story, Mode::eval);
  const Prediction pred = model.predict(out);

  std::ostringstream text;
  nlohmann::json j;
  j["tokens"] = story.tokens;
  if (!pred.element_tags.empty()) {
    nlohmann::json tags = nlohmann::json::array();
    text << "elements:\n";
    for (size_t i = 0; i < story.tokens.size(); ++i) {
      const char* tag = kElementTagNames[pred.element_tags[i]];
      tags.push_back(tag);
      text << "  " << story.tokens[i] << "\t" << tag << "\n";
    }
    j["element_tags"] = tags;
  }
  const std::vector<TaskSpec>& tasks = model.tasks();
  nlohmann::json labels = nlohmann::json::object();
  if (!tasks.empty()) text << "labels:\n";
  for (size_t t = 0; t < tasks.size(); ++t) {
    const TaskSpec& spec = tasks[t];
    const int cls = pred.task_classes[t];
    const LabelAxis axis = parse_axis(spec.name);
    const std::string label = axis.class_label(cls);
    labels[spec.name] = label;
    text << "  " << spec.name << ": " << label << "\n";
  }
  j["labels"] = labels;
  if (!out.attention.empty()) {
    j["attention"] = nlohmann::json::object();
    for (size_t t = 0; t < tasks.size(); ++t)
      j["attention"][tasks[t].name] = model.attention_by_token(out, t);
    text << "attention (weight per token):\n"
         << model.attention_dump(out, story);
  }

  std::cout << text.str();
  if (!out_dir.empty())
    write_output_file(
        (std::filesystem::path(out_dir) / "predict.json").string(),
        j.dump(2) + "\n");
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, bool have_checkpoint,
                bool exclude_unspecified, const std::string& out_dir) {
  Corpus corpus = load_configured_corpus(cfg);

  std::vector<std::string> axes;
  std::vector<Story> predicted;  // owns synthetic stories in predicted mode
  std::vector<const Story*> stories;
  std::string source;
  if (have_checkpoint) {
    require_file(cfg.checkpoint, "checkpoint");
    JointModel model = load_checkpoint(cfg.checkpoint);
    source = "predicted";
    for (const TaskSpec& spec : model.tasks()) axes.push_back(spec.name);
    if (axes.empty())
      throw ConfigError(
          "checkpoint has no classification tasks to analyze");
    for (const Story* s : stories_in_split(corpus, Split::test)) {
      Tape tape;
      const JointOutput out = model.forward(tape, *s, Mode::eval);
      const Prediction pred = model.predict(out);
      Story p;
      p.id = s->id;
      p.tokens = s->tokens;
      p.element_tags.assign(s->tokens.size(), kTagNone);
      p.dims.fill(-1);
      p.forms.fill(-1);
      const std::vector<TaskSpec>& tasks = model.tasks();
      for (size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].is_form)
          p.forms[static_cast<size_t>(tasks[t].index)] = pred.task_classes[t];
        else
          p.dims[static_cast<size_t>(tasks[t].index)] = pred.task_classes[t];
      }
      predicted.push_back(std::move(p));
    }
    for (const Story& s : predicted) stories.push_back(&s);
    if (stories.empty()) throw DataError("test split has no stories");
  } else {
    source = "gold";
    for (int d = 0; d < kNumDims; ++d) axes.push_back(kDimNames[d]);
    for (int f = 0; f < kNumForms; ++f) axes.push_back(kFormNames[f]);
    for (const Story& s : corpus.stories) stories.push_back(&s);
  }

  std::vector<Distribution> dists;
  for (const std::string& name : axes)
    dists.push_back(
        distribution(stories, parse_axis(name), exclude_unspecified));

  std::vector<CrosstabAnalysis> analyses;
  for (size_t a = 0; a < axes.size(); ++a) {
    for (size_t b = a + 1; b < axes.size(); ++b) {
      CrosstabAnalysis analysis;
      try {
        analysis.table = crosstab(stories, parse_axis(axes[a]),
                                  parse_axis(axes[b]), exclude_unspecified);
        analysis.test = chi_square(analysis.table);
      } catch (const DataError& e) {
        std::cerr << "storymine: skipping " << axes[a] << " x " << axes[b]
                  << ": " << e.what() << "\n";
        continue;
      }
      analyses.push_back(std::move(analysis));
    }
  }

  const std::string dir =
      out_dir.empty()
          ? (std::filesystem::path(cfg.out_dir) / "analysis").string()
          : out_dir;
  const std::vector<std::string> files =
      emit_report(dists, analyses, dir, source);
  std::cout << source << " analysis: " << dists.size() << " distributions, "
            << analyses.size() << " tests\n";
  for (const std::string& f : files) std::cout << "  " << dir << "/" << f
                                               << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& variant, uint64_t seed) {
  std::vector<VariantGradCheck> results;
  if (variant.empty()) {
    results = check_all_variant_gradients(5, seed);
  } else {
    parse_variant(variant);  // reject unknown names before the slow part
    results.push_back(check_variant_gradients(variant, 5, seed));
  }
  bool ok = true;
  for (const VariantGradCheck& r : results) {
    char line[128];
    std::snprintf(line, sizeof line,
                  "%-10s max rel err %.3e over %d coordinates %s\n",
                  r.variant.c_str(), r.max_rel_err, r.coordinates,
                  r.max_rel_err < 1e-4 ? "ok" : "FAIL");
    std::cout << line;
    ok = ok && r.max_rel_err < 1e-4;
  }
  if (!ok) {
    std::cerr << "storymine: gradient check failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

std::vector<std::string> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file '" + path + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    labels.push_back(line);
  }
  if (labels.empty()) throw DataError(path + ": no labels");
  return labels;
}

int cmd_kappa(const std::string& file_a, const std::string& file_b) {
  const std::vector<std::string> a = read_label_file(file_a);
  const std::vector<std::string> b = read_label_file(file_b);
  if (a.size() != b.size())
    throw DataError("label files disagree on length: " +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  const double kappa = cohens_kappa(a, b);
  long long agree = 0;
  for (size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  char line[96];
  std::snprintf(line, sizeof line, "items %zu, agreement %.4f, kappa %.4f\n",
                a.size(),
                static_cast<double>(agree) / static_cast<double>(a.size()),
                kappa);
  std::cout << line;
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"joint element extraction and harassment-form analysis for "
               "short incident stories"};
  app.require_subcommand(1);

  std::string config_path, variant, seed_text, out_dir, checkpoint, in_path;
  std::string split_name = "test";
  int epochs = -1;
  bool exclude_unspecified = false;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", config_path, "run configuration JSON file");
    cmd->add_option("--out", out_dir, "output directory override");
  };

  CLI::App* pre = app.add_subcommand(
      "preprocess", "normalize raw text, or summarize a configured corpus");
  add_common(pre, true);
  pre->add_option("--in", in_path, "raw text file (default: stdin)");

  CLI::App* tr = app.add_subcommand(
      "train", "train a model and write checkpoint + metric log");
  add_common(tr, true);
  tr->add_option("--variant", variant, "model variant override");
  tr->add_option("--seed", seed_text,
                 "seed or comma-separated seed list (one run per seed)");
  tr->add_option("--epochs", epochs, "epoch count override");
  tr->add_option("--checkpoint", checkpoint, "checkpoint path override");

  CLI::App* ev = app.add_subcommand(
      "eval", "evaluate a checkpoint on one corpus split");
  add_common(ev, true);
  ev->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
  ev->add_option("--variant", variant,
                 "expected variant (mismatch is an error)");
  ev->add_option("--split", split_name, "corpus split (default test)");

  CLI::App* pr = app.add_subcommand(
      "predict", "tag and classify one raw story from a file or stdin");
  pr->add_option("--checkpoint", checkpoint, "trained checkpoint")
      ->required();
  pr->add_option("--in", in_path, "story text file (default: stdin)");
  pr->add_option("--out", out_dir, "directory for predict.json");

  CLI::App* an = app.add_subcommand(
      "analyze", "distributions and chi-square tests over story labels");
  add_common(an, true);
  an->add_option("--checkpoint", checkpoint,
                 "analyze model predictions on the test split instead of "
                 "gold labels");
  an->add_flag("--exclude-unspecified", exclude_unspecified,
               "drop the 'unspecified' class from dimension counts");

  CLI::App* gc = app.add_subcommand(
      "gradcheck", "compare reverse-mode gradients with finite differences");
  gc->add_option("--variant", variant, "check one variant (default: all)");
  gc->add_option("--seed", seed_text, "base seed (default 1)");

  CLI::App* ka = app.add_subcommand(
      "kappa", "Cohen's kappa between two label files (one label per line)");
  std::string kappa_a, kappa_b;
  ka->add_option("file_a", kappa_a, "first label file")->required();
  ka->add_option("file_b", kappa_b, "second label file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg = load_run_config(config_path);
  apply_data_dir_defaults(cfg);
  if (!variant.empty()) cfg.model.variant = variant;
  if (epochs >= 0) cfg.train.epochs = epochs;
  if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.model.validate();
  cfg.train.validate();

  if (pre->parsed())
    return cmd_preprocess(cfg, in_path, !config_path.empty(), out_dir);
  if (tr->parsed()) {
    std::vector<uint64_t> seeds = {cfg.train.seed};
    if (!seed_text.empty()) seeds = parse_seed_list(seed_text);
    return cmd_train(cfg, seeds);
  }
  if (ev->parsed()) return cmd_eval(cfg, split_name, variant);
  if (pr->parsed()) return cmd_predict(cfg.checkpoint, in_path, out_dir);
  if (an->parsed())
    return cmd_analyze(cfg, !checkpoint.empty(), exclude_unspecified,
                       out_dir);
  if (gc->parsed()) {
    const uint64_t seed =
        seed_text.empty() ? 1 : parse_single_seed(seed_text);
    return cmd_gradcheck(variant, seed);
  }
  if (ka->parsed()) return cmd_kappa(kappa_a, kappa_b);
  return kExitUsage;  // unreachable; require_subcommand guards this
}

}  // namespace
}  // namespace storymine

int main(int argc, char** argv) {
  try {
    return storymine::run(argc, argv);
  } catch (const storymine::ConfigError& e) {
    std::cerr << "storymine: " << e.what() << "\n";
    return storymine::kExitUsage;
  } catch (const storymine::NumericError& e) {
    std::cerr << "storymine: " << e.what() << "\n";
    return storymine::kExitNumeric;
  } catch (const storymine::DataError& e) {
    std::cerr << "storymine: " << e.what() << "\n";
    return storymine::kExitData;
  } catch (const storymine::IoError& e) {
    std::cerr << "storymine: " << e.what() << "\n";
    return storymine::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "storymine: internal error: " << e.what() << "\n";
    return 1;
  }
}
