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

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "storymine/common.hpp"

namespace storymine {

// ---------------------------------------------------------------------------
// Label space
// ---------------------------------------------------------------------------

// Per-token element tags. `none` marks tokens outside every annotated span.
enum ElementTag : int {
  kTagHarasser = 0,
  kTagTime = 1,
  kTagLocation = 2,
  kTagTrigger = 3,
  kTagNone = 4,
};
inline constexpr int kNumElementTags = 5;
inline constexpr const char* kElementTagNames[kNumElementTags] = {
    "harasser", "time", "location", "trigger", "none"};

// Categorical dimensions, each with class 0 = unspecified.
inline constexpr int kNumDims = 5;
inline constexpr const char* kDimNames[kNumDims] = {
    "age", "single_multiple", "harasser_type", "location_type", "time_of_day"};
inline constexpr int kDimClassCounts[kNumDims] = {3, 3, 10, 14, 3};

// Binary harassment-form flags.
inline constexpr int kNumForms = 3;
inline constexpr const char* kFormNames[kNumForms] = {"commenting", "ogling",
                                                      "groping"};

enum class Split { train, dev, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw DataError("unknown split name '" + s + "'");
}

struct Story {
  std::string id;
  std::string text;                 // raw narrative
  std::vector<std::string> tokens;  // preprocessed + tokenized
  std::vector<int> element_tags;    // per token, ElementTag
  std::array<int, kNumDims> dims;   // class index per dimension, -1 = absent
  std::array<int, kNumForms> forms;  // 0/1 flag, -1 = absent
  Split split = Split::train;
};

// ---------------------------------------------------------------------------
// Preprocessing and tokenization
// ---------------------------------------------------------------------------

namespace detail {
inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}
inline bool is_alnum_byte(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}
inline bool is_kept_punct(char c) { return c == '.' || c == '!' || c == '?'; }
}  // namespace detail

// Cleaned text plus, for every output character, the index of the raw
// character it came from. Spaces point at the first byte of the whitespace
// run they replace.
struct CleanText {
  std::string text;
  std::vector<int> origin;
};

// Lowercases, removes every character that is not alphanumeric, whitespace,
// '.', '!', or '?', and collapses whitespace runs to single spaces.
// Non-ASCII bytes fall under "not alphanumeric" and are removed.
inline CleanText preprocess_with_map(const std::string& raw) {
  CleanText out;
  out.text.reserve(raw.size());
  out.origin.reserve(raw.size());
  bool pending_space = false;
  int pending_at = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (detail::is_space_byte(c)) {
      if (!out.text.empty() && !pending_space) {
        pending_space = true;
        pending_at = static_cast<int>(i);
      }
      continue;
    }
    char kept = 0;
    if (detail::is_alnum_byte(c))
      kept = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    else if (detail::is_kept_punct(c))
      kept = c;
    if (kept == 0) continue;  // removed character
    if (pending_space) {
      out.text.push_back(' ');
      out.origin.push_back(pending_at);
      pending_space = false;
    }
    out.text.push_back(kept);
    out.origin.push_back(static_cast<int>(i));
  }
  return out;
}

inline std::string preprocess(const std::string& raw) {
  return preprocess_with_map(raw).text;
}

// Token with its character range in the raw (pre-preprocessing) text.
struct TokenSpan {
  std::string text;
  int raw_begin = 0;
  int raw_end = 0;  // exclusive
};

// Splits cleaned text on whitespace; '.', '!', '?' become standalone tokens.
inline std::vector<TokenSpan> tokenize_with_spans(const CleanText& clean) {
  std::vector<TokenSpan> out;
  TokenSpan cur;
  auto flush = [&]() {
    if (!cur.text.empty()) {
      out.push_back(cur);
      cur = TokenSpan{};
    }
  };
  for (size_t i = 0; i < clean.text.size(); ++i) {
    const char c = clean.text[i];
    const int org = clean.origin[i];
    if (c == ' ') {
      flush();
    } else if (detail::is_kept_punct(c)) {
      flush();
      out.push_back(TokenSpan{std::string(1, c), org, org + 1});
    } else {
      if (cur.text.empty()) cur.raw_begin = org;
      cur.text.push_back(c);
      cur.raw_end = org + 1;
    }
  }
  flush();
  return out;
}

inline std::vector<std::string> tokenize(const std::string& preprocessed) {
  CleanText clean;
  clean.text = preprocessed;
  clean.origin.assign(preprocessed.size(), 0);
  for (size_t i = 0; i < preprocessed.size(); ++i)
    clean.origin[i] = static_cast<int>(i);
  std::vector<std::string> out;
  for (auto& t : tokenize_with_spans(clean)) out.push_back(std::move(t.text));
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary and word vectors
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() : tokens_{"<pad>", "<unk>"} {
    index_[tokens_[0]] = kPad;
    index_[tokens_[1]] = kUnk;
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_[token] = id;
    return id;
  }

  // Unknown tokens map to UNK.
  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const {
    return index_.count(token) != 0;
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  const std::string& token(int id) const {
    if (id < 0 || id >= size())
      throw DataError("vocabulary index " + std::to_string(id) +
                      " outside [0, " + std::to_string(size()) + ")");
    return tokens_[static_cast<size_t>(id)];
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

inline std::vector<int> token_ids(const std::vector<std::string>& tokens,
                                  const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.lookup(t));
  return ids;
}

struct WordVectors {
  Vocabulary vocab;
  int dim = 0;
  std::vector<double> table;  // vocab.size() x dim, row-major
  std::vector<std::string> warnings;
};

// Reads a text vector file: header "<count> <dim>", then one token and dim
// reals per line. Row 0 (PAD) is zeros; row 1 (UNK) is the mean of all
// loaded vectors. expected_dim 0 accepts whatever the header declares.
inline WordVectors load_word_vectors(const std::string& path,
                                     int expected_dim = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-vector file '" + path + "'");
  std::string line;
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line))
    throw DataError(path + ":1: missing count/dim header");
  strip_cr(line);
  long long count = -1, dim = -1;
  {
    std::istringstream hs(line);
    std::string rest;
    if (!(hs >> count >> dim) || count < 0 || dim <= 0 || (hs >> rest))
      throw DataError(path + ":1: malformed header '" + line + "'");
  }
  if (expected_dim > 0 && dim != expected_dim)
    throw ConfigError(path + ": vector dimension " + std::to_string(dim) +
                      " does not match configured " +
                      std::to_string(expected_dim));

  WordVectors wv;
  wv.dim = static_cast<int>(dim);
  wv.table.assign(2 * static_cast<size_t>(dim), 0.0);  // PAD + UNK
  std::vector<double> mean(static_cast<size_t>(dim), 0.0);
  long long loaded = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vec(static_cast<size_t>(dim));
    for (long long j = 0; j < dim; ++j) {
      if (!(ls >> vec[static_cast<size_t>(j)]))
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(dim) +
                        " values after token '" + token + "'");
    }
    std::string extra;
    if (ls >> extra)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": trailing content '" + extra + "' after " +
                      std::to_string(dim) + " values");
    if (wv.vocab.contains(token)) {
      wv.warnings.push_back(path + ":" + std::to_string(lineno) +
                            ": duplicate token '" + token +
                            "' ignored (first occurrence kept)");
      continue;
    }
    wv.vocab.add(token);
    wv.table.insert(wv.table.end(), vec.begin(), vec.end());
    for (long long j = 0; j < dim; ++j)
      mean[static_cast<size_t>(j)] += vec[static_cast<size_t>(j)];
    ++loaded;
  }
  if (loaded != count)
    wv.warnings.push_back(path + ": header declared " + std::to_string(count) +
                          " vectors but " + std::to_string(loaded) +
                          " were read");
  if (loaded > 0) {
    for (long long j = 0; j < dim; ++j)
      wv.table[static_cast<size_t>(Vocabulary::kUnk) * dim + j] =
          mean[static_cast<size_t>(j)] / static_cast<double>(loaded);
  } else {
    wv.warnings.push_back(path + ": no vectors loaded; table holds only "
                          "PAD and UNK rows");
  }
  return wv;
}

// ---------------------------------------------------------------------------
// Context windows
// ---------------------------------------------------------------------------

struct ContextWindow {
  std::vector<int> token_ids;  // 2l+1 entries, PAD outside the story
  std::vector<int> offsets;    // -l..l
};

struct ContextSequence {
  int half_width = 0;
  std::vector<ContextWindow> windows;  // one per story token
};

inline ContextSequence build_context_sequences(const std::vector<int>& ids,
                                               int l) {
  if (l < 1)
    throw ConfigError("context half-width must be >= 1, got " +
                      std::to_string(l));
  ContextSequence seq;
  seq.half_width = l;
  const int n = static_cast<int>(ids.size());
  seq.windows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ContextWindow w;
    w.token_ids.reserve(2 * static_cast<size_t>(l) + 1);
    w.offsets.reserve(2 * static_cast<size_t>(l) + 1);
    for (int off = -l; off <= l; ++off) {
      const int j = i + off;
      w.token_ids.push_back(j >= 0 && j < n ? ids[static_cast<size_t>(j)]
                                            : Vocabulary::kPad);
      w.offsets.push_back(off);
    }
    seq.windows.push_back(std::move(w));
  }
  return seq;
}

inline ContextSequence build_context_sequences(const Story& story,
                                               const Vocabulary& vocab,
                                               int l) {
  return build_context_sequences(token_ids(story.tokens, vocab), l);
}

// ---------------------------------------------------------------------------
// Corpus loading
// ---------------------------------------------------------------------------

struct CorpusOptions {
  int max_tokens = 200;  // longer stories truncated with a warning
};

struct Corpus {
  std::vector<Story> stories;
  std::array<int, 3> split_counts = {0, 0, 0};  // train, dev, test
  std::vector<std::string> warnings;
};

inline std::vector<const Story*> stories_in_split(const Corpus& corpus,
                                                  Split split) {
  std::vector<const Story*> out;
  for (const Story& s : corpus.stories)
    if (s.split == split) out.push_back(&s);
  return out;
}

namespace detail {

inline int element_tag_from_name(const std::string& name) {
  for (int t = 0; t < kNumElementTags; ++t)
    if (name == kElementTagNames[t]) return t;
  return -1;
}

struct RawSpan {
  int start = 0;
  int end = 0;
  int tag = kTagNone;
};

}  // namespace detail

// Parses one corpus record (one JSON object). Exposed separately so tests
// can exercise single stories.
inline Story parse_story_json(const std::string& line, int lineno,
                              const std::string& path,
                              const CorpusOptions& options,
                              std::vector<std::string>* warnings) {
  const std::string at = path + ":" + std::to_string(lineno);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(at + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(at + ": record is not an object");
  Story story;
  try {
    story.id = j.at("id").get<std::string>();
    story.text = j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(at + ": missing id/text: " + e.what());
  }

  std::vector<detail::RawSpan> spans;
  if (j.contains("spans")) {
    if (!j["spans"].is_array())
      throw DataError(at + ": 'spans' is not an array (story " + story.id +
                      ")");
    for (const auto& js : j["spans"]) {
      detail::RawSpan s;
      try {
        s.start = js.at("start").get<int>();
        s.end = js.at("end").get<int>();
        const std::string type = js.at("type").get<std::string>();
        s.tag = detail::element_tag_from_name(type);
        if (s.tag < 0 || s.tag == kTagNone)
          throw DataError(at + ": unknown span type '" + type + "' (story " +
                          story.id + ")");
      } catch (const nlohmann::json::exception& e) {
        throw DataError(at + ": malformed span (story " + story.id +
                        "): " + e.what());
      }
      if (s.start < 0 || s.end <= s.start ||
          s.end > static_cast<int>(story.text.size()))
        throw DataError(at + ": span [" + std::to_string(s.start) + ", " +
                        std::to_string(s.end) + ") outside text of story " +
                        story.id);
      spans.push_back(s);
    }
  }

  story.dims.fill(-1);
  if (j.contains("dims")) {
    for (int d = 0; d < kNumDims; ++d) {
      if (!j["dims"].contains(kDimNames[d])) continue;
      int v;
      try {
        v = j["dims"][kDimNames[d]].get<int>();
      } catch (const nlohmann::json::exception&) {
        throw DataError(at + ": dimension '" + std::string(kDimNames[d]) +
                        "' is not an integer (story " + story.id + ")");
      }
      if (v < 0 || v >= kDimClassCounts[d])
        throw DataError(at + ": dimension '" + std::string(kDimNames[d]) +
                        "' value " + std::to_string(v) + " outside [0, " +
                        std::to_string(kDimClassCounts[d]) + ") (story " +
                        story.id + ")");
      story.dims[static_cast<size_t>(d)] = v;
    }
  }
  story.forms.fill(-1);
  if (j.contains("forms")) {
    for (int f = 0; f < kNumForms; ++f) {
      if (!j["forms"].contains(kFormNames[f])) continue;
      int v;
      try {
        v = j["forms"][kFormNames[f]].get<int>();
      } catch (const nlohmann::json::exception&) {
        throw DataError(at + ": form '" + std::string(kFormNames[f]) +
                        "' is not an integer (story " + story.id + ")");
      }
      if (v != 0 && v != 1)
        throw DataError(at + ": form '" + std::string(kFormNames[f]) +
                        "' value " + std::to_string(v) + " is not 0/1 (story " +
                        story.id + ")");
      story.forms[static_cast<size_t>(f)] = v;
    }
  }

  // Tokenize and project spans onto token tags by character overlap.
  CleanText clean = preprocess_with_map(story.text);
  std::vector<TokenSpan> toks = tokenize_with_spans(clean);
  if (toks.empty())
    throw DataError(at + ": story " + story.id +
                    " has no tokens after preprocessing");
  story.tokens.reserve(toks.size());
  story.element_tags.assign(toks.size(), kTagNone);
  for (auto& t : toks) story.tokens.push_back(t.text);
  std::vector<int> hits(spans.size(), 0);
  for (size_t i = 0; i < toks.size(); ++i) {
    for (size_t s = 0; s < spans.size(); ++s) {
      if (toks[i].raw_begin < spans[s].end && spans[s].start < toks[i].raw_end) {
        const int tag = spans[s].tag;
        int& cur = story.element_tags[i];
        if (cur != kTagNone && cur != tag)
          throw DataError(at + ": annotation conflict in story " + story.id +
                          ": token '" + toks[i].text + "' overlaps spans of '" +
                          kElementTagNames[cur] + "' and '" +
                          kElementTagNames[tag] + "'");
        cur = tag;
        hits[s]++;
      }
    }
  }
  for (size_t s = 0; s < spans.size(); ++s) {
    if (hits[s] == 0)
      throw DataError(at + ": span [" + std::to_string(spans[s].start) + ", " +
                      std::to_string(spans[s].end) + ") of story " + story.id +
                      " covers no token");
  }

  if (options.max_tokens > 0 &&
      static_cast<int>(story.tokens.size()) > options.max_tokens) {
    if (warnings)
      warnings->push_back(at + ": story " + story.id + " truncated from " +
                          std::to_string(story.tokens.size()) + " to " +
                          std::to_string(options.max_tokens) + " tokens");
    story.tokens.resize(static_cast<size_t>(options.max_tokens));
    story.element_tags.resize(static_cast<size_t>(options.max_tokens));
  }
  return story;
}

inline Corpus load_corpus(const std::string& corpus_path,
                          const std::string& splits_path,
                          const CorpusOptions& options = {}) {
  std::ifstream in(corpus_path);
  if (!in) throw IoError("cannot open corpus file '" + corpus_path + "'");
  Corpus corpus;
  std::unordered_map<std::string, size_t> by_id;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Story story =
        parse_story_json(line, lineno, corpus_path, options, &corpus.warnings);
    if (by_id.count(story.id))
      throw DataError(corpus_path + ":" + std::to_string(lineno) +
                      ": duplicate story id " + story.id);
    by_id[story.id] = corpus.stories.size();
    corpus.stories.push_back(std::move(story));
  }

  std::ifstream sp(splits_path);
  if (!sp) throw IoError("cannot open splits file '" + splits_path + "'");
  std::vector<bool> assigned(corpus.stories.size(), false);
  lineno = 0;
  while (std::getline(sp, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, name, extra;
    if (!(ls >> id >> name) || (ls >> extra))
      throw DataError(splits_path + ":" + std::to_string(lineno) +
                      ": expected '<id> <train|dev|test>', got '" + line + "'");
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      corpus.warnings.push_back(splits_path + ":" + std::to_string(lineno) +
                                ": split entry for unknown story id " + id);
      continue;
    }
    Split s;
    try {
      s = parse_split(name);
    } catch (const DataError&) {
      throw DataError(splits_path + ":" + std::to_string(lineno) +
                      ": unknown split '" + name + "' for story " + id);
    }
    corpus.stories[it->second].split = s;
    assigned[it->second] = true;
  }
  for (size_t i = 0; i < corpus.stories.size(); ++i) {
    if (!assigned[i])
      throw DataError(splits_path + ": story " + corpus.stories[i].id +
                      " has no split assignment");
    corpus.split_counts[static_cast<size_t>(corpus.stories[i].split)]++;
  }
  return corpus;
}

// Adds every token of every story to the vocabulary (used when training
// without pre-trained vectors, and by tests).
inline void grow_vocabulary(Vocabulary& vocab,
                            const std::vector<Story>& stories) {
  for (const Story& s : stories)
    for (const std::string& t : s.tokens) vocab.add(t);
}

}  // namespace storymine
