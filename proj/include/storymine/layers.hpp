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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "storymine/rng.hpp"
#include "storymine/tensor.hpp"
#include "storymine/text.hpp"

namespace storymine {

namespace detail {
inline void init_uniform(Param& p, Rng& rng, double bound = 0.1) {
  for (double& v : p.value) v = rng.uniform(-bound, bound);
}
}  // namespace detail

// Trainable embedding of the window offset of a context word, one row per
// offset in [-l, l].
struct PositionEmbedding {
  PositionEmbedding() = default;
  PositionEmbedding(const std::string& prefix, int half_width, int dim,
                    Rng& rng)
      : half_width(half_width),
        dim(dim),
        table(prefix + ".pos", {2 * half_width + 1, dim}) {
    detail::init_uniform(table, rng);
  }

  int row(int offset) const {
    if (offset < -half_width || offset > half_width)
      throw ConfigError("position offset " + std::to_string(offset) +
                        " outside [-" + std::to_string(half_width) + ", " +
                        std::to_string(half_width) + "]");
    return offset + half_width;
  }

  void collect_params(std::vector<Param*>& out) { out.push_back(&table); }

  int half_width = 0;
  int dim = 0;
  Param table;
};

// A set of 1-d convolution filter banks, one bank per filter width, all
// applied to the same input sequence.
struct ConvFilterBank {
  ConvFilterBank() = default;
  ConvFilterBank(const std::string& prefix, std::vector<int> widths_in,
                 std::vector<int> counts_in, int input_dim, Rng& rng)
      : widths(std::move(widths_in)),
        counts(std::move(counts_in)),
        input_dim(input_dim) {
    if (widths.empty()) throw ConfigError(prefix + ": no filter widths");
    if (counts.size() != widths.size())
      throw ConfigError(prefix + ": " + std::to_string(counts.size()) +
                        " filter counts for " + std::to_string(widths.size()) +
                        " widths");
    for (size_t i = 0; i < widths.size(); ++i) {
      const int w = widths[i], c = counts[i];
      if (w < 1)
        throw ConfigError(prefix + ": filter width " + std::to_string(w) +
                          " below 1");
      if (c < 1)
        throw ConfigError(prefix + ": filter count " + std::to_string(c) +
                          " below 1 for width " + std::to_string(w));
      const std::string base = prefix + ".w" + std::to_string(w);
      filters.emplace_back(base + ".filters", Shape{c, w, input_dim});
      biases.emplace_back(base + ".bias", Shape{c});
      detail::init_uniform(filters.back(), rng);
    }
  }

  ConvFilterBank(const std::string& prefix, std::vector<int> widths_in,
                 int filters_per_width, int input_dim, Rng& rng)
      : ConvFilterBank(prefix, widths_in,
                       std::vector<int>(widths_in.size(), filters_per_width),
                       input_dim, rng) {}

  int total_filters() const {
    int total = 0;
    for (int c : counts) total += c;
    return total;
  }
  int max_width() const {
    int m = 0;
    for (int w : widths) m = std::max(m, w);
    return m;
  }

  // Raw convolution map of one width bank: {n,input_dim} -> {n-w+1, fpw}.
  Tensor conv_map(Tape& tape, const Tensor& seq, size_t width_index) {
    return conv1d(seq, tape.param(filters[width_index]),
                  tape.param(biases[width_index]));
  }

  // Applies every bank and max-pools each over time; the pooled features are
  // concatenated in bank order into one vector of total_filters() entries.
  Tensor encode_pooled(Tape& tape, const Tensor& seq) {
    std::vector<Tensor> pooled;
    pooled.reserve(widths.size());
    for (size_t i = 0; i < widths.size(); ++i)
      pooled.push_back(max_pool_time(conv_map(tape, seq, i)));
    return concat(std::span<const Tensor>(pooled.data(), pooled.size()));
  }

  void collect_params(std::vector<Param*>& out) {
    for (auto& f : filters) out.push_back(&f);
    for (auto& b : biases) out.push_back(&b);
  }

  std::vector<int> widths;
  std::vector<int> counts;
  int input_dim = 0;
  std::vector<Param> filters;
  std::vector<Param> biases;
};

// First-layer word encoder: every token's context window (word embedding
// concatenated with a position embedding per slot) runs through shared
// filter banks and max-pooling, yielding one feature vector per token. The
// same parameter set serves every window.
struct CnnWordEncoder {
  CnnWordEncoder() = default;
  CnnWordEncoder(const std::string& prefix, int half_width, int word_dim,
                 int pos_dim, std::vector<int> widths, std::vector<int> counts,
                 Rng& rng)
      : pos(prefix, half_width, pos_dim, rng),
        bank(prefix, std::move(widths), std::move(counts), word_dim + pos_dim,
             rng) {
    if (2 * half_width + 1 < bank.max_width())
      throw ConfigError(prefix + ": window of " +
                        std::to_string(2 * half_width + 1) +
                        " slots is shorter than the widest filter (" +
                        std::to_string(bank.max_width()) + ")");
  }

  CnnWordEncoder(const std::string& prefix, int half_width, int word_dim,
                 int pos_dim, std::vector<int> widths, int filters_per_width,
                 Rng& rng)
      : CnnWordEncoder(prefix, half_width, word_dim, pos_dim, widths,
                       std::vector<int>(widths.size(), filters_per_width),
                       rng) {}

  int output_dim() const { return bank.total_filters(); }

  // ctx windows -> {n, output_dim}; word_emb is the |V| x word_dim table.
  Tensor encode(Tape& tape, const ContextSequence& ctx, Param& word_emb) {
    if (ctx.half_width != pos.half_width)
      throw ConfigError("context windows built with half-width " +
                        std::to_string(ctx.half_width) +
                        " but position table covers " +
                        std::to_string(pos.half_width));
    std::vector<Tensor> hs;
    hs.reserve(ctx.windows.size());
    for (const ContextWindow& w : ctx.windows) {
      Tensor words = tape.gather_rows(word_emb, w.token_ids);
      std::vector<int> pos_rows;
      pos_rows.reserve(w.offsets.size());
      for (int off : w.offsets) pos_rows.push_back(pos.row(off));
      Tensor positions = tape.gather_rows(pos.table, pos_rows);
      Tensor x = hconcat(words, positions);
      hs.push_back(bank.encode_pooled(tape, x));
    }
    if (hs.empty()) throw ShapeError("cnn word encoder: empty story");
    return stack_rows(std::span<const Tensor>(hs.data(), hs.size()));
  }

  void collect_params(std::vector<Param*>& out) {
    pos.collect_params(out);
    bank.collect_params(out);
  }

  PositionEmbedding pos;
  ConvFilterBank bank;
};

// One direction of an LSTM. The four gates are computed by a single fused
// weight over [x_t ; h_{t-1}], sliced in the order input, forget, output,
// candidate. The forget-gate bias starts at 1.0.
struct LstmDirection {
  LstmDirection() = default;
  LstmDirection(const std::string& prefix, int input_dim, int hidden, Rng& rng)
      : input_dim(input_dim),
        hidden(hidden),
        w(prefix + ".w", {4 * hidden, input_dim + hidden}),
        b(prefix + ".b", {4 * hidden}) {
    detail::init_uniform(w, rng);
    for (int i = hidden; i < 2 * hidden; ++i) b.value[static_cast<size_t>(i)] = 1.0;
  }

  struct State {
    Tensor h;
    Tensor c;
  };

  State step(Tape& tape, const Tensor& x, const State& prev) {
    Tensor z = add(matmul(tape.param(w), concat(x, prev.h)), tape.param(b));
    Tensor i = sigmoid(slice(z, 0, hidden));
    Tensor f = sigmoid(slice(z, hidden, hidden));
    Tensor o = sigmoid(slice(z, 2 * hidden, hidden));
    Tensor g = tanh(slice(z, 3 * hidden, hidden));
    Tensor c = add(mul(f, prev.c), mul(i, g));
    Tensor h = mul(o, tanh(c));
    return State{h, c};
  }

  // Runs over the rows of x {n,input_dim} in the given order and returns the
  // hidden state at every position, indexed by position (not by visit order).
  std::vector<Tensor> run(Tape& tape, const Tensor& x, bool reverse) {
    const int n = x.dim(0);
    std::vector<Tensor> states(static_cast<size_t>(n));
    State s{tape.zeros({hidden}), tape.zeros({hidden})};
    for (int k = 0; k < n; ++k) {
      const int i = reverse ? n - 1 - k : k;
      s = step(tape, row(x, i), s);
      states[static_cast<size_t>(i)] = s.h;
    }
    return states;
  }

  void collect_params(std::vector<Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  int input_dim = 0;
  int hidden = 0;
  Param w;
  Param b;
};

// Bidirectional LSTM encoder. Per-token output is the concatenation of the
// two directions' states at that position; the document vector concatenates
// each direction's final state (forward at the last token, backward at the
// first).
struct BiLstmEncoder {
  BiLstmEncoder() = default;
  BiLstmEncoder(const std::string& prefix, int input_dim, int hidden, Rng& rng)
      : fwd(prefix + ".fwd", input_dim, hidden, rng),
        bwd(prefix + ".bwd", input_dim, hidden, rng) {}

  struct Result {
    Tensor per_token;  // {n, 2*hidden}
    Tensor doc;        // {2*hidden}
  };

  Result encode(Tape& tape, const Tensor& x) {
    if (x.rank() != 2 || x.dim(0) < 1)
      throw ShapeError("bilstm: input " + shape_str(x.shape()) +
                       " needs at least one row");
    const int n = x.dim(0);
    std::vector<Tensor> f = fwd.run(tape, x, false);
    std::vector<Tensor> b = bwd.run(tape, x, true);
    std::vector<Tensor> rows;
    rows.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      rows.push_back(concat(f[static_cast<size_t>(i)], b[static_cast<size_t>(i)]));
    Result r;
    r.per_token = stack_rows(std::span<const Tensor>(rows.data(), rows.size()));
    r.doc = concat(f[static_cast<size_t>(n - 1)], b[0]);
    return r;
  }

  int output_dim() const { return 2 * fwd.hidden; }

  void collect_params(std::vector<Param*>& out) {
    fwd.collect_params(out);
    bwd.collect_params(out);
  }

  LstmDirection fwd;
  LstmDirection bwd;
};

// Learned pooling over a feature-vector sequence: score each row through a
// small tanh layer against a context vector, normalize the scores to
// weights, and return the weighted sum. The weights come back too, both for
// inspection and for the supervised-attention loss.
struct AttentionPool {
  AttentionPool() = default;
  AttentionPool(const std::string& prefix, int feature_dim, int attn_dim,
                Rng& rng)
      : feature_dim(feature_dim),
        attn_dim(attn_dim),
        w(prefix + ".w", {attn_dim, feature_dim}),
        b(prefix + ".b", {attn_dim}),
        ctx(prefix + ".ctx", {attn_dim}) {
    detail::init_uniform(w, rng);
    detail::init_uniform(ctx, rng);
  }

  struct Result {
    Tensor v;      // {feature_dim}
    Tensor alpha;  // {q}, simplex point
  };

  Result attend(Tape& tape, const Tensor& c) {
    if (c.rank() != 2 || c.dim(0) < 1 || c.dim(1) != feature_dim)
      throw ShapeError("attention pool: input " + shape_str(c.shape()) +
                       " does not match feature dim " +
                       std::to_string(feature_dim));
    const int q = c.dim(0);
    Tensor wt = tape.param(w);
    Tensor bt = tape.param(b);
    std::vector<Tensor> us;
    us.reserve(static_cast<size_t>(q));
    for (int i = 0; i < q; ++i)
      us.push_back(tanh(add(matmul(wt, row(c, i)), bt)));
    Tensor u = stack_rows(std::span<const Tensor>(us.data(), us.size()));
    Tensor scores = matmul(u, tape.param(ctx));
    Result r;
    r.alpha = softmax(scores);
    r.v = weighted_sum_rows(c, r.alpha);
    return r;
  }

  void collect_params(std::vector<Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
    out.push_back(&ctx);
  }

  int feature_dim = 0;
  int attn_dim = 0;
  Param w;
  Param b;
  Param ctx;
};

// Reference attention weights from binary per-token element labels: an
// all-ones window of width w slides over e, and the sums are softmax
// normalized. The result is a constant target of length n-w+1.
inline std::vector<double> supervised_target(const std::vector<int>& e, int w) {
  const int n = static_cast<int>(e.size());
  if (w < 1)
    throw ConfigError("supervised target: window width " + std::to_string(w) +
                      " below 1");
  if (n < w)
    throw ShapeError("supervised target: " + std::to_string(n) +
                     " labels shorter than window " + std::to_string(w));
  for (int v : e)
    if (v != 0 && v != 1)
      throw DataError("supervised target: label " + std::to_string(v) +
                      " is not binary");
  std::vector<double> raw(static_cast<size_t>(n - w + 1), 0.0);
  for (int t = 0; t + w <= n; ++t) {
    int s = 0;
    for (int j = 0; j < w; ++j) s += e[static_cast<size_t>(t + j)];
    raw[static_cast<size_t>(t)] = static_cast<double>(s);
  }
  const double mx = *std::max_element(raw.begin(), raw.end());
  double z = 0.0;
  for (double& v : raw) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : raw) v /= z;
  return raw;
}

// Sum of squared differences between learned weights and a constant target.
// Gradients flow into alpha only.
inline Tensor attention_loss(const Tensor& alpha,
                             const std::vector<double>& target) {
  if (alpha.rank() != 1 ||
      alpha.size() != static_cast<int>(target.size()))
    throw ShapeError("attention loss: weights " + shape_str(alpha.shape()) +
                     " vs target of length " + std::to_string(target.size()));
  Tape& tape = *alpha.node()->tape;
  Tensor t = tape.constant({alpha.size()}, target);
  return sum_of_squares(sub(alpha, t));
}

}  // namespace storymine
