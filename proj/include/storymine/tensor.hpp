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
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "storymine/common.hpp"

namespace storymine {

// A persistent trainable parameter. Parameters live outside any tape; a
// forward pass loads them onto a tape with Tape::param or Tape::gather_rows,
// and backward() accumulates into `grad`.
class Param {
 public:
  Param() = default;
  Param(std::string name, Shape shape, bool trainable = true)
      : name(std::move(name)),
        shape(std::move(shape)),
        trainable(trainable),
        value(static_cast<size_t>(numel(this->shape)), 0.0),
        grad(static_cast<size_t>(numel(this->shape)), 0.0) {}

  int size() const { return static_cast<int>(value.size()); }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  std::string name;
  Shape shape;
  bool trainable = true;
  std::vector<double> value;
  std::vector<double> grad;
};

class Tape;

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily by Tape::backward
  bool requires_grad = false;
  std::function<void()> backprop;  // adds into parents' grads / Param grads
  Tape* tape = nullptr;
};

// Handle to a node on a tape. Cheap to copy; the tape owns the storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorNode* node) : node_(node) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  const std::vector<double>& value() const { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  int size() const { return static_cast<int>(node_->value.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }

  double item() const {
    if (size() != 1)
      throw ShapeError("item: tensor " + shape_str(shape()) + " is not scalar");
    return node_->value[0];
  }

  TensorNode* node() const { return node_; }

 private:
  TensorNode* node_ = nullptr;
};

// Records one forward pass. Nodes are stored in creation order, which is a
// topological order by construction; one reverse sweep computes every
// gradient. A tape is single-threaded and single-use: run the forward ops,
// call backward once, then discard it. Parameters persist across tapes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  size_t node_count() const { return nodes_.size(); }

  Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false) {
    check_numel(shape, data.size(), "leaf");
    TensorNode* n = alloc(std::move(shape));
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  Tensor constant(Shape shape, std::vector<double> data) {
    return leaf(std::move(shape), std::move(data), false);
  }

  Tensor scalar(double v) { return constant({1}, {v}); }

  Tensor zeros(Shape shape) {
    std::vector<double> data(static_cast<size_t>(numel(shape)), 0.0);
    return constant(std::move(shape), std::move(data));
  }

  // Loads a parameter onto the tape. backward() adds the node gradient into
  // p.grad when the parameter is trainable.
  Tensor param(Param& p) {
    TensorNode* n = alloc(p.shape);
    n->value = p.value;
    n->requires_grad = p.trainable;
    if (p.trainable) {
      Param* pp = &p;
      n->backprop = [n, pp]() {
        for (size_t i = 0; i < n->grad.size(); ++i) pp->grad[i] += n->grad[i];
      };
    }
    return Tensor(n);
  }

  // Selects rows of a {R,C} parameter table (an embedding lookup). Row
  // indices may repeat; backward scatter-adds into the table gradient.
  Tensor gather_rows(Param& table, const std::vector<int>& rows) {
    if (table.shape.size() != 2)
      throw ShapeError("gather_rows: table " + shape_str(table.shape) +
                       " is not a matrix");
    const int r = table.shape[0], c = table.shape[1];
    const int n = static_cast<int>(rows.size());
    TensorNode* node = alloc({n, c});
    node->value.resize(static_cast<size_t>(n) * c);
    for (int i = 0; i < n; ++i) {
      if (rows[i] < 0 || rows[i] >= r)
        throw DataError("gather_rows: row " + std::to_string(rows[i]) +
                        " outside table " + shape_str(table.shape));
      std::copy_n(table.value.begin() + static_cast<size_t>(rows[i]) * c, c,
                  node->value.begin() + static_cast<size_t>(i) * c);
    }
    node->requires_grad = table.trainable;
    if (table.trainable) {
      Param* tp = &table;
      std::vector<int> idx = rows;
      node->backprop = [node, tp, idx, c]() {
        for (size_t i = 0; i < idx.size(); ++i)
          for (int j = 0; j < c; ++j)
            tp->grad[static_cast<size_t>(idx[i]) * c + j] +=
                node->grad[i * c + j];
      };
    }
    return Tensor(node);
  }

  // Reverse-mode sweep from a scalar loss. Populates grad on every
  // requires_grad node and accumulates into every trainable Param that was
  // loaded onto this tape. Single use.
  void backward(const Tensor& loss) {
    if (!loss.defined() || loss.node()->tape != this)
      throw Error("backward: loss does not live on this tape");
    if (loss.size() != 1)
      throw ShapeError("backward: loss " + shape_str(loss.shape()) +
                       " is not scalar");
    if (backward_done_)
      throw Error("backward: tape already swept");
    backward_done_ = true;
    for (auto& n : nodes_) {
      if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
    }
    loss.node()->grad.assign(1, 1.0);
    bool reached_loss = false;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (!reached_loss) {
        if (&*it != loss.node()) continue;  // created after the loss
        reached_loss = true;
      }
      if (it->requires_grad && it->backprop) it->backprop();
    }
  }

  TensorNode* alloc(Shape shape) {
    nodes_.emplace_back();
    TensorNode* n = &nodes_.back();
    n->shape = std::move(shape);
    n->tape = this;
    return n;
  }

 private:
  static void check_numel(const Shape& shape, size_t got, const char* who) {
    if (static_cast<size_t>(numel(shape)) != got)
      throw ShapeError(std::string(who) + ": " + std::to_string(got) +
                       " values for shape " + shape_str(shape));
  }

  std::deque<TensorNode> nodes_;  // stable addresses
  bool backward_done_ = false;
};

namespace detail {

inline Tape* tape_of(std::initializer_list<Tensor> ts) {
  Tape* tape = nullptr;
  for (const Tensor& t : ts) {
    if (!t.defined()) throw Error("op: undefined tensor operand");
    if (tape == nullptr) tape = t.node()->tape;
    if (t.node()->tape != tape) throw Error("op: operands on different tapes");
  }
  return tape;
}

inline bool any_grad(std::initializer_list<Tensor> ts) {
  for (const Tensor& t : ts)
    if (t.requires_grad()) return true;
  return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  Tape* tape = detail::tape_of({a, b});
  if (a.shape() != b.shape())
    throw ShapeError("add: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.value()[i] + b.value()[i];
  n->requires_grad = detail::any_grad({a, b});
  if (n->requires_grad) {
    TensorNode *pa = a.node(), *pb = b.node();
    n->backprop = [n, pa, pb]() {
      if (pa->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += n->grad[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i) pb->grad[i] += n->grad[i];
    };
  }
  return Tensor(n);
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  Tape* tape = detail::tape_of({a, b});
  if (a.shape() != b.shape())
    throw ShapeError("sub: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.value()[i] - b.value()[i];
  n->requires_grad = detail::any_grad({a, b});
  if (n->requires_grad) {
    TensorNode *pa = a.node(), *pb = b.node();
    n->backprop = [n, pa, pb]() {
      if (pa->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += n->grad[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i) pb->grad[i] -= n->grad[i];
    };
  }
  return Tensor(n);
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  Tape* tape = detail::tape_of({a, b});
  if (a.shape() != b.shape())
    throw ShapeError("mul: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.value()[i] * b.value()[i];
  n->requires_grad = detail::any_grad({a, b});
  if (n->requires_grad) {
    TensorNode *pa = a.node(), *pb = b.node();
    n->backprop = [n, pa, pb]() {
      if (pa->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i)
          pa->grad[i] += n->grad[i] * pb->value[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i)
          pb->grad[i] += n->grad[i] * pa->value[i];
    };
  }
  return Tensor(n);
}

inline Tensor scale(const Tensor& a, double s) {
  Tape* tape = detail::tape_of({a});
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i) n->value[i] = s * a.value()[i];
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa, s]() {
      for (size_t i = 0; i < n->grad.size(); ++i)
        pa->grad[i] += s * n->grad[i];
    };
  }
  return Tensor(n);
}

inline Tensor tanh(const Tensor& a) {
  Tape* tape = detail::tape_of({a});
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = std::tanh(a.value()[i]);
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa]() {
      for (size_t i = 0; i < n->grad.size(); ++i) {
        const double y = n->value[i];
        pa->grad[i] += n->grad[i] * (1.0 - y * y);
      }
    };
  }
  return Tensor(n);
}

inline Tensor sigmoid(const Tensor& a) {
  Tape* tape = detail::tape_of({a});
  TensorNode* n = tape->alloc(a.shape());
  n->value.resize(a.value().size());
  for (size_t i = 0; i < n->value.size(); ++i) {
    const double x = a.value()[i];
    // Evaluate through exp of a negative argument only.
    n->value[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                           : std::exp(x) / (1.0 + std::exp(x));
  }
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa]() {
      for (size_t i = 0; i < n->grad.size(); ++i) {
        const double y = n->value[i];
        pa->grad[i] += n->grad[i] * y * (1.0 - y);
      }
    };
  }
  return Tensor(n);
}

inline Tensor sum(const Tensor& a) {
  Tape* tape = detail::tape_of({a});
  TensorNode* n = tape->alloc({1});
  double s = 0.0;
  for (double v : a.value()) s += v;
  n->value = {s};
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa]() {
      for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += n->grad[0];
    };
  }
  return Tensor(n);
}

inline Tensor sum_of_squares(const Tensor& a) {
  Tape* tape = detail::tape_of({a});
  TensorNode* n = tape->alloc({1});
  double s = 0.0;
  for (double v : a.value()) s += v * v;
  n->value = {s};
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa]() {
      for (size_t i = 0; i < pa->grad.size(); ++i)
        pa->grad[i] += 2.0 * pa->value[i] * n->grad[0];
    };
  }
  return Tensor(n);
}

// Multiplies by a precomputed inverted-dropout mask (see Rng::dropout_mask).
// The mask is a constant; at eval time callers simply skip the op.
inline Tensor dropout(const Tensor& a, const Tensor& mask) {
  if (a.shape() != mask.shape())
    throw ShapeError("dropout: mask " + shape_str(mask.shape()) +
                     " does not match input " + shape_str(a.shape()));
  return mul(a, mask);
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

inline Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::initializer_list<Tensor> dummy = {parts[0]};
  Tape* tape = detail::tape_of(dummy);
  int total = 0;
  bool grad = false;
  for (const Tensor& t : parts) {
    if (t.node()->tape != tape) throw Error("concat: operands on different tapes");
    if (t.rank() != 1)
      throw ShapeError("concat: operand " + shape_str(t.shape()) +
                       " is not a vector");
    total += t.size();
    grad = grad || t.requires_grad();
  }
  TensorNode* n = tape->alloc({total});
  n->value.reserve(static_cast<size_t>(total));
  for (const Tensor& t : parts)
    n->value.insert(n->value.end(), t.value().begin(), t.value().end());
  n->requires_grad = grad;
  if (grad) {
    std::vector<TensorNode*> ps;
    ps.reserve(parts.size());
    for (const Tensor& t : parts) ps.push_back(t.node());
    n->backprop = [n, ps]() {
      size_t off = 0;
      for (TensorNode* p : ps) {
        if (p->requires_grad)
          for (size_t i = 0; i < p->value.size(); ++i)
            p->grad[i] += n->grad[off + i];
        off += p->value.size();
      }
    };
  }
  return Tensor(n);
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat(std::span<const Tensor>(parts, 2));
}

inline Tensor slice(const Tensor& a, int begin, int len) {
  Tape* tape = detail::tape_of({a});
  if (a.rank() != 1)
    throw ShapeError("slice: " + shape_str(a.shape()) + " is not a vector");
  if (begin < 0 || len < 0 || begin + len > a.size())
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + len) + ") outside " +
                     shape_str(a.shape()));
  TensorNode* n = tape->alloc({len});
  n->value.assign(a.value().begin() + begin, a.value().begin() + begin + len);
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa, begin]() {
      for (size_t i = 0; i < n->grad.size(); ++i)
        pa->grad[static_cast<size_t>(begin) + i] += n->grad[i];
    };
  }
  return Tensor(n);
}

inline Tensor row(const Tensor& a, int r) {
  Tape* tape = detail::tape_of({a});
  if (a.rank() != 2)
    throw ShapeError("row: " + shape_str(a.shape()) + " is not a matrix");
  const int rows = a.dim(0), cols = a.dim(1);
  if (r < 0 || r >= rows)
    throw ShapeError("row: index " + std::to_string(r) + " outside " +
                     shape_str(a.shape()));
  TensorNode* n = tape->alloc({cols});
  n->value.assign(a.value().begin() + static_cast<size_t>(r) * cols,
                  a.value().begin() + static_cast<size_t>(r + 1) * cols);
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa, r, cols]() {
      for (int j = 0; j < cols; ++j)
        pa->grad[static_cast<size_t>(r) * cols + j] += n->grad[j];
    };
  }
  return Tensor(n);
}

inline Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  std::initializer_list<Tensor> dummy = {rows[0]};
  Tape* tape = detail::tape_of(dummy);
  const int cols = rows[0].size();
  bool grad = false;
  for (const Tensor& t : rows) {
    if (t.node()->tape != tape)
      throw Error("stack_rows: operands on different tapes");
    if (t.rank() != 1 || t.size() != cols)
      throw ShapeError("stack_rows: row " + shape_str(t.shape()) +
                       " does not match width " + std::to_string(cols));
    grad = grad || t.requires_grad();
  }
  const int n_rows = static_cast<int>(rows.size());
  TensorNode* n = tape->alloc({n_rows, cols});
  n->value.reserve(static_cast<size_t>(n_rows) * cols);
  for (const Tensor& t : rows)
    n->value.insert(n->value.end(), t.value().begin(), t.value().end());
  n->requires_grad = grad;
  if (grad) {
    std::vector<TensorNode*> ps;
    for (const Tensor& t : rows) ps.push_back(t.node());
    n->backprop = [n, ps, cols]() {
      for (size_t r = 0; r < ps.size(); ++r) {
        if (!ps[r]->requires_grad) continue;
        for (int j = 0; j < cols; ++j)
          ps[r]->grad[j] += n->grad[r * static_cast<size_t>(cols) + j];
      }
    };
  }
  return Tensor(n);
}

inline Tensor hconcat(const Tensor& a, const Tensor& b) {
  Tape* tape = detail::tape_of({a, b});
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError("hconcat: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " do not align");
  const int rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  TensorNode* n = tape->alloc({rows, ca + cb});
  n->value.resize(static_cast<size_t>(rows) * (ca + cb));
  for (int r = 0; r < rows; ++r) {
    std::copy_n(a.value().begin() + static_cast<size_t>(r) * ca, ca,
                n->value.begin() + static_cast<size_t>(r) * (ca + cb));
    std::copy_n(b.value().begin() + static_cast<size_t>(r) * cb, cb,
                n->value.begin() + static_cast<size_t>(r) * (ca + cb) + ca);
  }
  n->requires_grad = detail::any_grad({a, b});
  if (n->requires_grad) {
    TensorNode *pa = a.node(), *pb = b.node();
    n->backprop = [n, pa, pb, rows, ca, cb]() {
      for (int r = 0; r < rows; ++r) {
        if (pa->requires_grad)
          for (int j = 0; j < ca; ++j)
            pa->grad[static_cast<size_t>(r) * ca + j] +=
                n->grad[static_cast<size_t>(r) * (ca + cb) + j];
        if (pb->requires_grad)
          for (int j = 0; j < cb; ++j)
            pb->grad[static_cast<size_t>(r) * cb + j] +=
                n->grad[static_cast<size_t>(r) * (ca + cb) + ca + j];
      }
    };
  }
  return Tensor(n);
}

inline Tensor slice_rows(const Tensor& a, int begin, int count) {
  Tape* tape = detail::tape_of({a});
  if (a.rank() != 2)
    throw ShapeError("slice_rows: " + shape_str(a.shape()) + " is not a matrix");
  if (begin < 0 || count < 0 || begin + count > a.dim(0))
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     shape_str(a.shape()));
  const int cols = a.dim(1);
  TensorNode* n = tape->alloc({count, cols});
  n->value.assign(a.value().begin() + static_cast<size_t>(begin) * cols,
                  a.value().begin() + static_cast<size_t>(begin + count) * cols);
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa, begin, cols]() {
      for (size_t i = 0; i < n->grad.size(); ++i)
        pa->grad[static_cast<size_t>(begin) * cols + i] += n->grad[i];
    };
  }
  return Tensor(n);
}

inline Tensor pad_rows_end(const Tensor& a, int extra) {
  Tape* tape = detail::tape_of({a});
  if (a.rank() != 2)
    throw ShapeError("pad_rows_end: " + shape_str(a.shape()) +
                     " is not a matrix");
  if (extra < 0) throw ShapeError("pad_rows_end: negative padding");
  const int rows = a.dim(0), cols = a.dim(1);
  TensorNode* n = tape->alloc({rows + extra, cols});
  n->value.assign(static_cast<size_t>(rows + extra) * cols, 0.0);
  std::copy(a.value().begin(), a.value().end(), n->value.begin());
  n->requires_grad = a.requires_grad();
  if (n->requires_grad) {
    TensorNode* pa = a.node();
    n->backprop = [n, pa]() {
      for (size_t i = 0; i < pa->value.size(); ++i) pa->grad[i] += n->grad[i];
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

// {m,k} x {k,n} -> {m,n}, or {m,k} x {k} -> {m}.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape* tape = detail::tape_of({a, b});
  if (a.rank() != 2)
    throw ShapeError("matmul: left operand " + shape_str(a.shape()) +
                     " is not a matrix");
  const int m = a.dim(0), k = a.dim(1);
  const bool vec = b.rank() == 1;
  const int kb = vec ? b.dim(0) : (b.rank() == 2 ? b.dim(0) : -1);
  if (kb != k)
    throw ShapeError("matmul: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " incompatible");
  const int ncols = vec ? 1 : b.dim(1);
  TensorNode* n = tape->alloc(vec ? Shape{m} : Shape{m, ncols});
  n->value.assign(static_cast<size_t>(m) * ncols, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < k; ++kk) {
      const double aik = av[static_cast<size_t>(i) * k + kk];
      if (aik == 0.0) continue;
      for (int j = 0; j < ncols; ++j)
        n->value[static_cast<size_t>(i) * ncols + j] +=
            aik * bv[static_cast<size_t>(kk) * ncols + j];
    }
  n->requires_grad = detail::any_grad({a, b});
  if (n->requires_grad) {
    TensorNode *pa = a.node(), *pb = b.node();
    n->backprop = [n, pa, pb, m, k, ncols]() {
      if (pa->requires_grad) {
        for (int i = 0; i < m; ++i)
          for (int kk = 0; kk < k; ++kk) {
            double s = 0.0;
            for (int j = 0; j < ncols; ++j)
              s += n->grad[static_cast<size_t>(i) * ncols + j] *
                   pb->value[static_cast<size_t>(kk) * ncols + j];
            pa->grad[static_cast<size_t>(i) * k + kk] += s;
          }
      }
      if (pb->requires_grad) {
        for (int kk = 0; kk < k; ++kk)
          for (int j = 0; j < ncols; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i)
              s += pa->value[static_cast<size_t>(i) * k + kk] *
                   n->grad[static_cast<size_t>(i) * ncols + j];
            pb->grad[static_cast<size_t>(kk) * ncols + j] += s;
          }
      }
    };
  }
  return Tensor(n);
}

// Adds a length-c bias to every row of a {n,c} matrix.
inline Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  Tape* tape = detail::tape_of({x, bias});
  if (x.rank() != 2 || bias.rank() != 1 || x.dim(1) != bias.dim(0))
    throw ShapeError("add_rowwise: shapes " + shape_str(x.shape()) + " and " +
                     shape_str(bias.shape()) + " do not align");
  const int rows = x.dim(0), cols = x.dim(1);
  TensorNode* n = tape->alloc(x.shape());
  n->value.resize(x.value().size());
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < cols; ++j)
      n->value[static_cast<size_t>(r) * cols + j] =
          x.value()[static_cast<size_t>(r) * cols + j] + bias.value()[j];
  n->requires_grad = detail::any_grad({x, bias});
  if (n->requires_grad) {
    TensorNode *px = x.node(), *pb = bias.node();
    n->backprop = [n, px, pb, rows, cols]() {
      if (px->requires_grad)
        for (size_t i = 0; i < n->grad.size(); ++i) px->grad[i] += n->grad[i];
      if (pb->requires_grad)
        for (int r = 0; r < rows; ++r)
          for (int j = 0; j < cols; ++j)
            pb->grad[j] += n->grad[static_cast<size_t>(r) * cols + j];
    };
  }
  return Tensor(n);
}

// v = sum_t alpha[t] * c[t,:]  for c {q,f} and alpha {q}.
inline Tensor weighted_sum_rows(const Tensor& c, const Tensor& alpha) {
  Tape* tape = detail::tape_of({c, alpha});
  if (c.rank() != 2 || alpha.rank() != 1 || c.dim(0) != alpha.dim(0))
    throw ShapeError("weighted_sum_rows: shapes " + shape_str(c.shape()) +
                     " and " + shape_str(alpha.shape()) + " do not align");
  const int q = c.dim(0), f = c.dim(1);
  TensorNode* n = tape->alloc({f});
  n->value.assign(static_cast<size_t>(f), 0.0);
  for (int t = 0; t < q; ++t)
    for (int j = 0; j < f; ++j)
      n->value[j] += alpha.value()[t] * c.value()[static_cast<size_t>(t) * f + j];
  n->requires_grad = detail::any_grad({c, alpha});
  if (n->requires_grad) {
    TensorNode *pc = c.node(), *pal = alpha.node();
    n->backprop = [n, pc, pal, q, f]() {
      for (int t = 0; t < q; ++t) {
        if (pc->requires_grad)
          for (int j = 0; j < f; ++j)
            pc->grad[static_cast<size_t>(t) * f + j] +=
                pal->value[t] * n->grad[j];
        if (pal->requires_grad) {
          double s = 0.0;
          for (int j = 0; j < f; ++j)
            s += pc->value[static_cast<size_t>(t) * f + j] * n->grad[j];
          pal->grad[t] += s;
        }
      }
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// Sequence ops
// ---------------------------------------------------------------------------

// Valid (no padding) convolution along the sequence axis. seq is {n,d},
// filters {f,w,d}, bias {f}; the result is {n-w+1, f}. Callers pad
// explicitly when they need another alignment.
inline Tensor conv1d(const Tensor& seq, const Tensor& filters,
                     const Tensor& bias) {
  Tape* tape = detail::tape_of({seq, filters, bias});
  if (seq.rank() != 2 || filters.rank() != 3 || bias.rank() != 1)
    throw ShapeError("conv1d: expected seq {n,d}, filters {f,w,d}, bias {f}; "
                     "got " + shape_str(seq.shape()) + ", " +
                     shape_str(filters.shape()) + ", " +
                     shape_str(bias.shape()));
  const int n_in = seq.dim(0), d = seq.dim(1);
  const int f = filters.dim(0), w = filters.dim(1);
  if (filters.dim(2) != d || bias.dim(0) != f)
    throw ShapeError("conv1d: filters " + shape_str(filters.shape()) +
                     " and bias " + shape_str(bias.shape()) +
                     " do not match input " + shape_str(seq.shape()));
  if (n_in < w)
    throw ShapeError("conv1d: sequence length " + std::to_string(n_in) +
                     " shorter than filter width " + std::to_string(w));
  const int q = n_in - w + 1;
  TensorNode* node = tape->alloc({q, f});
  node->value.assign(static_cast<size_t>(q) * f, 0.0);
  const auto& sv = seq.value();
  const auto& fv = filters.value();
  for (int t = 0; t < q; ++t)
    for (int j = 0; j < f; ++j) {
      double acc = bias.value()[j];
      const size_t fbase = static_cast<size_t>(j) * w * d;
      for (int u = 0; u < w; ++u) {
        const size_t srow = static_cast<size_t>(t + u) * d;
        const size_t frow = fbase + static_cast<size_t>(u) * d;
        for (int c = 0; c < d; ++c) acc += fv[frow + c] * sv[srow + c];
      }
      node->value[static_cast<size_t>(t) * f + j] = acc;
    }
  node->requires_grad = detail::any_grad({seq, filters, bias});
  if (node->requires_grad) {
    TensorNode *ps = seq.node(), *pf = filters.node(), *pb = bias.node();
    node->backprop = [node, ps, pf, pb, q, f, w, d]() {
      for (int t = 0; t < q; ++t)
        for (int j = 0; j < f; ++j) {
          const double g = node->grad[static_cast<size_t>(t) * f + j];
          if (g == 0.0) continue;
          if (pb->requires_grad) pb->grad[j] += g;
          const size_t fbase = static_cast<size_t>(j) * w * d;
          for (int u = 0; u < w; ++u) {
            const size_t srow = static_cast<size_t>(t + u) * d;
            const size_t frow = fbase + static_cast<size_t>(u) * d;
            if (ps->requires_grad)
              for (int c = 0; c < d; ++c)
                ps->grad[srow + c] += g * pf->value[frow + c];
            if (pf->requires_grad)
              for (int c = 0; c < d; ++c)
                pf->grad[frow + c] += g * ps->value[srow + c];
          }
        }
    };
  }
  return Tensor(node);
}

// Per-feature maximum over the time axis of a {q,f} map. Gradient goes to
// the first (lowest-index) maximum of each feature.
inline Tensor max_pool_time(const Tensor& c) {
  Tape* tape = detail::tape_of({c});
  if (c.rank() != 2)
    throw ShapeError("max_pool_time: " + shape_str(c.shape()) +
                     " is not a matrix");
  const int q = c.dim(0), f = c.dim(1);
  if (q < 1) throw ShapeError("max_pool_time: empty time axis");
  TensorNode* n = tape->alloc({f});
  n->value.resize(static_cast<size_t>(f));
  std::vector<int> argmax(static_cast<size_t>(f), 0);
  for (int j = 0; j < f; ++j) {
    double best = c.value()[j];
    int bt = 0;
    for (int t = 1; t < q; ++t) {
      const double v = c.value()[static_cast<size_t>(t) * f + j];
      if (v > best) {
        best = v;
        bt = t;
      }
    }
    n->value[j] = best;
    argmax[j] = bt;
  }
  n->requires_grad = c.requires_grad();
  if (n->requires_grad) {
    TensorNode* pc = c.node();
    n->backprop = [n, pc, argmax, f]() {
      for (int j = 0; j < f; ++j)
        pc->grad[static_cast<size_t>(argmax[j]) * f + j] += n->grad[j];
    };
  }
  return Tensor(n);
}

// Numerically stable softmax over a vector: the maximum is subtracted
// before exponentiation. Output components are positive and sum to one.
inline Tensor softmax(const Tensor& x) {
  Tape* tape = detail::tape_of({x});
  if (x.rank() != 1 || x.size() < 1)
    throw ShapeError("softmax: " + shape_str(x.shape()) +
                     " is not a nonempty vector");
  TensorNode* n = tape->alloc(x.shape());
  n->value.resize(x.value().size());
  const double mx = *std::max_element(x.value().begin(), x.value().end());
  double z = 0.0;
  for (size_t i = 0; i < n->value.size(); ++i) {
    n->value[i] = std::exp(x.value()[i] - mx);
    z += n->value[i];
  }
  for (auto& v : n->value) v /= z;
  n->requires_grad = x.requires_grad();
  if (n->requires_grad) {
    TensorNode* px = x.node();
    n->backprop = [n, px]() {
      double dot = 0.0;
      for (size_t i = 0; i < n->grad.size(); ++i)
        dot += n->grad[i] * n->value[i];
      for (size_t i = 0; i < n->grad.size(); ++i)
        px->grad[i] += n->value[i] * (n->grad[i] - dot);
    };
  }
  return Tensor(n);
}

// -log softmax(logits)[label], computed through a fused log-sum-exp so large
// logits cannot overflow.
inline Tensor cross_entropy(const Tensor& logits, int label) {
  Tape* tape = detail::tape_of({logits});
  if (logits.rank() != 1)
    throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) +
                     " is not a vector");
  const int k = logits.size();
  if (label < 0 || label >= k)
    throw DataError("cross_entropy: label " + std::to_string(label) +
                    " outside [0, " + std::to_string(k) + ")");
  const double mx =
      *std::max_element(logits.value().begin(), logits.value().end());
  double z = 0.0;
  for (double v : logits.value()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  TensorNode* n = tape->alloc({1});
  n->value = {lse - logits.value()[label]};
  n->requires_grad = logits.requires_grad();
  if (n->requires_grad) {
    TensorNode* pl = logits.node();
    std::vector<double> probs(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
      probs[static_cast<size_t>(i)] = std::exp(logits.value()[i] - lse);
    n->backprop = [n, pl, probs, label]() {
      for (size_t i = 0; i < probs.size(); ++i)
        pl->grad[i] +=
            n->grad[0] * (probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
    };
  }
  return Tensor(n);
}

// Mean cross-entropy over the rows of a {n,k} logit matrix.
inline Tensor cross_entropy_rows(const Tensor& logits,
                                 const std::vector<int>& labels) {
  Tape* tape = detail::tape_of({logits});
  if (logits.rank() != 2)
    throw ShapeError("cross_entropy_rows: logits " + shape_str(logits.shape()) +
                     " is not a matrix");
  const int rows = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(labels.size()) != rows)
    throw ShapeError("cross_entropy_rows: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(rows) + " rows");
  std::vector<double> probs(logits.value().size());
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const int lab = labels[static_cast<size_t>(r)];
    if (lab < 0 || lab >= k)
      throw DataError("cross_entropy_rows: label " + std::to_string(lab) +
                      " outside [0, " + std::to_string(k) + ") at row " +
                      std::to_string(r));
    const double* rv = logits.value().data() + static_cast<size_t>(r) * k;
    const double mx = *std::max_element(rv, rv + k);
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += std::exp(rv[i] - mx);
    const double lse = mx + std::log(z);
    total += lse - rv[lab];
    for (int i = 0; i < k; ++i)
      probs[static_cast<size_t>(r) * k + i] = std::exp(rv[i] - lse);
  }
  TensorNode* n = tape->alloc({1});
  n->value = {total / rows};
  n->requires_grad = logits.requires_grad();
  if (n->requires_grad) {
    TensorNode* pl = logits.node();
    std::vector<int> labs = labels;
    n->backprop = [n, pl, probs, labs, rows, k]() {
      const double s = n->grad[0] / rows;
      for (int r = 0; r < rows; ++r)
        for (int i = 0; i < k; ++i)
          pl->grad[static_cast<size_t>(r) * k + i] +=
              s * (probs[static_cast<size_t>(r) * k + i] -
                   (i == labs[static_cast<size_t>(r)] ? 1.0 : 0.0));
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

// Central-difference check of reverse-mode gradients. `f` rebuilds the scalar
// loss on a fresh tape from the current parameter values; the returned value
// is max over coordinates of |analytic - numeric| / max(1, |analytic|,
// |numeric|). The numeric side never touches the backward rules, so it is an
// independent oracle for them.
inline double grad_check(const std::function<Tensor(Tape&)>& f,
                         std::span<Param* const> params, double eps = 1e-5) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape);
    if (!std::isfinite(loss.item()))
      throw NumericError("grad_check: loss is not finite");
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape;
    return f(tape).item();
  };
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + eps;
      const double fp = eval();
      p->value[i] = keep - eps;
      const double fm = eval();
      p->value[i] = keep;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err =
          std::abs(a - numeric) /
          std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Convenience form for checking d f / d x at a single point.
inline double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Shape& shape, const std::vector<double>& x0,
                         double eps = 1e-5) {
  Param x("x", shape);
  x.value = x0;
  Param* ps[] = {&x};
  return grad_check([&](Tape& tape) { return f(tape, tape.param(x)); },
                    std::span<Param* const>(ps, 1), eps);
}

}  // namespace storymine
