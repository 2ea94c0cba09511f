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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "storymine/metrics.hpp"
#include "storymine/model.hpp"

namespace storymine {

// AdaDelta over a fixed parameter list. Each coordinate keeps exponential
// moving averages of squared gradients (eg2) and squared updates (edx2):
//   eg2  <- rho*eg2 + (1-rho)*g^2
//   dx    = -sqrt(edx2 + eps) / sqrt(eg2 + eps) * g
//   edx2 <- rho*edx2 + (1-rho)*dx^2
//   x    <- x + dx
// A non-finite gradient anywhere aborts the step before any value moves.
class AdaDelta {
 public:
  explicit AdaDelta(std::vector<Param*> params, double rho = 0.95,
                    double eps = 1e-6)
      : params_(std::move(params)), rho_(rho), eps_(eps) {
    if (rho_ < 0.0 || rho_ >= 1.0)
      throw ConfigError("adadelta: rho must lie in [0, 1), got " +
                        std::to_string(rho_));
    if (eps_ <= 0.0)
      throw ConfigError("adadelta: eps must be positive, got " +
                        std::to_string(eps_));
    for (const Param* p : params_) {
      eg2_.emplace_back(p->value.size(), 0.0);
      edx2_.emplace_back(p->value.size(), 0.0);
    }
  }

  void zero_grad() {
    for (Param* p : params_) p->zero_grad();
  }

  void step() {
    for (const Param* p : params_)
      for (size_t i = 0; i < p->grad.size(); ++i)
        if (!std::isfinite(p->grad[i]))
          throw NumericError("adadelta: gradient of " + p->name + "[" +
                             std::to_string(i) + "] is " +
                             std::to_string(p->grad[i]) +
                             "; step aborted with no parameter touched");
    for (size_t pi = 0; pi < params_.size(); ++pi) {
      Param* p = params_[pi];
      std::vector<double>& eg2 = eg2_[pi];
      std::vector<double>& edx2 = edx2_[pi];
      for (size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        eg2[i] = rho_ * eg2[i] + (1.0 - rho_) * g * g;
        const double dx = -std::sqrt(edx2[i] + eps_) /
                          std::sqrt(eg2[i] + eps_) * g;
        edx2[i] = rho_ * edx2[i] + (1.0 - rho_) * dx * dx;
        p->value[i] += dx;
      }
    }
  }

  double rho() const { return rho_; }
  double eps() const { return eps_; }

 private:
  std::vector<Param*> params_;
  double rho_;
  double eps_;
  std::vector<std::vector<double>> eg2_;
  std::vector<std::vector<double>> edx2_;
};

struct TrainPlan {
  int batch_size = 50;
  int epochs = 30;
  uint64_t seed = 1;
  std::string selection_metric = "macro_f1";
  bool shuffle = true;

  void validate() const {
    if (batch_size < 1)
      throw ConfigError("batch_size must be >= 1, got " +
                        std::to_string(batch_size));
    if (epochs < 0)
      throw ConfigError("epochs must be >= 0, got " + std::to_string(epochs));
    if (selection_metric != "macro_f1" && selection_metric != "accuracy" &&
        selection_metric != "token_accuracy" &&
        selection_metric != "token_macro_f1")
      throw ConfigError("unknown selection metric '" + selection_metric + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["selection_metric"] = selection_metric;
    j["shuffle"] = shuffle;
    return j;
  }

  static TrainPlan from_json(const nlohmann::json& j) {
    TrainPlan plan;
    static const std::vector<std::string> known = {
        "batch_size", "epochs", "seed", "selection_metric", "shuffle"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end())
        throw ConfigError("unknown train plan field '" + it.key() + "'");
    }
    try {
      if (j.contains("batch_size")) plan.batch_size = j["batch_size"].get<int>();
      if (j.contains("epochs")) plan.epochs = j["epochs"].get<int>();
      if (j.contains("seed")) plan.seed = j["seed"].get<uint64_t>();
      if (j.contains("selection_metric"))
        plan.selection_metric = j["selection_metric"].get<std::string>();
      if (j.contains("shuffle")) plan.shuffle = j["shuffle"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("train plan: ") + e.what());
    }
    return plan;
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double selection = 0.0;
  EvalReport dev;

  nlohmann::json to_json(const std::string& metric) const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss;
    j["selection"] = {{"metric", metric}, {"value", selection}};
    j["dev"] = dev.to_json();
    return j;
  }
};

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_value = 0.0;

  // One line-delimited record per epoch.
  std::string log_lines(const std::string& metric) const {
    std::string out;
    for (const EpochRecord& r : log) {
      out += r.to_json(metric).dump();
      out += "\n";
    }
    return out;
  }
};

namespace detail {

inline std::vector<std::vector<double>> snapshot_params(
    const std::vector<Param*>& params) {
  std::vector<std::vector<double>> snap;
  snap.reserve(params.size());
  for (const Param* p : params) snap.push_back(p->value);
  return snap;
}

inline void restore_params(const std::vector<Param*>& params,
                           const std::vector<std::vector<double>>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace detail

// Mini-batch training with per-epoch dev evaluation. The model is left
// holding the parameters of the best-scoring epoch (strictly-greater
// comparison, so ties keep the earliest). A non-finite loss or gradient
// aborts training, restores the best parameters seen so far, and rethrows.
inline TrainResult train(JointModel& model,
                         const std::vector<const Story*>& train_set,
                         const std::vector<const Story*>& dev_set,
                         const TrainPlan& plan) {
  plan.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  TrainResult result;
  if (plan.epochs == 0) return result;
  if (dev_set.empty())
    throw DataError("dev split is empty; model selection needs one");

  std::vector<Param*> params = model.params();
  AdaDelta optimizer(params);
  Rng rng(plan.seed);
  std::vector<std::vector<double>> best = detail::snapshot_params(params);
  result.best_value = -std::numeric_limits<double>::infinity();

  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    if (plan.shuffle) rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(plan.batch_size)) {
      const size_t stop = std::min(
          order.size(), start + static_cast<size_t>(plan.batch_size));
      optimizer.zero_grad();
      for (size_t k = start; k < stop; ++k) {
        const Story& story = *train_set[static_cast<size_t>(order[k])];
        Tape tape;
        JointOutput out = model.forward(tape, story, Mode::train, &rng);
        LossReport report = model.loss(out, story);
        const double l = report.total.item();
        if (!std::isfinite(l)) {
          detail::restore_params(params, best);
          throw NumericError("epoch " + std::to_string(epoch) + ", story " +
                             story.id + ": loss is " + std::to_string(l) +
                             "; training aborted, best parameters restored");
        }
        loss_sum += l;
        tape.backward(report.total);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (Param* p : params)
        for (double& g : p->grad) g *= inv;
      try {
        optimizer.step();
      } catch (const NumericError&) {
        detail::restore_params(params, best);
        throw;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.dev = evaluate_model(model, dev_set);
    record.selection = selection_value(record.dev, plan.selection_metric);
    result.log.push_back(std::move(record));
    if (result.log.back().selection > result.best_value) {
      result.best_value = result.log.back().selection;
      result.best_epoch = epoch;
      best = detail::snapshot_params(params);
    }
  }

  detail::restore_params(params, best);
  return result;
}

}  // namespace storymine
