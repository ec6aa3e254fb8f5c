// Copyright 2026 The bmnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bmnet/conversion.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bmnet/error.hpp"

namespace bmnet {

BMWeights convert_weights(const Tensor& w, const Tensor& b, double neg_sentinel) {
  BMWeights out;
  out.neg_sentinel = neg_sentinel;
  out.vplus = full(w.shape(), neg_sentinel);
  out.vminus = full(w.shape(), neg_sentinel);
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] > 0.0) {
      out.vplus[j] = std::log(w[j]);
    } else if (w[j] < 0.0) {
      out.vminus[j] = std::log(-w[j]);
    }
  }
  out.v = b;
  return out;
}

std::vector<std::string> default_layer_order(Network& net) {
  std::vector<std::string> ids;
  for (auto* l : net.weighted_layers()) {
    if (l->convertible()) ids.push_back(l->id());
  }
  return ids;
}

void validate_plan(Network& net, const ConversionPlan& plan) {
  std::map<std::string, std::size_t> position;
  std::size_t pos = 0;
  for (auto* l : net.weighted_layers()) {
    if (l->convertible()) position[l->id()] = pos;
    ++pos;
  }
  std::set<std::string> seen;
  std::size_t last = 0;
  bool first = true;
  for (const auto& id : plan.layer_order) {
    const auto it = position.find(id);
    if (it == position.end()) {
      throw ConfigError("conversion plan references unknown or non-convertible layer '" +
                        id + "'");
    }
    if (!seen.insert(id).second) {
      throw ConfigError("conversion plan lists layer '" + id + "' twice");
    }
    if (!first && it->second < last) {
      throw ConfigError("conversion plan is not in first-to-last order at '" + id + "'");
    }
    last = it->second;
    first = false;
  }
  if (plan.epochs_per_layer == 0 && !plan.layer_order.empty()) {
    throw ConfigError("epochs_per_layer must be >= 1");
  }
}

bool StageRecord::same_metrics(const StageRecord& o) const {
  return stage == o.stage && layer_id == o.layer_id && phase == o.phase &&
         accuracy == o.accuracy && macro_precision == o.macro_precision &&
         macro_recall == o.macro_recall && epoch_count == o.epoch_count;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<StageRecord> run_schedule(Network& net, const DataSplits& data,
                                      const ConversionPlan& plan, std::size_t k,
                                      const TrainConfig& train_cfg, std::uint64_t seed,
                                      const StageCallback& on_record) {
  validate_plan(net, plan);
  if (k > plan.layer_order.size()) {
    throw ConfigError("requested " + std::to_string(k) + " conversions but the plan has " +
                      std::to_string(plan.layer_order.size()));
  }
  if (data.train.size() == 0) throw ConfigError("training set is empty");
  const Dataset& eval_set = data.test.size() > 0 ? data.test : data.val;
  if (eval_set.size() == 0) throw ConfigError("no test or validation data to evaluate on");

  const auto t0 = Clock::now();
  Trainer trainer(net, train_cfg, seed);
  std::vector<StageRecord> log;
  const auto record = [&](std::size_t stage, const std::string& id, const char* phase) {
    const Metrics m = evaluate(net, eval_set);
    StageRecord r;
    r.stage = stage;
    r.layer_id = id;
    r.phase = phase;
    r.accuracy = m.accuracy;
    r.macro_precision = m.macro_precision;
    r.macro_recall = m.macro_recall;
    r.epoch_count = trainer.epochs_done();
    r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    log.push_back(r);
    if (on_record) on_record(r);
  };

  for (std::size_t e = 0; e < plan.classical_epochs; ++e) trainer.train_epoch(data.train);
  record(0, "", "baseline");

  for (std::size_t i = 0; i < k; ++i) {
    const std::string& id = plan.layer_order[i];
    net.weighted_layer(id).convert();
    trainer.reset_optimizer();
    record(i + 1, id, "converted");
    for (std::size_t e = 0; e < plan.epochs_per_layer; ++e) trainer.train_epoch(data.train);
    record(i + 1, id, "finetuned");
  }

  if (k == plan.layer_order.size() && k > 0) {
    if (plan.final_lr) trainer.set_lr(*plan.final_lr);
    if (plan.final_epochs) {
      for (std::size_t e = 0; e < *plan.final_epochs; ++e) trainer.train_epoch(data.train);
    } else {
      const Dataset& val = data.val.size() > 0 ? data.val : eval_set;
      double best = evaluate(net, val).accuracy;
      auto best_state = snapshot_state(net);
      std::size_t since = 0;
      for (std::size_t e = 0; e < plan.max_final_epochs && since < plan.patience; ++e) {
        trainer.train_epoch(data.train);
        const double acc = evaluate(net, val).accuracy;
        if (acc > best) {
          best = acc;
          best_state = snapshot_state(net);
          since = 0;
        } else {
          ++since;
        }
      }
      restore_state(net, best_state);
    }
    record(k + 1, "", "final");
  }
  return log;
}

}  // namespace

std::vector<StageRecord> incremental_convert_and_train(Network& net, const DataSplits& data,
                                                       const ConversionPlan& plan,
                                                       const TrainConfig& train,
                                                       std::uint64_t seed,
                                                       const StageCallback& on_record) {
  return run_schedule(net, data, plan, plan.layer_order.size(), train, seed, on_record);
}

std::vector<StageRecord> partial_conversion_accuracy_curve(Network& net, const DataSplits& data,
                                                           const ConversionPlan& plan,
                                                           std::size_t k,
                                                           const TrainConfig& train,
                                                           std::uint64_t seed,
                                                           const StageCallback& on_record) {
  return run_schedule(net, data, plan, k, train, seed, on_record);
}

std::string stage_log_csv_header() {
  return "stage,layer_id,phase,accuracy,macro_precision,macro_recall,epoch_count,wall_time";
}

std::string stage_log_csv_row(const StageRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.stage << ',' << r.layer_id << ',' << r.phase << ',' << r.accuracy << ','
     << r.macro_precision << ',' << r.macro_recall << ',' << r.epoch_count << ','
     << r.wall_time;
  return os.str();
}

nlohmann::json stage_record_json(const StageRecord& r) {
  return {{"stage", r.stage},
          {"layer_id", r.layer_id},
          {"phase", r.phase},
          {"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"epoch_count", r.epoch_count},
          {"wall_time", r.wall_time}};
}

}  // namespace bmnet
