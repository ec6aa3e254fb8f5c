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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmnet/data.hpp"
#include "bmnet/layers.hpp"
#include "bmnet/training.hpp"

namespace bmnet {

/// Sign-split of classical weights into log-domain banks:
///   vplus[j]  = ln w[j]   if w[j] > 0, else neg_sentinel
///   vminus[j] = ln -w[j]  if w[j] < 0, else neg_sentinel
///   v         = b
BMWeights convert_weights(const Tensor& w, const Tensor& b,
                          double neg_sentinel = kNegSentinel);

/// Layer-by-layer conversion schedule.
struct ConversionPlan {
  /// Layer ids, converted first to last. Must follow topological order.
  std::vector<std::string> layer_order;
  std::size_t epochs_per_layer = 50;
  /// Epochs after the last conversion; nullopt trains until validation
  /// accuracy has not improved for `patience` epochs and restores the best.
  std::optional<std::size_t> final_epochs;
  std::size_t patience = 10;
  std::size_t max_final_epochs = 500;
  /// Step size for the final phase (default: keep the fine-tuning rate).
  std::optional<double> final_lr;
  /// Classical pre-training epochs run before the first conversion (0 when
  /// the network arrives trained).
  std::size_t classical_epochs = 0;
};

/// Every convertible conv/fc layer of `net` in topological order.
std::vector<std::string> default_layer_order(Network& net);
/// Throws ConfigError for unknown, non-convertible, repeated or out-of-order ids.
void validate_plan(Network& net, const ConversionPlan& plan);

/// One row of the conversion log. Phases: "baseline" (before any conversion),
/// "converted" (right after replacing a layer), "finetuned" (after the
/// stage's training) and "final" (after the closing training phase).
struct StageRecord {
  std::size_t stage = 0;
  std::string layer_id;
  std::string phase;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::size_t epoch_count = 0;  // epochs trained in this run so far
  double wall_time = 0.0;       // seconds since the run started

  /// Equality of everything but wall_time.
  bool same_metrics(const StageRecord& o) const;
};

using StageCallback = std::function<void(const StageRecord&)>;

/// Runs the incremental conversion: for each planned layer, convert it, log
/// test metrics, fine-tune the whole network, log again; then the final
/// training phase. Metrics are measured on `data.test` (or `data.val` when
/// the test split is empty).
std::vector<StageRecord> incremental_convert_and_train(Network& net, const DataSplits& data,
                                                       const ConversionPlan& plan,
                                                       const TrainConfig& train,
                                                       std::uint64_t seed,
                                                       const StageCallback& on_record = {});

/// Same schedule stopped after the first `k` planned layers. The final phase
/// runs only when k covers the whole plan, so k = all reproduces
/// incremental_convert_and_train exactly.
std::vector<StageRecord> partial_conversion_accuracy_curve(Network& net, const DataSplits& data,
                                                           const ConversionPlan& plan,
                                                           std::size_t k,
                                                           const TrainConfig& train,
                                                           std::uint64_t seed,
                                                           const StageCallback& on_record = {});

std::string stage_log_csv_header();
std::string stage_log_csv_row(const StageRecord& r);
nlohmann::json stage_record_json(const StageRecord& r);

}  // namespace bmnet
