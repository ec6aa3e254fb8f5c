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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmnet/conversion.hpp"
#include "bmnet/cost_model.hpp"
#include "bmnet/data.hpp"
#include "bmnet/netspec.hpp"
#include "bmnet/training.hpp"

namespace bmnet {

/// Everything a CLI experiment needs, read from one JSON file. Relative paths
/// are resolved against the directory holding the config.
struct ExperimentConfig {
  struct DatasetRef {
    std::string name = "mnist";  // "mnist" | "cifar10"
    std::string path;
    double val_fraction = 0.1;
    std::optional<std::size_t> train_limit, val_limit, test_limit;
  };
  DatasetRef dataset;
  /// Spec file path, or "builtin:lenet_like" / "builtin:resnet22".
  std::string network = "builtin:lenet_like";
  std::optional<std::uint64_t> seed;
  std::string output_dir = "bmnet_out";
  TrainConfig train;
  ConversionPlan conversion;  // empty layer_order = every convertible layer
  /// Adam step size during conversion fine-tuning (default: train.lr).
  std::optional<double> finetune_lr;
  bool approx_math = false;
  std::size_t threads = 1;
  cost::GateConstants gate_constants;
  std::optional<std::string> checkpoint;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

/// Resolves the network reference (builtin name or spec file).
NetworkSpec resolve_network(const ExperimentConfig& cfg);
/// Loads the configured dataset and applies the size limits.
DataSplits load_experiment_data(const ExperimentConfig& cfg);

/// Header of the per-epoch training metrics CSV.
inline constexpr const char* kTrainMetricsColumns =
    "epoch,train_loss,train_accuracy,val_accuracy,val_macro_precision,val_macro_recall";

nlohmann::json metrics_json(const Metrics& m);

}  // namespace bmnet
