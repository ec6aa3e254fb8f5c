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
#include <span>
#include <vector>

#include "bmnet/data.hpp"
#include "bmnet/network.hpp"
#include "bmnet/optim.hpp"

namespace bmnet {

/// Classification quality. Macro averages are unweighted means over classes;
/// a class that is never predicted has precision 0.
struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Metrics classification_metrics(std::span<const int> predicted, std::span<const int> labels,
                               std::size_t num_classes);

std::vector<int> predict(Network& net, const Dataset& data, std::size_t batch_size = 250);
/// Throws ConfigError when the network's class count differs from the data's.
Metrics evaluate(Network& net, const Dataset& data, std::size_t batch_size = 250);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  bool augment = false;
  AugmentConfig augment_config;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Minibatch Adam on softmax cross-entropy. Epoch e shuffles with a generator
/// derived from (seed, e), so a run is reproducible from the seed alone.
class Trainer {
 public:
  Trainer(Network& net, TrainConfig cfg, std::uint64_t seed);

  /// Throws NumericError when the loss becomes non-finite.
  EpochStats train_epoch(const Dataset& train);
  /// Drops optimizer moments, e.g. after the parameter set changed.
  void reset_optimizer() { opt_.reset(); }
  /// Changes the step size for subsequent epochs; moments are kept.
  void set_lr(double lr) {
    cfg_.adam.lr = lr;
    opt_.set_lr(lr);
  }
  std::size_t epochs_done() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  Network& net_;
  TrainConfig cfg_;
  std::uint64_t seed_;
  Adam opt_;
  std::size_t epoch_ = 0;
};

/// Copies of every persistent tensor, in Network::visit order.
std::vector<Tensor> snapshot_state(Network& net);
void restore_state(Network& net, const std::vector<Tensor>& snapshot);

}  // namespace bmnet
