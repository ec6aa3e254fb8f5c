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

#include "bmnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bmnet/error.hpp"
#include "bmnet/layers.hpp"

namespace bmnet {

Metrics classification_metrics(std::span<const int> predicted, std::span<const int> labels,
                               std::size_t num_classes) {
  if (predicted.size() != labels.size()) {
    throw ShapeError("prediction and label counts differ");
  }
  Metrics m;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = static_cast<std::size_t>(labels[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= num_classes || p >= num_classes) {
      throw DomainError("class index outside [0, " + std::to_string(num_classes) + ")");
    }
    ++m.confusion[t][p];
    correct += t == p;
  }
  if (labels.empty()) return m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  double psum = 0.0, rsum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t pred_c = 0, true_c = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      pred_c += m.confusion[k][c];
      true_c += m.confusion[c][k];
    }
    const double tp = static_cast<double>(m.confusion[c][c]);
    psum += pred_c ? tp / static_cast<double>(pred_c) : 0.0;
    rsum += true_c ? tp / static_cast<double>(true_c) : 0.0;
  }
  m.macro_precision = psum / static_cast<double>(num_classes);
  m.macro_recall = rsum / static_cast<double>(num_classes);
  return m;
}

std::vector<int> predict(Network& net, const Dataset& data, std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = net.forward(data.batch(idx), false);
    for (auto a : argmax(logits, 1)) out.push_back(static_cast<int>(a));
  }
  return out;
}

Metrics evaluate(Network& net, const Dataset& data, std::size_t batch_size) {
  if (net.spec().num_classes != data.num_classes) {
    throw ConfigError("network has " + std::to_string(net.spec().num_classes) +
                      " classes, dataset has " + std::to_string(data.num_classes));
  }
  const auto pred = predict(net, data, batch_size);
  return classification_metrics(pred, data.labels, data.num_classes);
}

Trainer::Trainer(Network& net, TrainConfig cfg, std::uint64_t seed)
    : net_(net), cfg_(cfg), seed_(seed), opt_(cfg.adam) {
  if (cfg_.batch_size == 0) throw ConfigError("batch size must be >= 1");
}

EpochStats Trainer::train_epoch(const Dataset& train) {
  if (train.size() == 0) throw ConfigError("training set is empty");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::uint64_t epoch_seed = mix_seed(seed_, epoch_);
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats stats;
  stats.epoch = epoch_;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    const std::span<const std::size_t> ids(order.data() + start, end - start);
    Tensor x = train.batch(ids);
    if (cfg_.augment) x = augment(x, cfg_.augment_config, epoch_seed, ids);
    std::vector<int> y;
    y.reserve(ids.size());
    for (auto i : ids) y.push_back(train.labels[i]);

    net_.zero_grad();
    const Tensor logits = net_.forward(x, true);
    const LossResult r = softmax_cross_entropy(logits, y);
    if (!std::isfinite(r.loss)) {
      throw NumericError("non-finite loss in epoch " + std::to_string(epoch_) +
                         " at sample offset " + std::to_string(start));
    }
    net_.backward(r.grad);
    opt_.step(net_.params());
    loss_sum += r.loss * static_cast<double>(ids.size());
    const auto pred = argmax(logits, 1);
    for (std::size_t i = 0; i < ids.size(); ++i) correct += static_cast<int>(pred[i]) == y[i];
  }
  stats.train_loss = loss_sum / static_cast<double>(train.size());
  stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
  ++epoch_;
  return stats;
}

std::vector<Tensor> snapshot_state(Network& net) {
  std::vector<Tensor> out;
  net.visit([&](Layer& l) {
    std::vector<NamedTensor> st;
    l.state(st);
    for (auto& [name, t] : st) out.push_back(*t);
  });
  return out;
}

void restore_state(Network& net, const std::vector<Tensor>& snapshot) {
  std::size_t i = 0;
  net.visit([&](Layer& l) {
    std::vector<NamedTensor> st;
    l.state(st);
    for (auto& [name, t] : st) {
      if (i >= snapshot.size() || snapshot[i].shape() != t->shape()) {
        throw ConfigError("snapshot does not match the network layout");
      }
      *t = snapshot[i++];
    }
  });
  if (i != snapshot.size()) throw ConfigError("snapshot does not match the network layout");
}

}  // namespace bmnet
