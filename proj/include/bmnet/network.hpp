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
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bmnet/layers.hpp"
#include "bmnet/netspec.hpp"
#include "bmnet/opcount.hpp"
#include "bmnet/optim.hpp"

namespace bmnet {

using NamedTensor = std::pair<std::string, Tensor*>;

class Layer {
 public:
  Layer(std::string id, LayerKind kind) : id_(std::move(id)), kind_(kind) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& id() const { return id_; }
  LayerKind kind() const { return kind_; }

  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& grad) = 0;
  virtual void params(std::vector<ParamRef>&) {}
  /// Persistent state for checkpoints (weights and running statistics).
  virtual void state(std::vector<NamedTensor>&) {}
  virtual void zero_grad() {}
  /// Visits this layer and every nested layer in topological order.
  virtual void visit(const std::function<void(Layer&)>& fn) { fn(*this); }

 private:
  std::string id_;
  LayerKind kind_;
};

/// A conv or fc layer, held either in classical (w, b) or BM (V+, V-, v) form.
class WeightedLayer : public Layer {
 public:
  enum class Form { classical, bm };

  WeightedLayer(const LayerSpec& spec);

  Form form() const { return form_; }
  bool convertible() const { return spec_.convertible; }
  const LayerSpec& spec() const { return spec_; }

  /// Replaces the classical weights by their exact BM counterparts.
  void convert();
  /// Puts the layer into `form` with the given tensors (used by checkpoints).
  void set_classical(Tensor w, Tensor b);
  void set_bm(BMWeights weights);

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }
  const BMWeights& bm_weights() const { return bm_; }
  BMWeights& bm_weights() { return bm_; }

  void set_math(MathMode math) { math_ = math; }
  void set_counter(OpCount* counter) { counter_ = counter; }

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad) override;
  void params(std::vector<ParamRef>& out) override;
  void state(std::vector<NamedTensor>& out) override;
  void zero_grad() override;

 private:
  LayerSpec spec_;
  Form form_ = Form::classical;
  Tensor w_, b_, gw_, gb_;
  BMWeights bm_;
  Tensor gvp_, gvm_, gv_;
  MathMode math_ = MathMode::exact;
  OpCount* counter_ = nullptr;
  Shape in_shape_;
  ClassicalCache ccache_;
  BMCache bcache_;
};

/// Trainable network instantiated from a NetworkSpec. forward() returns
/// logits; the network's trailing softmax layer is applied by the loss.
class Network {
 public:
  /// He-normal weights and zero biases drawn from a generator seeded by `seed`.
  Network(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }

  /// x: [batch, L, M, C]
  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& grad_logits);

  std::vector<ParamRef> params();
  void zero_grad();

  /// conv/fc layers in topological order.
  std::vector<WeightedLayer*> weighted_layers();
  WeightedLayer& weighted_layer(const std::string& id);
  void visit(const std::function<void(Layer&)>& fn);

  void set_math(MathMode math);
  /// When enabled, each weighted layer accumulates its arithmetic into a
  /// per-layer OpCount.
  void set_op_counting(bool on);
  void reset_op_counts();
  OpCount op_count(const std::string& id) const;
  OpCount total_op_count() const;

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::pair<std::string, OpCount>> counts_;
  bool counting_ = false;
};

}  // namespace bmnet
