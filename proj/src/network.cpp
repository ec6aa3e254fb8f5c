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

#include "bmnet/network.hpp"

#include <cmath>
#include <random>

#include "bmnet/conversion.hpp"
#include "bmnet/error.hpp"

namespace bmnet {

namespace {

class ReluLayer : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& x, bool) override {
    out_ = relu_forward(x);
    return out_;
  }
  Tensor backward(const Tensor& grad) override { return relu_backward(grad, out_); }

 private:
  Tensor out_;
};

class BatchNormLayer : public Layer {
 public:
  BatchNormLayer(const std::string& id, std::size_t channels)
      : Layer(id, LayerKind::batchnorm), st_(BatchNormState::identity(channels)),
        gg_(zeros({channels})), gb_(zeros({channels})) {}

  Tensor forward(const Tensor& x, bool training) override {
    return batchnorm_forward(x, st_, training, &cache_);
  }
  Tensor backward(const Tensor& grad) override {
    auto g = batchnorm_backward(grad, cache_, st_);
    gg_ = add(gg_, g.grad_gamma);
    gb_ = add(gb_, g.grad_beta);
    return std::move(g.grad_x);
  }
  void params(std::vector<ParamRef>& out) override {
    out.push_back({id() + ".gamma", &st_.gamma, &gg_});
    out.push_back({id() + ".beta", &st_.beta, &gb_});
  }
  void state(std::vector<NamedTensor>& out) override {
    out.emplace_back("gamma", &st_.gamma);
    out.emplace_back("beta", &st_.beta);
    out.emplace_back("running_mean", &st_.running_mean);
    out.emplace_back("running_var", &st_.running_var);
  }
  void zero_grad() override {
    gg_.fill(0.0);
    gb_.fill(0.0);
  }

 private:
  BatchNormState st_;
  BatchNormCache cache_;
  Tensor gg_, gb_;
};

class MaxPoolLayer : public Layer {
 public:
  MaxPoolLayer(const std::string& id, std::size_t size)
      : Layer(id, LayerKind::max_pool), size_(size) {}
  Tensor forward(const Tensor& x, bool) override { return maxpool_forward(x, size_, &cache_); }
  Tensor backward(const Tensor& grad) override { return maxpool_backward(grad, cache_); }

 private:
  std::size_t size_;
  MaxPoolCache cache_;
};

class GlobalAvgPoolLayer : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& x, bool) override {
    in_shape_ = x.shape();
    return global_avg_pool_forward(x);
  }
  Tensor backward(const Tensor& grad) override {
    return global_avg_pool_backward(grad, in_shape_);
  }

 private:
  Shape in_shape_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

class Sequence {
 public:
  explicit Sequence(const std::vector<LayerSpec>& specs) {
    for (const auto& s : specs) {
      if (s.kind != LayerKind::softmax) layers_.push_back(make_layer(s));
    }
  }
  Tensor forward(Tensor x, bool training) {
    for (auto& l : layers_) x = l->forward(x, training);
    return x;
  }
  Tensor backward(Tensor g) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }
  void visit(const std::function<void(Layer&)>& fn) {
    for (auto& l : layers_) l->visit(fn);
  }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

class ResidualLayer : public Layer {
 public:
  explicit ResidualLayer(const LayerSpec& spec)
      : Layer(spec.id, LayerKind::residual_block), pre_(spec.pre), body_(spec.body),
        projection_(spec.projection) {}

  Tensor forward(const Tensor& x, bool training) override {
    const Tensor a = pre_.forward(x, training);
    const Tensor h = body_.forward(a, training);
    const Tensor s = projection_.empty() ? x : projection_.forward(a, training);
    return add(h, s);
  }

  Tensor backward(const Tensor& grad) override {
    Tensor ga = body_.backward(grad);
    if (projection_.empty()) {
      return add(pre_.backward(std::move(ga)), grad);
    }
    ga = add(ga, projection_.backward(grad));
    return pre_.backward(std::move(ga));
  }

  void visit(const std::function<void(Layer&)>& fn) override {
    fn(*this);
    pre_.visit(fn);
    body_.visit(fn);
    projection_.visit(fn);
  }

 private:
  Sequence pre_, body_, projection_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv:
    case LayerKind::fc:
      return std::make_unique<WeightedLayer>(spec);
    case LayerKind::relu:
      return std::make_unique<ReluLayer>(spec.id, spec.kind);
    case LayerKind::batchnorm:
      return std::make_unique<BatchNormLayer>(spec.id, spec.channels);
    case LayerKind::max_pool:
      return std::make_unique<MaxPoolLayer>(spec.id, spec.pool);
    case LayerKind::global_avg_pool:
      return std::make_unique<GlobalAvgPoolLayer>(spec.id, spec.kind);
    case LayerKind::residual_block:
      return std::make_unique<ResidualLayer>(spec);
    case LayerKind::softmax:
      break;
  }
  throw ConfigError("layer kind " + to_string(spec.kind) + " has no runtime layer");
}

}  // namespace

WeightedLayer::WeightedLayer(const LayerSpec& spec)
    : Layer(spec.id, spec.kind), spec_(spec) {
  if (spec.kind == LayerKind::conv) {
    w_ = zeros({spec.kernel, spec.kernel, spec.channels, spec.filters});
    b_ = zeros({spec.filters});
  } else {
    w_ = zeros({spec.inputs, spec.outputs});
    b_ = zeros({spec.outputs});
  }
  gw_ = zeros(w_.shape());
  gb_ = zeros(b_.shape());
}

void WeightedLayer::convert() {
  if (form_ == Form::bm) throw ConfigError("layer " + id() + " is already in BM form");
  set_bm(convert_weights(w_, b_));
}

void WeightedLayer::set_classical(Tensor w, Tensor b) {
  if (w.shape() != gw_.shape() && form_ == Form::classical) {
    throw ShapeError("layer " + id() + ": weight " + shape_to_string(w.shape()) +
                     " does not match " + shape_to_string(gw_.shape()));
  }
  w_ = std::move(w);
  b_ = std::move(b);
  gw_ = zeros(w_.shape());
  gb_ = zeros(b_.shape());
  bm_ = {};
  gvp_ = gvm_ = gv_ = {};
  form_ = Form::classical;
  bcache_ = {};
}

void WeightedLayer::set_bm(BMWeights weights) {
  const Shape wshape = form_ == Form::classical ? w_.shape() : bm_.vplus.shape();
  if (weights.vplus.shape() != wshape || weights.vminus.shape() != wshape) {
    throw ShapeError("layer " + id() + ": BM weights " +
                     shape_to_string(weights.vplus.shape()) + " do not match " +
                     shape_to_string(wshape));
  }
  bm_ = std::move(weights);
  gvp_ = zeros(bm_.vplus.shape());
  gvm_ = zeros(bm_.vminus.shape());
  gv_ = zeros(bm_.v.shape());
  w_ = b_ = gw_ = gb_ = {};
  form_ = Form::bm;
  ccache_ = {};
}

Tensor WeightedLayer::forward(const Tensor& x, bool training) {
  in_shape_ = x.shape();
  const bool dense = kind() == LayerKind::fc;
  Tensor in = dense ? x.reshaped({x.dim(0), x.size() / x.dim(0)}) : x;
  const ConvParams cp{spec_.stride, spec_.padding};
  if (form_ == Form::classical) {
    ClassicalCache* cache = training ? &ccache_ : nullptr;
    if (dense) {
      return classical_dense_forward(in, {w_, b_}, Activation::identity, counter_, cache);
    }
    return classical_conv_forward(in, {w_, b_}, cp, Activation::identity, counter_, cache);
  }
  BMCache* cache = training ? &bcache_ : nullptr;
  if (dense) return bm_dense_forward(in, bm_, Activation::identity, math_, counter_, cache);
  return bm_conv_forward(in, bm_, cp, Activation::identity, math_, counter_, cache);
}

Tensor WeightedLayer::backward(const Tensor& grad) {
  Tensor gx;
  if (form_ == Form::classical) {
    auto g = classical_backward(grad, ccache_, w_);
    gw_ = add(gw_, g.grad_w);
    gb_ = add(gb_, g.grad_b);
    gx = std::move(g.grad_x);
  } else {
    auto g = bm_backward(grad, bcache_);
    gvp_ = add(gvp_, g.grad_vplus);
    gvm_ = add(gvm_, g.grad_vminus);
    gv_ = add(gv_, g.grad_v);
    gx = std::move(g.grad_x);
  }
  return std::move(gx).reshaped(in_shape_);
}

void WeightedLayer::params(std::vector<ParamRef>& out) {
  if (form_ == Form::classical) {
    out.push_back({id() + ".w", &w_, &gw_});
    out.push_back({id() + ".b", &b_, &gb_});
  } else {
    out.push_back({id() + ".vplus", &bm_.vplus, &gvp_});
    out.push_back({id() + ".vminus", &bm_.vminus, &gvm_});
    out.push_back({id() + ".v", &bm_.v, &gv_});
  }
}

void WeightedLayer::state(std::vector<NamedTensor>& out) {
  if (form_ == Form::classical) {
    out.emplace_back("w", &w_);
    out.emplace_back("b", &b_);
  } else {
    out.emplace_back("vplus", &bm_.vplus);
    out.emplace_back("vminus", &bm_.vminus);
    out.emplace_back("v", &bm_.v);
  }
}

void WeightedLayer::zero_grad() {
  if (form_ == Form::classical) {
    gw_.fill(0.0);
    gb_.fill(0.0);
  } else {
    gvp_.fill(0.0);
    gvm_.fill(0.0);
    gv_.fill(0.0);
  }
}

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  validate(spec_);
  for (const auto& s : spec_.layers) {
    if (s.kind != LayerKind::softmax) layers_.push_back(make_layer(s));
  }
  std::mt19937_64 rng(seed);
  for (auto* l : weighted_layers()) {
    Tensor& w = l->weight();
    const std::size_t fan_in = w.size() / w.shape().back();
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : w.data()) v = dist(rng);
    counts_.emplace_back(l->id(), OpCount{});
  }
}

Tensor Network::forward(const Tensor& x, bool training) {
  const Shape& in = spec_.input;
  if (x.rank() != 4 || x.dim(1) != in[0] || x.dim(2) != in[1] || x.dim(3) != in[2]) {
    throw ShapeError("network expects [batch," + std::to_string(in[0]) + "," +
                     std::to_string(in[1]) + "," + std::to_string(in[2]) + "], got " +
                     shape_to_string(x.shape()));
  }
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, training);
  return h;
}

Tensor Network::backward(const Tensor& grad_logits) {
  Tensor g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Network::visit(const std::function<void(Layer&)>& fn) {
  for (auto& l : layers_) l->visit(fn);
}

std::vector<ParamRef> Network::params() {
  std::vector<ParamRef> out;
  visit([&](Layer& l) { l.params(out); });
  return out;
}

void Network::zero_grad() {
  visit([](Layer& l) { l.zero_grad(); });
}

std::vector<WeightedLayer*> Network::weighted_layers() {
  std::vector<WeightedLayer*> out;
  visit([&](Layer& l) {
    if (l.kind() == LayerKind::conv || l.kind() == LayerKind::fc) {
      out.push_back(static_cast<WeightedLayer*>(&l));
    }
  });
  return out;
}

WeightedLayer& Network::weighted_layer(const std::string& id) {
  for (auto* l : weighted_layers()) {
    if (l->id() == id) return *l;
  }
  throw ConfigError("no conv/fc layer with id '" + id + "'");
}

void Network::set_math(MathMode math) {
  for (auto* l : weighted_layers()) l->set_math(math);
}

void Network::set_op_counting(bool on) {
  counting_ = on;
  auto layers = weighted_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i]->set_counter(on ? &counts_[i].second : nullptr);
  }
}

void Network::reset_op_counts() {
  for (auto& [id, c] : counts_) c = {};
}

OpCount Network::op_count(const std::string& id) const {
  for (const auto& [lid, c] : counts_) {
    if (lid == id) return c;
  }
  throw ConfigError("no conv/fc layer with id '" + id + "'");
}

OpCount Network::total_op_count() const {
  OpCount total;
  for (const auto& [id, c] : counts_) total += c;
  return total;
}

}  // namespace bmnet
