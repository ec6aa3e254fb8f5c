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
#include <string>
#include <vector>

#include <json.hpp>

#include "bmnet/layers.hpp"
#include "bmnet/tensor.hpp"

namespace bmnet {

enum class LayerKind {
  conv,
  fc,
  relu,
  batchnorm,
  residual_block,
  global_avg_pool,
  max_pool,
  softmax,
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

/// One entry of a network description. Fields irrelevant to `kind` are
/// ignored and not serialized.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string id;

  // conv
  std::size_t filters = 0;   // F
  std::size_t channels = 0;  // C
  std::size_t kernel = 1;    // K
  std::size_t stride = 1;
  Padding padding = Padding::same;
  // fc
  std::size_t inputs = 0;   // P
  std::size_t outputs = 0;  // Q
  // max-pool
  std::size_t pool = 2;
  // conv/fc
  bool convertible = true;

  // residual-block: out = body(pre(x)) + shortcut, where the shortcut is x
  // itself (identity) or the projection conv applied to pre(x).
  std::vector<LayerSpec> pre;
  std::vector<LayerSpec> body;
  std::vector<LayerSpec> projection;  // empty or exactly one conv

  bool is_weighted() const { return kind == LayerKind::conv || kind == LayerKind::fc; }
};

struct NetworkSpec {
  std::string name;
  Shape input;  // [L, M, C]
  std::size_t num_classes = 0;
  std::vector<LayerSpec> layers;
};

/// A conv or fc layer with its resolved spatial extents.
struct ConvertibleLayer {
  std::string id;
  LayerKind kind = LayerKind::conv;
  std::size_t filters = 0, channels = 0, kernel = 1, stride = 1;
  std::size_t in_h = 1, in_w = 1;
  std::size_t out_h = 1, out_w = 1;  // L, M of the output
  bool convertible = true;
};

/// Checks that shapes chain from input to output; throws ShapeError naming the
/// offending layer, ConfigError for structural problems (duplicate ids,
/// misplaced softmax).
void validate(const NetworkSpec& spec);

/// Every conv/fc layer (convertible or not) in topological order: within a
/// residual block the order is pre, body, projection.
std::vector<ConvertibleLayer> weighted_layers(const NetworkSpec& spec);
/// Output shape for a single sample, e.g. [num_classes].
Shape output_shape(const NetworkSpec& spec);
/// Trainable parameters: conv/fc weights and biases, batchnorm scale and shift.
std::size_t parameter_count(const NetworkSpec& spec);
std::size_t conv_layer_count(const NetworkSpec& spec);

NetworkSpec parse_netspec(const nlohmann::json& j);
NetworkSpec load_netspec(const std::string& path);
nlohmann::json to_json(const NetworkSpec& spec);
std::string serialize_netspec(const NetworkSpec& spec);
void save_netspec(const NetworkSpec& spec, const std::string& path);

/// conv(K3,F16) relu max-pool(2) conv(K3,F32,stride 2) relu fc(64) relu fc.
NetworkSpec build_lenet_like(std::size_t num_classes, Shape input = {28, 28, 1});
/// Pre-activation ResNet with 22 conv layers: stem conv, three stages of three
/// blocks (16/32/64 filters, stride-2 entry into stages 2 and 3) whose first
/// block carries a 1x1 projection, then batchnorm, relu, global average pool, fc.
NetworkSpec build_resnet22(std::size_t num_classes, Shape input = {32, 32, 3});

}  // namespace bmnet
