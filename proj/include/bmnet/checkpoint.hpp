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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmnet/network.hpp"

namespace bmnet {

inline constexpr const char* kCheckpointFormat = "bmnet-v1";

/// A network restored from disk plus the preprocessing it was trained with.
struct Checkpoint {
  std::unique_ptr<Network> network;
  std::optional<Tensor> mean_image;
};

/// JSON tree: {"format": "bmnet-v1", "spec": <network spec>, "layers": [{"id",
/// "kind", "form", "neg_sentinel"?, "tensors": {name: {"shape", "data"}}}],
/// "mean_image": tensor | null}. Tensor data is base64 of little-endian IEEE
/// 754 doubles, so values round-trip bit for bit.
nlohmann::json checkpoint_to_json(Network& net, const std::optional<Tensor>& mean_image = {});
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(Network& net, const std::string& path,
                     const std::optional<Tensor>& mean_image = {});
Checkpoint load_checkpoint(const std::string& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

}  // namespace bmnet
