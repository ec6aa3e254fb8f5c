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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "bmnet/checkpoint.hpp"
#include "bmnet/error.hpp"
#include "bmnet/training.hpp"
#include "oracles.hpp"

using namespace bmnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("base64") {
  const std::string text = "foobar";
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  CHECK(base64_encode(bytes) == "Zm9vYmFy");
  CHECK(base64_encode(std::span(bytes).first(4)) == "Zm9vYg==");
  CHECK(base64_encode(std::span(bytes).first(5)) == "Zm9vYmE=");
  CHECK(base64_decode("Zm9vYg==") == std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 4));
  CHECK(base64_decode("") == std::vector<std::uint8_t>{});
  CHECK_THROWS_AS(base64_decode("Zm9"), FormatError);
  CHECK_THROWS_AS(base64_decode("Zm9*"), FormatError);
}

TEST_CASE("tensor encoding is bit exact") {
  Tensor t({2, 3}, {0.1, -0.0, 1e-310, std::numeric_limits<double>::max(), kNegSentinel,
                    std::nextafter(1.0, 2.0)});
  const Tensor back = tensor_from_json(tensor_to_json(t));
  CHECK(back.shape() == t.shape());
  CHECK(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(double)) == 0);
  auto j = tensor_to_json(t);
  j["shape"] = {7};
  CHECK_THROWS_AS(tensor_from_json(j), FormatError);
}

TEST_CASE("checkpoint round trip") {
  Network net(build_resnet22(10), 3);
  net.weighted_layer("conv1").convert();
  net.weighted_layer("conv5").convert();
  std::mt19937_64 rng(1);
  const Tensor mean = oracle::random_tensor({32, 32, 3}, rng);
  // nontrivial running statistics
  net.forward(oracle::random_tensor({2, 32, 32, 3}, rng), true);

  const fs::path dir = fs::temp_directory_path() / "bmnet_ckpt_test";
  fs::create_directories(dir);
  save_checkpoint(net, (dir / "a.json").string(), mean);
  const Checkpoint ck = load_checkpoint((dir / "a.json").string());
  REQUIRE(ck.network);
  REQUIRE(ck.mean_image);
  CHECK(*ck.mean_image == mean);
  CHECK(snapshot_state(*ck.network) == snapshot_state(net));
  CHECK(ck.network->weighted_layer("conv5").form() == WeightedLayer::Form::bm);
  CHECK(ck.network->weighted_layer("conv6").form() == WeightedLayer::Form::classical);
  save_checkpoint(*ck.network, (dir / "b.json").string(), mean);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  const Tensor x = oracle::random_tensor({2, 32, 32, 3}, rng);
  CHECK(ck.network->forward(x, false) == net.forward(x, false));
  fs::remove_all(dir);
}

TEST_CASE("checkpoint errors") {
  Network net(build_lenet_like(10), 1);
  auto j = checkpoint_to_json(net);
  CHECK(j["format"] == kCheckpointFormat);
  auto bad = j;
  bad["format"] = "bmnet-v0";
  CHECK_THROWS_AS(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["layers"][0]["tensors"].erase("w");
  CHECK_THROWS_AS(checkpoint_from_json(bad), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), FormatError);
}
