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

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "bmnet/data.hpp"
#include "bmnet/error.hpp"
#include "bmnet/experiment.hpp"

using namespace bmnet;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("experiment config defaults") {
  const auto cfg = parse_experiment_config(json::object());
  CHECK(cfg.dataset.name == "mnist");
  CHECK(cfg.network == "builtin:lenet_like");
  CHECK_FALSE(cfg.seed.has_value());
  CHECK(cfg.conversion.layer_order.empty());
  CHECK_FALSE(cfg.finetune_lr.has_value());
  CHECK(cfg.threads == 1);
  CHECK(cfg.gate_constants == cost::GateConstants{});
}

TEST_CASE("experiment config fields") {
  const json j = json::parse(R"({
    "dataset": {"name": "cifar10", "path": "data", "val_fraction": 0.2, "train_limit": 50},
    "network": "nets/a.json", "seed": 11, "output_dir": "/abs/out",
    "train": {"epochs": 4, "batch_size": 16, "lr": 0.01, "augment": {"shift": 2, "horizontal_flip": true}},
    "conversion": {"layers": ["conv1", "fc2"], "epochs_per_layer": 3, "final_epochs": "patience",
                   "patience": 2, "max_final_epochs": 9, "lr": 0.02, "final_lr": 0.003},
    "approx_math": true, "threads": 2, "gate_constants": {"max": {"gates": 1, "latency": 1}}
  })");
  const auto cfg = parse_experiment_config(j, "/cfg/dir");
  CHECK(cfg.dataset.name == "cifar10");
  CHECK(cfg.dataset.path == "/cfg/dir/data");
  CHECK(cfg.dataset.val_fraction == 0.2);
  CHECK(cfg.dataset.train_limit == 50u);
  CHECK_FALSE(cfg.dataset.test_limit.has_value());
  CHECK(cfg.network == "/cfg/dir/nets/a.json");
  CHECK(cfg.seed == 11u);
  CHECK(cfg.output_dir == "/abs/out");
  CHECK(cfg.train.epochs == 4);
  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.adam.lr == 0.01);
  CHECK(cfg.train.augment);
  CHECK(cfg.train.augment_config.shift_h == 2);
  CHECK(cfg.train.augment_config.shift_w == 2);
  CHECK(cfg.train.augment_config.horizontal_flip);
  CHECK(cfg.conversion.layer_order == std::vector<std::string>{"conv1", "fc2"});
  CHECK(cfg.conversion.epochs_per_layer == 3);
  CHECK_FALSE(cfg.conversion.final_epochs.has_value());
  CHECK(cfg.conversion.patience == 2);
  CHECK(cfg.conversion.max_final_epochs == 9);
  CHECK(cfg.finetune_lr == 0.02);
  CHECK(cfg.conversion.final_lr == 0.003);
  CHECK(cfg.approx_math);
  CHECK(cfg.threads == 2);
  CHECK(cfg.gate_constants.max == cost::UnitCost{1, 1});
  CHECK(cfg.gate_constants.add == cost::GateConstants{}.add);
}

TEST_CASE("experiment config rejects bad input") {
  auto bad = [](const char* text) {
    CHECK_THROWS_AS(parse_experiment_config(json::parse(text)), ConfigError);
  };
  bad(R"([])");
  bad(R"({"sed": 1})");
  bad(R"({"dataset": {"name": "imagenet"}})");
  bad(R"({"dataset": {"trian_limit": 3}})");
  bad(R"({"dataset": {"train_limit": 0}})");
  bad(R"({"train": {"batch_size": 0}})");
  bad(R"({"train": {"lr": "fast"}})");
  bad(R"({"train": {"augment": {"rotate": 1}}})");
  bad(R"({"conversion": {"layers": "some"}})");
  bad(R"({"conversion": {"lr": 0}})");
  bad(R"({"conversion": {"final_lr": -1}})");
  bad(R"({"threads": 0})");
  bad(R"({"gate_constants": {"div": {"gates": 1, "latency": 1}}})");
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("experiment network resolution") {
  ExperimentConfig cfg;
  cfg.network = "builtin:resnet22";
  CHECK(resolve_network(cfg).layers.size() > 5);
  cfg.network = "builtin:vgg";
  CHECK_THROWS_AS(resolve_network(cfg), ConfigError);
}

TEST_CASE("experiment data needs a seed and applies limits") {
  const fs::path dir = fs::temp_directory_path() / "bmnet_experiment_data";
  fs::create_directories(dir);
  std::mt19937 rng(1);
  for (const auto& [img, lab, n] : {std::tuple{"train-images-idx3-ubyte", "train-labels-idx1-ubyte", 40},
                                    std::tuple{"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", 20}}) {
    IdxImages im{static_cast<std::size_t>(n), 28, 28, std::vector<std::uint8_t>(n * 784)};
    for (auto& p : im.pixels) p = static_cast<std::uint8_t>(rng());
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 10);
    write_file((dir / img).string(), encode_idx_images(im));
    write_file((dir / lab).string(), encode_idx_labels(labels));
  }
  ExperimentConfig cfg;
  cfg.dataset.path = dir.string();
  CHECK_THROWS_AS(load_experiment_data(cfg), ConfigError);
  cfg.seed = 3;
  cfg.dataset.train_limit = 10;
  cfg.dataset.test_limit = 5;
  const auto s = load_experiment_data(cfg);
  CHECK(s.train.size() == 10);
  CHECK(s.val.size() == 4);
  CHECK(s.test.size() == 5);
  fs::remove_all(dir);
}
