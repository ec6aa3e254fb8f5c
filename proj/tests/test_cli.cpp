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

// End-to-end runs of the bmnet binary on a tiny synthetic IDX dataset.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bmnet/conversion.hpp"
#include "bmnet/cost_model.hpp"
#include "bmnet/data.hpp"
#include "bmnet/experiment.hpp"

using namespace bmnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + BMNET_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// A scratch directory with a learnable 28x28 dataset (the label is encoded
/// in which image row is bright) and a matching small config.
struct Sandbox {
  fs::path root;

  Sandbox() {
    root = fs::temp_directory_path() / ("bmnet_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "data");
    std::mt19937 rng(5);
    write_split("train", 200, rng);
    write_split("t10k", 60, rng);
    write_config(root / "config.json", json::object());
  }
  ~Sandbox() { fs::remove_all(root); }

  void write_split(const std::string& prefix, std::size_t n, std::mt19937& rng) {
    IdxImages im{n, 28, 28, std::vector<std::uint8_t>(n * 784)};
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<std::uint8_t>(rng() % 10);
      for (std::size_t p = 0; p < 784; ++p) {
        const bool lit = p / 28 / 3 == labels[i];
        im.pixels[i * 784 + p] = static_cast<std::uint8_t>((lit ? 160 : 0) + rng() % 60);
      }
    }
    write_file((root / "data" / (prefix + "-images-idx3-ubyte")).string(), encode_idx_images(im));
    write_file((root / "data" / (prefix + "-labels-idx1-ubyte")).string(), encode_idx_labels(labels));
  }

  void write_config(const fs::path& path, const json& patch) const {
    json cfg = {{"dataset", {{"name", "mnist"}, {"path", "data"}}},
                {"network", "builtin:lenet_like"},
                {"seed", 4},
                {"output_dir", "out"},
                {"train", {{"epochs", 1}, {"batch_size", 32}}},
                {"conversion", {{"layers", "all"}, {"epochs_per_layer", 1}, {"final_epochs", 1}}}};
    cfg.merge_patch(patch);
    std::ofstream(path) << cfg.dump(2);
  }

  std::string config() const { return "--config \"" + (root / "config.json").string() + "\""; }
  fs::path log() const { return root / "log.txt"; }
};

}  // namespace

TEST_CASE("cli exit codes for usage and configuration errors") {
  Sandbox s;
  CHECK(cli("", s.log()) == 1);
  CHECK(cli("frobnicate", s.log()) == 1);
  CHECK(cli("train --config \"" + (s.root / "missing.json").string() + "\"", s.log()) == 1);
  s.write_config(s.root / "typo.json", {{"trian", {{"epochs", 1}}}});
  CHECK(cli("train --config \"" + (s.root / "typo.json").string() + "\"", s.log()) == 1);
  CHECK(cli("cost-report --spec builtin:lenet_like --layers 9", s.log()) == 1);
}

TEST_CASE("cli exit codes for data errors") {
  Sandbox s;
  // missing classical checkpoint
  CHECK(cli("convert " + s.config() + " --out \"" + (s.root / "nothing").string() + "\"", s.log()) == 2);
  // corrupted IDX magic
  auto bytes = read_file((s.root / "data" / "train-images-idx3-ubyte").string());
  bytes[2] = 9;
  write_file((s.root / "data" / "train-images-idx3-ubyte").string(), bytes);
  CHECK(cli("train " + s.config(), s.log()) == 2);
}

TEST_CASE("cli train, convert and evaluate produce their artifacts") {
  Sandbox s;
  const fs::path out = s.root / "out";
  REQUIRE(cli("train " + s.config(), s.log()) == 0);
  CHECK(first_line(out / "train_metrics.csv") == kTrainMetricsColumns);
  CHECK(fs::exists(out / "checkpoint.json"));
  const json summary = json::parse(slurp(out / "train_summary.json"));
  CHECK(summary["test"]["accuracy"].get<double>() >= 0.0);

  REQUIRE(cli("convert " + s.config(), s.log()) == 0);
  CHECK(first_line(out / "stage_log.csv") == stage_log_csv_header());
  CHECK(fs::exists(out / "stage_log.jsonl"));
  CHECK(fs::exists(out / "converted.json"));
  CHECK(slurp(s.log()).find("final accuracy") != std::string::npos);

  REQUIRE(cli("evaluate " + s.config(), s.log()) == 0);
  REQUIRE(cli("evaluate " + s.config() + " --approx-math", s.log()) == 0);
  const json exact = json::parse(slurp(out / "eval.json"));
  const json approx = json::parse(slurp(out / "eval_approx.json"));
  CHECK(exact["samples"] == 60);
  CHECK(approx["approx_math"] == true);
}

TEST_CASE("cli training is deterministic under a fixed seed") {
  Sandbox s;
  REQUIRE(cli("train " + s.config() + " --out \"" + (s.root / "a").string() + "\"", s.log()) == 0);
  REQUIRE(cli("train " + s.config() + " --out \"" + (s.root / "b").string() + "\"", s.log()) == 0);
  CHECK(slurp(s.root / "a" / "train_metrics.csv") == slurp(s.root / "b" / "train_metrics.csv"));
  CHECK(slurp(s.root / "a" / "checkpoint.json") == slurp(s.root / "b" / "checkpoint.json"));
  REQUIRE(cli("train " + s.config() + " --seed 5 --out \"" + (s.root / "c").string() + "\"", s.log()) == 0);
  CHECK(slurp(s.root / "a" / "checkpoint.json") != slurp(s.root / "c" / "checkpoint.json"));
}

TEST_CASE("cli cost-report output") {
  Sandbox s;
  const fs::path out = s.root / "cost";
  REQUIRE(cli("cost-report --spec builtin:resnet22 --layers 0 --sweep --out \"" + out.string() + "\"", s.log()) == 0);
  CHECK(first_line(out / "cost_report.csv") == cost::kReportColumns);
  CHECK(first_line(out / "cost_sweep.csv") == "k,total_gates,total_latency");
  REQUIRE(cli("cost-report --spec builtin:lenet_like --format json", s.log()) == 0);
  const json j = json::parse(slurp(s.log()));
  CHECK(j["converted_prefix"] == 2);
}
