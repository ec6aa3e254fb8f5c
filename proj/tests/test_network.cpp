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
#include <random>

#include "bmnet/conversion.hpp"
#include "bmnet/cost_model.hpp"
#include "bmnet/error.hpp"
#include "bmnet/network.hpp"
#include "bmnet/optim.hpp"
#include "bmnet/parallel.hpp"
#include "bmnet/training.hpp"
#include "oracles.hpp"

using namespace bmnet;
using nlohmann::json;

namespace {

NetworkSpec small_cnn() {
  return parse_netspec(json::parse(R"({
    "format": "bmnet-netspec-v1", "input": [6, 6, 2], "num_classes": 3,
    "layers": [
      {"kind": "conv", "F": 3, "C": 2, "K": 3},
      {"kind": "relu"},
      {"kind": "max-pool", "size": 2},
      {"kind": "conv", "F": 4, "C": 3, "K": 3, "stride": 2},
      {"kind": "fc", "P": 16, "Q": 3},
      {"kind": "softmax"}]})"));
}

NetworkSpec small_resnet() {
  return parse_netspec(json::parse(R"({
    "format": "bmnet-netspec-v1", "input": [4, 4, 2], "num_classes": 2,
    "layers": [
      {"kind": "conv", "F": 3, "C": 2, "K": 3},
      {"kind": "residual-block",
       "pre": [{"kind": "batchnorm", "C": 3}, {"kind": "relu"}],
       "body": [{"kind": "conv", "F": 4, "C": 3, "K": 3, "stride": 2}],
       "projection": {"kind": "conv", "F": 4, "C": 3, "K": 1, "stride": 2}},
      {"kind": "residual-block",
       "pre": [],
       "body": [{"kind": "conv", "F": 4, "C": 4, "K": 3}],
       "projection": null},
      {"kind": "global-avg-pool"},
      {"kind": "fc", "P": 4, "Q": 2},
      {"kind": "softmax"}]})"));
}

Tensor maxpool2(const Tensor& x) {
  const std::size_t B = x.dim(0), H = x.dim(1) / 2, W = x.dim(2) / 2, C = x.dim(3);
  Tensor y({B, H, W, C});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t c = 0; c < C; ++c)
          y.at({n, i, j, c}) = std::max({x.at({n, 2 * i, 2 * j, c}), x.at({n, 2 * i + 1, 2 * j, c}),
                                         x.at({n, 2 * i, 2 * j + 1, c}),
                                         x.at({n, 2 * i + 1, 2 * j + 1, c})});
  return y;
}

// Loss gradient of every parameter versus central differences.
double network_gradcheck(Network& net, const Tensor& x, const std::vector<int>& labels) {
  auto loss = [&] { return softmax_cross_entropy(net.forward(x, true), labels).loss; };
  net.zero_grad();
  const auto res = softmax_cross_entropy(net.forward(x, true), labels);
  net.backward(res.grad);
  double worst = 0.0;
  for (const auto& p : net.params()) {
    const Tensor num = oracle::numeric_grad(*p.value, loss);
    // floor: biases feeding a batchnorm have an exactly-zero gradient
    worst = std::max(worst, oracle::max_rel_error(*p.grad, num, 1e-6));
  }
  return worst;
}

// Two classes: bright top half versus bright bottom half, plus noise.
Dataset stripes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  Dataset d;
  d.image_shape = {6, 6, 2};
  d.num_classes = 3;
  d.images = Tensor({n, 6, 6, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 3);
    d.labels.push_back(label);
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x)
        for (std::size_t c = 0; c < 2; ++c) {
          const bool on = (label == 0 && y < 3) || (label == 1 && y >= 3) || (label == 2 && x < 3);
          d.images.at({i, y, x, c}) = (on ? 1.0 : 0.0) + noise(rng);
        }
  }
  return d;
}

}  // namespace

TEST_CASE("network forward equals layer-by-layer reference") {
  Network net(small_cnn(), 3);
  std::mt19937_64 rng(1);
  const Tensor x = oracle::random_tensor({2, 6, 6, 2}, rng);
  auto& c1 = net.weighted_layer("conv1");
  auto& c2 = net.weighted_layer("conv2");
  auto& f1 = net.weighted_layer("fc1");
  c1.bias() = oracle::random_tensor({3}, rng);
  Tensor h = relu(oracle::conv(x, c1.weight(), c1.bias(), {}));
  h = maxpool2(h);
  h = oracle::conv(h, c2.weight(), c2.bias(), {2, Padding::same});
  const Tensor ref = oracle::dense(h.reshaped({2, 16}), f1.weight(), f1.bias());
  const Tensor y = net.forward(x, false);
  CHECK(oracle::max_rel_error(y, ref) < 1e-12);
  CHECK_THROWS_AS(net.forward(Tensor({2, 6, 6, 3}), false), ShapeError);
  CHECK_THROWS_AS(net.weighted_layer("nope"), ConfigError);
}

TEST_CASE("network gradients, classical and partly converted") {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor({3, 6, 6, 2}, rng);
  Network net(small_cnn(), 4);
  CHECK(network_gradcheck(net, x, {0, 2, 1}) < 1e-5);
  Network res(small_resnet(), 5);
  const Tensor xr = oracle::random_tensor({3, 4, 4, 2}, rng);
  CHECK(network_gradcheck(res, xr, {1, 0, 1}) < 1e-4);
  // the BM layer's max winners are stable under these steps for this seed
  net.weighted_layer("fc1").convert();
  CHECK(network_gradcheck(net, x, {0, 2, 1}) < 1e-4);
}

TEST_CASE("zeroed final layer gives uniform probabilities") {
  Network net(build_lenet_like(10), 1);
  net.weighted_layer("fc2").weight().fill(0.0);
  std::mt19937_64 rng(3);
  const Tensor p = softmax(net.forward(oracle::random_tensor({2, 28, 28, 1}, rng, 0, 1), false));
  for (double v : p.values()) CHECK(v == doctest::Approx(0.1));
}

TEST_CASE("network op counts") {
  Network net(build_lenet_like(10), 1);
  net.set_op_counting(true);
  net.forward(Tensor({1, 28, 28, 1}), false);
  using cost::Model;
  CHECK(net.op_count("conv1") == cost::opcount_conv({16, 1, 3, 28, 28}, Model::standard));
  CHECK(net.op_count("fc1") == cost::opcount_fc(1568, 64, Model::standard));
  net.weighted_layer("conv1").convert();
  net.weighted_layer("fc2").convert();
  net.reset_op_counts();
  net.forward(Tensor({1, 28, 28, 1}), false);
  CHECK(net.op_count("conv1") == cost::opcount_conv({16, 1, 3, 28, 28}, Model::bm));
  CHECK(net.op_count("fc2") == cost::opcount_fc(64, 10, Model::bm));
  const OpCount total = net.op_count("conv1") + net.op_count("conv2") + net.op_count("fc1") +
                        net.op_count("fc2");
  CHECK(net.total_op_count() == total);
}

TEST_CASE("adam") {
  Tensor p({2}, {1.0, -1.0});
  const Tensor g({2}, {0.5, -2.0});
  AdamState st;
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  adam_step(p, g, st, cfg);
  // first bias-corrected step moves each coordinate by lr * sign(g)
  CHECK(p[0] == doctest::Approx(0.9));
  CHECK(p[1] == doctest::Approx(-0.9));
  adam_step(p, g, st, cfg);
  CHECK(st.step == 2);
  const double m = (0.9 * 0.05 + 0.05) / (1 - 0.81);
  const double v = (0.999 * 0.00025 + 0.00025) / (1 - 0.998001);
  CHECK(p[0] == doctest::Approx(0.9 - 0.1 * m / (std::sqrt(v) + 1e-8)));
}

TEST_CASE("classification metrics") {
  const int y2[] = {0, 1, 1, 0};
  const auto perfect = classification_metrics(y2, y2, 2);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_precision == 1.0);
  CHECK(perfect.macro_recall == 1.0);

  std::vector<int> labels, constant(100, 3);
  for (int i = 0; i < 100; ++i) labels.push_back(i % 10);
  const auto c = classification_metrics(constant, labels, 10);
  CHECK(c.accuracy == doctest::Approx(0.1));
  CHECK(c.macro_recall == doctest::Approx(0.1));
  CHECK(c.macro_precision == doctest::Approx(0.01));
  CHECK(c.confusion[5][3] == 10);
}

TEST_CASE("training learns a separable toy problem and is reproducible") {
  const Dataset train = stripes(120, 1), test = stripes(60, 2);
  TrainConfig cfg;
  cfg.adam.lr = 0.01;
  cfg.batch_size = 16;
  auto run = [&] {
    Network net(small_cnn(), 7);
    Trainer t(net, cfg, 11);
    for (int e = 0; e < 15; ++e) t.train_epoch(train);
    return std::pair{evaluate(net, test).accuracy, snapshot_state(net)};
  };
  const auto [acc, state] = run();
  CHECK(acc >= 0.95);
  CHECK(run().second == state);

  set_num_threads(3);
  const auto threaded = run();
  CHECK(run().second == threaded.second);
  set_num_threads(1);

  Network other(build_lenet_like(10), 1);
  CHECK_THROWS_AS(evaluate(other, test), ConfigError);  // 3 classes vs 10
}

TEST_CASE("non-finite loss aborts training") {
  const Dataset d = stripes(8, 3);
  Network net(small_cnn(), 1);
  net.weighted_layer("fc1").bias()[0] = std::nan("");
  Trainer t(net, {}, 1);
  CHECK_THROWS_AS(t.train_epoch(d), NumericError);
}

TEST_CASE("snapshot and restore") {
  Network net(small_resnet(), 1);
  const auto snap = snapshot_state(net);
  net.weighted_layer("conv1").weight().fill(3.0);
  restore_state(net, snap);
  CHECK(snapshot_state(net) == snap);
}
