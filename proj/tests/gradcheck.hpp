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

// Finite-difference checks of layer backward passes. Each check draws a
// random layer, takes loss = <y, R> for a fixed random R, and compares the
// analytic gradients with central differences.
#pragma once

#include <algorithm>
#include <optional>
#include <random>

#include "bmnet/layers.hpp"
#include "oracles.hpp"

namespace gradcheck {

using bmnet::Tensor;

inline constexpr double kStep = 1e-5;

// Log-domain weights: mostly O(1) values with some sentinel slots.
inline Tensor random_log_weights(const bmnet::Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 0.5);
  std::bernoulli_distribution dead(0.2);
  Tensor t(shape);
  for (auto& v : t.data()) v = dead(rng) ? bmnet::kNegSentinel : u(rng);
  return t;
}

// Inputs bounded away from zero so a step never flips a sign.
inline Tensor random_signed_input(const bmnet::Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::bernoulli_distribution neg(0.5);
  Tensor t(shape);
  for (auto& v : t.data()) v = neg(rng) ? -mag(rng) : mag(rng);
  return t;
}

struct Layout {
  bool dense = true;
  std::size_t batch = 2, h = 4, w = 4, c = 3, k = 3, f = 3;
  bmnet::ConvParams params{};
};

inline Layout random_layout(bool dense, std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  Layout l;
  l.dense = dense;
  l.batch = pick(1, 2);
  if (dense) {
    l.c = pick(2, 12);
    l.f = pick(1, 5);
  } else {
    l.h = pick(3, 5);
    l.w = pick(3, 5);
    l.c = pick(1, 3);
    l.k = pick(1, 3);
    l.f = pick(1, 3);
    l.params.stride = pick(1, 2);
    l.params.padding = pick(0, 1) ? bmnet::Padding::same : bmnet::Padding::valid;
    if (l.params.padding == bmnet::Padding::valid) l.k = std::min(l.k, std::min(l.h, l.w));
  }
  return l;
}

inline bmnet::Shape input_shape(const Layout& l) {
  return l.dense ? bmnet::Shape{l.batch, l.c} : bmnet::Shape{l.batch, l.h, l.w, l.c};
}
inline bmnet::Shape weight_shape(const Layout& l) {
  return l.dense ? bmnet::Shape{l.c, l.f} : bmnet::Shape{l.k, l.k, l.c, l.f};
}

/// Worst relative error over every gradient entry of a random BM layer, or
/// nullopt when some finite-difference step changes a max winner (a tie
/// neighbourhood, where the subgradient is not a derivative).
inline std::optional<double> bm_case(const Layout& l, std::mt19937_64& rng) {
  Tensor x = random_signed_input(input_shape(l), rng);
  bmnet::BMWeights w{random_log_weights(weight_shape(l), rng),
                     random_log_weights(weight_shape(l), rng),
                     oracle::random_tensor({l.f}, rng), bmnet::kNegSentinel};
  auto forward = [&](bmnet::BMCache* cache) {
    return l.dense ? bmnet::bm_dense_forward(x, w, bmnet::Activation::identity,
                                             bmnet::MathMode::exact, nullptr, cache)
                   : bmnet::bm_conv_forward(x, w, l.params, bmnet::Activation::identity,
                                            bmnet::MathMode::exact, nullptr, cache);
  };
  bmnet::BMCache cache;
  const Tensor y = forward(&cache);
  const Tensor r = oracle::random_tensor(y.shape(), rng);
  const auto grads = bmnet::bm_backward(r, cache);

  bool tie = false;
  auto loss = [&] {
    bmnet::BMCache probe;
    const Tensor yy = forward(&probe);
    if (probe.winner != cache.winner) tie = true;
    return oracle::dot(yy, r);
  };
  double worst = 0.0;
  worst = std::max(worst, oracle::max_rel_error(grads.grad_x, oracle::numeric_grad(x, loss, kStep)));
  worst = std::max(worst, oracle::max_rel_error(grads.grad_vplus,
                                                oracle::numeric_grad(w.vplus, loss, kStep)));
  worst = std::max(worst, oracle::max_rel_error(grads.grad_vminus,
                                                oracle::numeric_grad(w.vminus, loss, kStep)));
  worst = std::max(worst, oracle::max_rel_error(grads.grad_v, oracle::numeric_grad(w.v, loss, kStep)));
  if (tie) return std::nullopt;
  return worst;
}

inline double classical_case(const Layout& l, std::mt19937_64& rng) {
  Tensor x = oracle::random_tensor(input_shape(l), rng);
  Tensor wt = oracle::random_tensor(weight_shape(l), rng);
  Tensor b = oracle::random_tensor({l.f}, rng);
  auto forward = [&](bmnet::ClassicalCache* cache) {
    return l.dense ? bmnet::classical_dense_forward(x, {wt, b}, bmnet::Activation::identity,
                                                    nullptr, cache)
                   : bmnet::classical_conv_forward(x, {wt, b}, l.params,
                                                   bmnet::Activation::identity, nullptr, cache);
  };
  bmnet::ClassicalCache cache;
  const Tensor y = forward(&cache);
  const Tensor r = oracle::random_tensor(y.shape(), rng);
  const auto g = bmnet::classical_backward(r, cache, wt);
  auto loss = [&] { return oracle::dot(forward(nullptr), r); };
  double worst = oracle::max_rel_error(g.grad_x, oracle::numeric_grad(x, loss, kStep));
  worst = std::max(worst, oracle::max_rel_error(g.grad_w, oracle::numeric_grad(wt, loss, kStep)));
  worst = std::max(worst, oracle::max_rel_error(g.grad_b, oracle::numeric_grad(b, loss, kStep)));
  return worst;
}

inline double batchnorm_case(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t B = pick(2, 4), H = pick(1, 3), W = pick(1, 3), C = pick(1, 4);
  Tensor x = oracle::random_tensor({B, H, W, C}, rng, -2.0, 2.0);
  auto st = bmnet::BatchNormState::identity(C);
  st.gamma = oracle::random_tensor({C}, rng, 0.5, 1.5);
  st.beta = oracle::random_tensor({C}, rng);
  bmnet::BatchNormCache cache;
  auto probe_state = st;
  const Tensor y = bmnet::batchnorm_forward(x, probe_state, true, &cache);
  const Tensor r = oracle::random_tensor(y.shape(), rng);
  const auto g = bmnet::batchnorm_backward(r, cache, st);
  auto loss = [&] {
    auto s = st;  // running statistics must not drift between probes
    return oracle::dot(bmnet::batchnorm_forward(x, s, true), r);
  };
  double worst = oracle::max_rel_error(g.grad_x, oracle::numeric_grad(x, loss, kStep));
  worst = std::max(worst, oracle::max_rel_error(g.grad_gamma,
                                                oracle::numeric_grad(st.gamma, loss, kStep)));
  worst = std::max(worst, oracle::max_rel_error(g.grad_beta,
                                                oracle::numeric_grad(st.beta, loss, kStep)));
  return worst;
}

}  // namespace gradcheck
