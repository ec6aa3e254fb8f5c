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
#include <cstdint>
#include <vector>

#include "bmnet/opcount.hpp"
#include "bmnet/tensor.hpp"

namespace bmnet {

/// Finite stand-in for ln 0 = -inf in the log domain. exp() of anything near
/// it underflows to exactly 0.0 in float and double.
inline constexpr double kNegSentinel = -1e4;

enum class Activation { identity, relu };
enum class Padding { same, valid };
enum class MathMode { exact, approx };

struct ConvParams {
  std::size_t stride = 1;
  Padding padding = Padding::same;
};

struct ClassicalDenseWeights {
  Tensor w;  // [P, Q]
  Tensor b;  // [Q]
};

struct ClassicalConvWeights {
  Tensor w;  // [K, K, C, F]
  Tensor b;  // [F]
};

/// Log-domain weights of a bipolar morphological layer. vplus and vminus
/// share the index structure of the classical weight they replace.
struct BMWeights {
  Tensor vplus;
  Tensor vminus;
  Tensor v;
  double neg_sentinel = kNegSentinel;
};

/// Resolved convolution geometry (NHWC input, KKCF weights). Dense layers
/// are the K=1 case on a 1x1 image with C=P and F=Q.
struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_h = 1, in_w = 1, channels = 0;
  std::size_t kernel = 1, filters = 0, stride = 1;
  std::size_t out_h = 1, out_w = 1;
  std::size_t pad_top = 0, pad_left = 0;

  std::size_t receptive_field() const { return kernel * kernel * channels; }
  std::size_t outputs_per_sample() const { return out_h * out_w * filters; }
};

/// Output extents for an input extent under the given padding and stride.
/// Same padding follows the usual ceil(in / stride) rule with the extra
/// padding row/column placed at the bottom/right.
ConvGeometry conv_geometry(const Shape& input, std::size_t kernel,
                           std::size_t filters, ConvParams params);

struct ClassicalCache {
  ConvGeometry geo;
  Shape input_shape;
  Tensor input;
  Tensor output;
  Activation act = Activation::identity;
  bool dense = false;
  bool valid = false;
};

struct ClassicalGrads {
  Tensor grad_x, grad_w, grad_b;
};

Tensor classical_dense_forward(const Tensor& x, const ClassicalDenseWeights& w,
                               Activation act, OpCount* ops = nullptr,
                               ClassicalCache* cache = nullptr);
Tensor classical_conv_forward(const Tensor& input, const ClassicalConvWeights& w,
                              ConvParams params, Activation act,
                              OpCount* ops = nullptr, ClassicalCache* cache = nullptr);
/// `w` is the weight tensor used in the cached forward pass.
ClassicalGrads classical_backward(const Tensor& grad_out, const ClassicalCache& cache,
                                  const Tensor& w);

/// Forward state of a BM layer: per output neuron, the four exp terms and
/// the flat receptive-field index that won each max (-1 when the term had no
/// candidate, i.e. no input of that sign).
struct BMCache {
  ConvGeometry geo;
  Shape input_shape;
  Tensor input;
  Tensor output;
  std::vector<double> terms;         // [outputs][4]
  std::vector<std::int32_t> winner;  // [outputs][4]
  Activation act = Activation::identity;
  double neg_sentinel = kNegSentinel;
  bool dense = false;
  bool valid = false;
};

struct BMGrads {
  Tensor grad_x, grad_vplus, grad_vminus, grad_v;
};

/// y = act(exp(max(ln x+ + V+)) - exp(max(ln x+ + V-)) - exp(max(ln x- + V+))
///         + exp(max(ln x- + V-)) + v)
Tensor bm_dense_forward(const Tensor& x, const BMWeights& w, Activation act,
                        MathMode math = MathMode::exact, OpCount* ops = nullptr,
                        BMCache* cache = nullptr);
Tensor bm_conv_forward(const Tensor& input, const BMWeights& w, ConvParams params,
                       Activation act, MathMode math = MathMode::exact,
                       OpCount* ops = nullptr, BMCache* cache = nullptr);
/// Subgradient through the four max reductions; each term sends its gradient
/// to the winning weight slot and input only. Throws ConfigError when the
/// cache holds no forward pass.
BMGrads bm_backward(const Tensor& grad_out, const BMCache& cache);

/// Log-domain value of |x|: ln|x| clamped below at `sentinel`; 0 maps to it.
double log_magnitude(double x, MathMode math, double sentinel = kNegSentinel);

Tensor relu_forward(const Tensor& x);
/// `output` is the relu output from the forward pass.
Tensor relu_backward(const Tensor& grad_out, const Tensor& output);

struct BatchNormState {
  Tensor gamma, beta, running_mean, running_var;
  double momentum = 0.1;  // running = (1 - momentum) * running + momentum * batch
  double eps = 1e-5;

  static BatchNormState identity(std::size_t channels);
};

struct BatchNormCache {
  Tensor xhat;
  std::vector<double> inv_std;
  bool training = false;
  bool valid = false;
};

struct BatchNormGrads {
  Tensor grad_x, grad_gamma, grad_beta;
};

/// Normalizes over every axis but the last (channels).
Tensor batchnorm_forward(const Tensor& x, BatchNormState& state, bool training,
                         BatchNormCache* cache = nullptr);
BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormState& state);

struct MaxPoolCache {
  Shape input_shape;
  std::vector<std::size_t> winner;
};
/// Non-overlapping size x size pooling on NHWC input, floor division.
Tensor maxpool_forward(const Tensor& x, std::size_t size, MaxPoolCache* cache = nullptr);
Tensor maxpool_backward(const Tensor& grad_out, const MaxPoolCache& cache);

/// [B,H,W,C] -> [B,C]
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& grad_out, const Shape& input_shape);

struct LossResult {
  double loss = 0.0;
  Tensor grad;   // d(mean loss)/d(logits)
  Tensor probs;
};

/// Mean softmax cross-entropy over the batch. Throws DomainError on labels
/// outside [0, classes).
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);
Tensor softmax(const Tensor& logits);

}  // namespace bmnet
