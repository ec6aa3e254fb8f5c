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

#include "bmnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bmnet/approx_math.hpp"
#include "bmnet/error.hpp"
#include "bmnet/parallel.hpp"

namespace bmnet {

namespace {

constexpr double kLnUnderflow = 1e-300;

ConvGeometry dense_geometry(const Tensor& x, const Shape& w_shape) {
  if (x.rank() != 2) {
    throw ShapeError("dense input must be [batch, P], got " + shape_to_string(x.shape()));
  }
  if (w_shape.size() != 2 || w_shape[0] != x.dim(1)) {
    throw ShapeError("dense weight " + shape_to_string(w_shape) +
                     " does not match input " + shape_to_string(x.shape()));
  }
  ConvGeometry g;
  g.batch = x.dim(0);
  g.channels = w_shape[0];
  g.filters = w_shape[1];
  return g;
}

void check_conv_weight(const ConvGeometry& g, const Shape& w_shape, const Shape& in_shape) {
  if (w_shape.size() != 4 || w_shape[0] != w_shape[1]) {
    throw ShapeError("conv weight must be [K,K,C,F], got " + shape_to_string(w_shape));
  }
  if (w_shape[2] != in_shape[3]) {
    throw ShapeError("conv weight " + shape_to_string(w_shape) + " expects C=" +
                     std::to_string(w_shape[2]) + ", input has " +
                     shape_to_string(in_shape));
  }
  (void)g;
}

void check_bias(const Tensor& b, std::size_t filters) {
  if (b.rank() != 1 || b.dim(0) != filters) {
    throw ShapeError("bias " + shape_to_string(b.shape()) + " does not match " +
                     std::to_string(filters) + " outputs");
  }
}

Shape output_shape(const ConvGeometry& g, bool dense) {
  if (dense) return {g.batch, g.filters};
  return {g.batch, g.out_h, g.out_w, g.filters};
}

// Visits the in-bounds receptive field of output (n, oy, ox): fn(j, input_offset)
// with j = (kh * K + kw) * C + c ascending.
template <typename Fn>
inline void for_each_tap(const ConvGeometry& g, std::size_t n, std::size_t oy,
                         std::size_t ox, Fn&& fn) {
  const std::size_t K = g.kernel, C = g.channels;
  for (std::size_t kh = 0; kh < K; ++kh) {
    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + kh) -
                              static_cast<std::ptrdiff_t>(g.pad_top);
    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
    for (std::size_t kw = 0; kw < K; ++kw) {
      const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kw) -
                                static_cast<std::ptrdiff_t>(g.pad_left);
      if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
      const std::size_t base = ((n * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                                static_cast<std::size_t>(ix)) * C;
      fn((kh * K + kw) * C, base);
    }
  }
}

std::size_t tap_to_input(const ConvGeometry& g, std::size_t n, std::size_t oy,
                         std::size_t ox, std::size_t j) {
  const std::size_t C = g.channels, K = g.kernel;
  const std::size_t c = j % C;
  const std::size_t kw = (j / C) % K;
  const std::size_t kh = j / (C * K);
  const std::size_t iy = oy * g.stride + kh - g.pad_top;
  const std::size_t ix = ox * g.stride + kw - g.pad_left;
  return ((n * g.in_h + iy) * g.in_w + ix) * C + c;
}

void count_classical(const ConvGeometry& g, OpCount* ops) {
  if (!ops) return;
  const std::uint64_t outputs = g.batch * g.outputs_per_sample();
  const std::uint64_t rf = g.receptive_field();
  ops->mul += outputs * rf;
  ops->add += outputs * rf;
  ops->activation += outputs;
}

// Per output neuron: two weight banks see every input once (2 adds each),
// the running maxima start at the first input (2(N-1) max), then four exp,
// three combining adds and the bias add. Logs are taken once per input value.
void count_bm(const ConvGeometry& g, OpCount* ops) {
  if (!ops) return;
  const std::uint64_t outputs = g.batch * g.outputs_per_sample();
  const std::uint64_t rf = g.receptive_field();
  ops->exp += 4 * outputs;
  ops->add += outputs * 2 * (rf + 2);
  ops->max += outputs * 2 * (rf - 1);
  ops->activation += outputs;
  ops->log += g.batch * g.in_h * g.in_w * g.channels;
}

void apply_activation(Tensor& out, Activation act) {
  if (act == Activation::relu) {
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  }
}

Tensor masked_grad(const Tensor& grad_out, const Tensor& output, Activation act) {
  if (grad_out.shape() != output.shape()) {
    throw ShapeError("gradient " + shape_to_string(grad_out.shape()) +
                     " does not match layer output " + shape_to_string(output.shape()));
  }
  Tensor g = grad_out;
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(output[i] > 0.0)) g[i] = 0.0;
    }
  }
  return g;
}

void classical_kernel(const ConvGeometry& g, const double* in, const double* w,
                      const double* b, double* out) {
  const std::size_t F = g.filters, C = g.channels;
  parallel_chunks(g.batch, [&](std::size_t, std::size_t n0, std::size_t n1) {
    for (std::size_t n = n0; n < n1; ++n)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          double* o = out + ((n * g.out_h + oy) * g.out_w + ox) * F;
          std::copy(b, b + F, o);
          for_each_tap(g, n, oy, ox, [&](std::size_t j0, std::size_t base) {
            for (std::size_t c = 0; c < C; ++c) {
              const double xv = in[base + c];
              if (xv == 0.0) continue;
              const double* wr = w + (j0 + c) * F;
              for (std::size_t f = 0; f < F; ++f) o[f] += xv * wr[f];
            }
          });
        }
  });
}

Tensor classical_run(const ConvGeometry& g, const Tensor& x, const Tensor& w,
                     const Tensor& b, Activation act, bool dense, OpCount* ops,
                     ClassicalCache* cache) {
  check_bias(b, g.filters);
  Tensor out(output_shape(g, dense));
  classical_kernel(g, x.data().data(), w.data().data(), b.data().data(),
                   out.data().data());
  apply_activation(out, act);
  count_classical(g, ops);
  if (cache) {
    cache->geo = g;
    cache->input_shape = x.shape();
    cache->input = x;
    cache->output = out;
    cache->act = act;
    cache->dense = dense;
    cache->valid = true;
  }
  return out;
}

}  // namespace

ConvGeometry conv_geometry(const Shape& input, std::size_t kernel, std::size_t filters,
                           ConvParams params) {
  if (input.size() != 4) {
    throw ShapeError("conv input must be [batch, L, M, C], got " + shape_to_string(input));
  }
  if (params.stride == 0) throw ShapeError("conv stride must be >= 1");
  if (kernel == 0 || filters == 0) throw ShapeError("conv needs K >= 1 and F >= 1");
  ConvGeometry g;
  g.batch = input[0];
  g.in_h = input[1];
  g.in_w = input[2];
  g.channels = input[3];
  g.kernel = kernel;
  g.filters = filters;
  g.stride = params.stride;
  const auto extent = [&](std::size_t in, std::size_t& out, std::size_t& pad) {
    if (params.padding == Padding::same) {
      out = (in + params.stride - 1) / params.stride;
      const std::size_t need = (out - 1) * params.stride + kernel;
      pad = need > in ? (need - in) / 2 : 0;
    } else {
      if (in < kernel) {
        throw ShapeError("spatial extent " + std::to_string(in) +
                         " smaller than kernel " + std::to_string(kernel));
      }
      out = (in - kernel) / params.stride + 1;
      pad = 0;
    }
  };
  extent(g.in_h, g.out_h, g.pad_top);
  extent(g.in_w, g.out_w, g.pad_left);
  return g;
}

Tensor classical_dense_forward(const Tensor& x, const ClassicalDenseWeights& w,
                               Activation act, OpCount* ops, ClassicalCache* cache) {
  const ConvGeometry g = dense_geometry(x, w.w.shape());
  return classical_run(g, x, w.w, w.b, act, true, ops, cache);
}

Tensor classical_conv_forward(const Tensor& input, const ClassicalConvWeights& w,
                              ConvParams params, Activation act, OpCount* ops,
                              ClassicalCache* cache) {
  if (w.w.rank() != 4) {
    throw ShapeError("conv weight must be [K,K,C,F], got " + shape_to_string(w.w.shape()));
  }
  const ConvGeometry g = conv_geometry(input.shape(), w.w.dim(0), w.w.dim(3), params);
  check_conv_weight(g, w.w.shape(), input.shape());
  return classical_run(g, input, w.w, w.b, act, false, ops, cache);
}

ClassicalGrads classical_backward(const Tensor& grad_out, const ClassicalCache& cache,
                                  const Tensor& w) {
  if (!cache.valid) throw ConfigError("classical_backward called without a forward cache");
  const ConvGeometry& g = cache.geo;
  const Tensor gz = masked_grad(grad_out, cache.output, cache.act);
  const std::size_t F = g.filters, C = g.channels;
  const std::size_t wsize = g.receptive_field() * F;
  if (w.size() != wsize) throw ShapeError("weight does not match cached forward pass");

  ClassicalGrads out{Tensor(cache.input_shape), Tensor(w.shape()), Tensor({F})};
  const std::size_t chunks = chunk_count(g.batch);
  std::vector<std::vector<double>> gw(chunks, std::vector<double>(wsize, 0.0));
  std::vector<std::vector<double>> gb(chunks, std::vector<double>(F, 0.0));
  const double* in = cache.input.data().data();
  const double* wp = w.data().data();
  double* gx = out.grad_x.data().data();

  parallel_chunks(g.batch, [&](std::size_t chunk, std::size_t n0, std::size_t n1) {
    double* gwc = gw[chunk].data();
    double* gbc = gb[chunk].data();
    for (std::size_t n = n0; n < n1; ++n)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const double* go = gz.data().data() + ((n * g.out_h + oy) * g.out_w + ox) * F;
          for (std::size_t f = 0; f < F; ++f) gbc[f] += go[f];
          for_each_tap(g, n, oy, ox, [&](std::size_t j0, std::size_t base) {
            for (std::size_t c = 0; c < C; ++c) {
              const double xv = in[base + c];
              const double* wr = wp + (j0 + c) * F;
              double* gwr = gwc + (j0 + c) * F;
              double acc = 0.0;
              for (std::size_t f = 0; f < F; ++f) {
                gwr[f] += xv * go[f];
                acc += wr[f] * go[f];
              }
              gx[base + c] += acc;
            }
          });
        }
  });
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < wsize; ++i) out.grad_w[i] += gw[c][i];
    for (std::size_t f = 0; f < F; ++f) out.grad_b[f] += gb[c][f];
  }
  return out;
}

double log_magnitude(double x, MathMode math, double sentinel) {
  const double a = std::abs(x);
  if (math == MathMode::approx) {
    const float af = static_cast<float>(a);
    if (!(af >= std::numeric_limits<float>::min())) return sentinel;
    return std::max<double>(approx::ln_approx(af), sentinel);
  }
  if (!(a >= kLnUnderflow)) return sentinel;
  return std::max(std::log(a), sentinel);
}

namespace {

inline double exp_term(double m, MathMode math) {
  if (math == MathMode::approx) return approx::exp_approx(static_cast<float>(m));
  return std::exp(m);
}

Tensor bm_run(const ConvGeometry& g, const Tensor& x, const BMWeights& w, Activation act,
              MathMode math, bool dense, OpCount* ops, BMCache* cache) {
  const std::size_t F = g.filters, C = g.channels;
  if (w.vplus.size() != g.receptive_field() * F || w.vminus.shape() != w.vplus.shape()) {
    throw ShapeError("BM weight banks " + shape_to_string(w.vplus.shape()) + "/" +
                     shape_to_string(w.vminus.shape()) + " do not match the input");
  }
  check_bias(w.v, F);

  const double S = w.neg_sentinel;
  std::vector<double> lnx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) lnx[i] = log_magnitude(x[i], math, S);

  Tensor out(output_shape(g, dense));
  const std::size_t total = g.batch * g.out_h * g.out_w * F;
  std::vector<double> terms(cache ? total * 4 : 0);
  std::vector<std::int32_t> winner(cache ? total * 4 : 0);

  const double* in = x.data().data();
  const double* vp = w.vplus.data().data();
  const double* vm = w.vminus.data().data();
  const double* bias = w.v.data().data();
  constexpr double kNone = -std::numeric_limits<double>::infinity();

  parallel_chunks(g.batch, [&](std::size_t, std::size_t n0, std::size_t n1) {
    // best[k * F + f]: running max of term k; k = 0 (x+,V+), 1 (x+,V-),
    // 2 (x-,V+), 3 (x-,V-).
    std::vector<double> best(4 * F);
    std::vector<std::int32_t> arg(4 * F);
    for (std::size_t n = n0; n < n1; ++n)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          std::fill(best.begin(), best.end(), kNone);
          std::fill(arg.begin(), arg.end(), -1);
          for_each_tap(g, n, oy, ox, [&](std::size_t j0, std::size_t base) {
            for (std::size_t c = 0; c < C; ++c) {
              const double xv = in[base + c];
              if (xv == 0.0) continue;  // ln 0 never wins a max
              const double l = lnx[base + c];
              const std::size_t j = j0 + c;
              const std::size_t slot = xv > 0.0 ? 0 : 2;
              double* bp = best.data() + slot * F;
              double* bm = bp + F;
              std::int32_t* ap = arg.data() + slot * F;
              std::int32_t* am = ap + F;
              const double* vpr = vp + j * F;
              const double* vmr = vm + j * F;
              const auto jj = static_cast<std::int32_t>(j);
              for (std::size_t f = 0; f < F; ++f) {
                const double a = l + vpr[f];
                if (a > bp[f]) {
                  bp[f] = a;
                  ap[f] = jj;
                }
                const double b = l + vmr[f];
                if (b > bm[f]) {
                  bm[f] = b;
                  am[f] = jj;
                }
              }
            }
          });
          const std::size_t obase = ((n * g.out_h + oy) * g.out_w + ox) * F;
          for (std::size_t f = 0; f < F; ++f) {
            double t[4];
            for (std::size_t k = 0; k < 4; ++k) {
              t[k] = arg[k * F + f] >= 0 ? exp_term(best[k * F + f], math) : 0.0;
            }
            out[obase + f] = t[0] - t[1] - t[2] + t[3] + bias[f];
            if (cache) {
              for (std::size_t k = 0; k < 4; ++k) {
                terms[(obase + f) * 4 + k] = t[k];
                winner[(obase + f) * 4 + k] = arg[k * F + f];
              }
            }
          }
        }
  });
  apply_activation(out, act);
  count_bm(g, ops);
  if (cache) {
    cache->geo = g;
    cache->input_shape = x.shape();
    cache->input = x;
    cache->output = out;
    cache->terms = std::move(terms);
    cache->winner = std::move(winner);
    cache->act = act;
    cache->neg_sentinel = S;
    cache->dense = dense;
    cache->valid = true;
  }
  return out;
}

}  // namespace

Tensor bm_dense_forward(const Tensor& x, const BMWeights& w, Activation act, MathMode math,
                        OpCount* ops, BMCache* cache) {
  const ConvGeometry g = dense_geometry(x, w.vplus.shape());
  return bm_run(g, x, w, act, math, true, ops, cache);
}

Tensor bm_conv_forward(const Tensor& input, const BMWeights& w, ConvParams params,
                       Activation act, MathMode math, OpCount* ops, BMCache* cache) {
  if (w.vplus.rank() != 4) {
    throw ShapeError("BM conv weight must be [K,K,C,F], got " +
                     shape_to_string(w.vplus.shape()));
  }
  const ConvGeometry g =
      conv_geometry(input.shape(), w.vplus.dim(0), w.vplus.dim(3), params);
  check_conv_weight(g, w.vplus.shape(), input.shape());
  return bm_run(g, input, w, act, math, false, ops, cache);
}

BMGrads bm_backward(const Tensor& grad_out, const BMCache& cache) {
  if (!cache.valid) throw ConfigError("bm_backward called without a forward cache");
  const ConvGeometry& g = cache.geo;
  const Tensor gz = masked_grad(grad_out, cache.output, cache.act);
  const std::size_t F = g.filters;
  const std::size_t wsize = g.receptive_field() * F;
  const Shape wshape = cache.dense ? Shape{g.channels, F}
                                   : Shape{g.kernel, g.kernel, g.channels, F};

  BMGrads out{Tensor(cache.input_shape), Tensor(wshape), Tensor(wshape), Tensor({F})};
  const std::size_t chunks = chunk_count(g.batch);
  std::vector<std::vector<double>> gvp(chunks, std::vector<double>(wsize, 0.0));
  std::vector<std::vector<double>> gvm(chunks, std::vector<double>(wsize, 0.0));
  std::vector<std::vector<double>> gv(chunks, std::vector<double>(F, 0.0));
  const double* in = cache.input.data().data();
  double* gx = out.grad_x.data().data();
  const double floor = cache.neg_sentinel;
  constexpr double kSign[4] = {1.0, -1.0, -1.0, 1.0};

  parallel_chunks(g.batch, [&](std::size_t chunk, std::size_t n0, std::size_t n1) {
    for (std::size_t n = n0; n < n1; ++n)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const std::size_t obase = ((n * g.out_h + oy) * g.out_w + ox) * F;
          for (std::size_t f = 0; f < F; ++f) {
            const double go = gz[obase + f];
            if (go == 0.0) continue;
            gv[chunk][f] += go;
            for (std::size_t k = 0; k < 4; ++k) {
              const std::int32_t j = cache.winner[(obase + f) * 4 + k];
              const double t = cache.terms[(obase + f) * 4 + k];
              if (j < 0 || t == 0.0) continue;
              const double val = kSign[k] * go * t;
              auto& bank = (k == 0 || k == 2) ? gvp[chunk] : gvm[chunk];
              bank[static_cast<std::size_t>(j) * F + f] += val;
              const std::size_t idx = tap_to_input(g, n, oy, ox, static_cast<std::size_t>(j));
              const double xv = in[idx];
              // Inputs whose log was clamped to the floor are constants.
              if (log_magnitude(xv, MathMode::exact, floor) > floor) gx[idx] += val / xv;
            }
          }
        }
  });
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < wsize; ++i) {
      out.grad_vplus[i] += gvp[c][i];
      out.grad_vminus[i] += gvm[c][i];
    }
    for (std::size_t f = 0; f < F; ++f) out.grad_v[f] += gv[c][f];
  }
  return out;
}

Tensor relu_forward(const Tensor& x) { return relu(x); }

Tensor relu_backward(const Tensor& grad_out, const Tensor& output) {
  return masked_grad(grad_out, output, Activation::relu);
}

BatchNormState BatchNormState::identity(std::size_t channels) {
  BatchNormState s;
  s.gamma = full({channels}, 1.0);
  s.beta = zeros({channels});
  s.running_mean = zeros({channels});
  s.running_var = full({channels}, 1.0);
  return s;
}

Tensor batchnorm_forward(const Tensor& x, BatchNormState& st, bool training,
                         BatchNormCache* cache) {
  const std::size_t C = x.shape().back();
  if (st.gamma.size() != C) {
    throw ShapeError("batchnorm over " + std::to_string(st.gamma.size()) +
                     " channels applied to " + shape_to_string(x.shape()));
  }
  const std::size_t rows = x.size() / C;
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  if (training) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) mean[c] += x[r * C + c];
    for (auto& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = x[r * C + c] - mean[c];
        var[c] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(rows);
    for (std::size_t c = 0; c < C; ++c) {
      st.running_mean[c] = (1.0 - st.momentum) * st.running_mean[c] + st.momentum * mean[c];
      st.running_var[c] = (1.0 - st.momentum) * st.running_var[c] + st.momentum * var[c];
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = st.running_mean[c];
      var[c] = st.running_var[c];
    }
  }
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + st.eps);
  Tensor xhat(x.shape()), y(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      xhat[i] = (x[i] - mean[c]) * inv_std[c];
      y[i] = st.gamma[c] * xhat[i] + st.beta[c];
    }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->training = training;
    cache->valid = true;
  }
  return y;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormState& st) {
  if (!cache.valid) throw ConfigError("batchnorm_backward called without a forward cache");
  if (grad_out.shape() != cache.xhat.shape()) {
    throw ShapeError("batchnorm gradient shape mismatch");
  }
  const std::size_t C = grad_out.shape().back();
  const std::size_t rows = grad_out.size() / C;
  BatchNormGrads out{Tensor(grad_out.shape()), Tensor({C}), Tensor({C})};
  std::vector<double> sum_g(C, 0.0), sum_gx(C, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      sum_g[c] += grad_out[i];
      sum_gx[c] += grad_out[i] * cache.xhat[i];
    }
  for (std::size_t c = 0; c < C; ++c) {
    out.grad_beta[c] = sum_g[c];
    out.grad_gamma[c] = sum_gx[c];
  }
  const double m = static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      const double scale = st.gamma[c] * cache.inv_std[c];
      if (cache.training) {
        out.grad_x[i] = scale * (grad_out[i] - sum_g[c] / m - cache.xhat[i] * sum_gx[c] / m);
      } else {
        out.grad_x[i] = scale * grad_out[i];
      }
    }
  return out;
}

Tensor maxpool_forward(const Tensor& x, std::size_t size, MaxPoolCache* cache) {
  if (x.rank() != 4) throw ShapeError("max-pool input must be [batch, L, M, C]");
  if (size == 0 || x.dim(1) < size || x.dim(2) < size) {
    throw ShapeError("max-pool size " + std::to_string(size) + " does not fit " +
                     shape_to_string(x.shape()));
  }
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t Ho = H / size, Wo = W / size;
  Tensor out({B, Ho, Wo, C});
  std::vector<std::size_t> win(out.size());
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox)
        for (std::size_t c = 0; c < C; ++c) {
          std::size_t best = ((n * H + oy * size) * W + ox * size) * C + c;
          for (std::size_t dy = 0; dy < size; ++dy)
            for (std::size_t dx = 0; dx < size; ++dx) {
              const std::size_t i = ((n * H + oy * size + dy) * W + ox * size + dx) * C + c;
              if (x[i] > x[best]) best = i;
            }
          const std::size_t o = ((n * Ho + oy) * Wo + ox) * C + c;
          out[o] = x[best];
          win[o] = best;
        }
  if (cache) {
    cache->input_shape = x.shape();
    cache->winner = std::move(win);
  }
  return out;
}

Tensor maxpool_backward(const Tensor& grad_out, const MaxPoolCache& cache) {
  if (grad_out.size() != cache.winner.size()) {
    throw ShapeError("max-pool gradient shape mismatch");
  }
  Tensor gx(cache.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) gx[cache.winner[o]] += grad_out[o];
  return gx;
}

Tensor global_avg_pool_forward(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global average pool input must be [batch, L, M, C]");
  const std::size_t B = x.dim(0), HW = x.dim(1) * x.dim(2), C = x.dim(3);
  Tensor out({B, C});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t p = 0; p < HW; ++p)
      for (std::size_t c = 0; c < C; ++c) out[n * C + c] += x[(n * HW + p) * C + c];
  for (auto& v : out.data()) v /= static_cast<double>(HW);
  return out;
}

Tensor global_avg_pool_backward(const Tensor& grad_out, const Shape& input_shape) {
  Tensor gx(input_shape);
  const std::size_t B = input_shape[0], HW = input_shape[1] * input_shape[2],
                    C = input_shape[3];
  if (grad_out.size() != B * C) throw ShapeError("global average pool gradient mismatch");
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t p = 0; p < HW; ++p)
      for (std::size_t c = 0; c < C; ++c)
        gx[(n * HW + p) * C + c] = grad_out[n * C + c] / static_cast<double>(HW);
  return gx;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [batch, classes]");
  const std::size_t B = logits.dim(0), Q = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t n = 0; n < B; ++n) {
    double mx = logits[n * Q];
    for (std::size_t q = 1; q < Q; ++q) mx = std::max(mx, logits[n * Q + q]);
    double z = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      p[n * Q + q] = std::exp(logits[n * Q + q] - mx);
      z += p[n * Q + q];
    }
    for (std::size_t q = 0; q < Q; ++q) p[n * Q + q] /= z;
  }
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || labels.size() != logits.dim(0)) {
    throw ShapeError("logits " + shape_to_string(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = logits.dim(0), Q = logits.dim(1);
  LossResult r;
  r.probs = softmax(logits);
  r.grad = r.probs;
  for (std::size_t n = 0; n < B; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= Q) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(Q) + ")");
    }
    double mx = logits[n * Q];
    for (std::size_t q = 1; q < Q; ++q) mx = std::max(mx, logits[n * Q + q]);
    double z = 0.0;
    for (std::size_t q = 0; q < Q; ++q) z += std::exp(logits[n * Q + q] - mx);
    r.loss += std::log(z) + mx - logits[n * Q + static_cast<std::size_t>(y)];
    r.grad[n * Q + static_cast<std::size_t>(y)] -= 1.0;
  }
  r.loss /= static_cast<double>(B);
  for (auto& g : r.grad.data()) g /= static_cast<double>(B);
  return r;
}

}  // namespace bmnet
