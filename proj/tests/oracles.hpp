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

// Slow, obviously-correct reference implementations shared by the unit tests
// and the acceptance suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "bmnet/layers.hpp"
#include "bmnet/tensor.hpp"

namespace oracle {

using bmnet::Shape;
using bmnet::Tensor;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// y[b,q] = sum_p x[b,p] w[p,q] + b[q]
inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t B = x.dim(0), P = w.dim(0), Q = w.dim(1);
  Tensor y({B, Q});
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t q = 0; q < Q; ++q) {
      double s = b[q];
      for (std::size_t p = 0; p < P; ++p) s += x.at({i, p}) * w.at({p, q});
      y.at({i, q}) = s;
    }
  return y;
}

// Input pixel feeding output (oy, ox) through tap (ky, kx), or false when it
// falls into the zero padding.
inline bool tap(const bmnet::ConvGeometry& g, std::size_t oy, std::size_t ox, std::size_t ky,
                std::size_t kx, std::size_t& iy, std::size_t& ix) {
  const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
  const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad_left);
  if (y < 0 || x < 0 || y >= static_cast<long>(g.in_h) || x >= static_cast<long>(g.in_w))
    return false;
  iy = static_cast<std::size_t>(y);
  ix = static_cast<std::size_t>(x);
  return true;
}

inline Tensor conv(const Tensor& x, const Tensor& w, const Tensor& b, bmnet::ConvParams p) {
  const std::size_t K = w.dim(0), F = w.dim(3);
  const auto g = bmnet::conv_geometry(x.shape(), K, F, p);
  Tensor y({g.batch, g.out_h, g.out_w, F});
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t f = 0; f < F; ++f) {
          double s = b[f];
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx)
              for (std::size_t c = 0; c < g.channels; ++c) {
                std::size_t iy, ix;
                if (tap(g, oy, ox, ky, kx, iy, ix))
                  s += x.at({n, iy, ix, c}) * w.at({ky, kx, c, f});
              }
          y.at({n, oy, ox, f}) = s;
        }
  return y;
}

// One BM neuron straight from its definition: inputs and weights are split by
// sign, ln 0 is the sentinel, and each of the four terms is exp of a max.
inline double bm_neuron(const std::vector<double>& x, const std::vector<double>& vplus,
                        const std::vector<double>& vminus, double v, double sentinel) {
  auto lnpos = [&](double t) { return t > 0 ? std::max(std::log(t), sentinel) : sentinel; };
  const double lo = -std::numeric_limits<double>::infinity();
  double m[4] = {lo, lo, lo, lo};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xp = lnpos(x[j]), xm = lnpos(-x[j]);
    if (x[j] > 0) {
      m[0] = std::max(m[0], xp + vplus[j]);
      m[1] = std::max(m[1], xp + vminus[j]);
    } else if (x[j] < 0) {
      m[2] = std::max(m[2], xm + vplus[j]);
      m[3] = std::max(m[3], xm + vminus[j]);
    }
  }
  auto e = [](double t) { return std::isinf(t) ? 0.0 : std::exp(t); };
  return e(m[0]) - e(m[1]) - e(m[2]) + e(m[3]) + v;
}

inline Tensor bm_dense(const Tensor& x, const bmnet::BMWeights& w) {
  const std::size_t B = x.dim(0), P = w.vplus.dim(0), Q = w.vplus.dim(1);
  Tensor y({B, Q});
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t q = 0; q < Q; ++q) {
      std::vector<double> xs(P), vp(P), vm(P);
      for (std::size_t p = 0; p < P; ++p) {
        xs[p] = x.at({i, p});
        vp[p] = w.vplus.at({p, q});
        vm[p] = w.vminus.at({p, q});
      }
      y.at({i, q}) = bm_neuron(xs, vp, vm, w.v[q], w.neg_sentinel);
    }
  return y;
}

inline Tensor bm_conv(const Tensor& x, const bmnet::BMWeights& w, bmnet::ConvParams p) {
  const std::size_t K = w.vplus.dim(0), F = w.vplus.dim(3);
  const auto g = bmnet::conv_geometry(x.shape(), K, F, p);
  Tensor y({g.batch, g.out_h, g.out_w, F});
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t f = 0; f < F; ++f) {
          std::vector<double> xs, vp, vm;
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx)
              for (std::size_t c = 0; c < g.channels; ++c) {
                std::size_t iy, ix;
                if (!tap(g, oy, ox, ky, kx, iy, ix)) continue;
                xs.push_back(x.at({n, iy, ix, c}));
                vp.push_back(w.vplus.at({ky, kx, c, f}));
                vm.push_back(w.vminus.at({ky, kx, c, f}));
              }
          y.at({n, oy, ox, f}) = bm_neuron(xs, vp, vm, w.v[f], w.neg_sentinel);
        }
  return y;
}

// Central difference of `loss` with respect to every element of `t`.
inline Tensor numeric_grad(Tensor& t, const std::function<double()>& loss, double h = 1e-5) {
  Tensor g(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t[i];
    t[i] = keep + h;
    const double up = loss();
    t[i] = keep - h;
    const double down = loss();
    t[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// Largest elementwise |a-b| / max(|a|, |b|, floor).
inline double max_rel_error(const Tensor& a, const Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace oracle
