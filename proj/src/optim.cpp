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

#include "bmnet/optim.hpp"

#include <cmath>

#include "bmnet/error.hpp"

namespace bmnet {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m = zeros(param.shape());
    state.v = zeros(param.shape());
  }
  if (grad.shape() != param.shape() || state.m.shape() != param.shape()) {
    throw ShapeError("adam state/gradient shape does not match parameter " +
                     shape_to_string(param.shape()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (states_.size() != params.size()) states_.assign(params.size(), AdamState{});
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_step(*params[i].value, *params[i].grad, states_[i], cfg_);
  }
}

}  // namespace bmnet
