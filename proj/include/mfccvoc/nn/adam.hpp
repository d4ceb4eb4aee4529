// Copyright 2026 The mfccvoc Authors. All Rights Reserved.
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

#include <cmath>
#include <vector>

#include "mfccvoc/nn/layers.hpp"

namespace mfccvoc::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

// One bias-corrected Adam update of `param` in place.
template <typename Derived, typename GradDerived>
void adam_step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<GradDerived>& grad, AdamState& state,
               const AdamConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw ContractError("adam_step: gradient shape does not match parameter");
  }
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
    state.step = 0;
  }
  ++state.step;
  const auto g = grad.template cast<double>();
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Matrix update =
      cfg.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.epsilon);
  param -= update.cast<Scalar>();
}

// Adam over a fixed list of parameters; one state per parameter.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);
  // Applies the accumulated gradients. A zero learning rate leaves every
  // parameter untouched.
  void step();
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamState> states_;
  AdamConfig cfg_;
};

}  // namespace mfccvoc::nn
