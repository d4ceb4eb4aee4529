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

// Least-squares GAN objectives. Each returns the scalar loss together with
// its gradient with respect to the scores or activations it was given.

#include "mfccvoc/nn/tensor.hpp"

namespace mfccvoc::nn {

struct DiscriminatorLoss {
  double value = 0.0;
  Vector d_real;
  Vector d_fake;
};

// 1/2 mean((D(x) - 1)^2) + 1/2 mean(D(x')^2)
DiscriminatorLoss loss_d(const Vector& real_scores, const Vector& fake_scores);

struct GeneratorLoss {
  double value = 0.0;
  Vector d_fake;
};

// 1/2 mean((D(x') - 1)^2)
GeneratorLoss loss_g_adv(const Vector& fake_scores);

struct PeekLoss {
  double value = 0.0;
  Matrix d_fake;  // the real branch is a constant
};

// 1/2 mean((D_L(x) - D_L(x'))^2) over every activation element.
PeekLoss loss_g_peek(const Matrix& real_acts, const Matrix& fake_acts);

// Mean squared error 1/2 mean((y - target)^2), used for the pulse model.
struct RegressionLoss {
  double value = 0.0;
  Matrix d_output;
};
RegressionLoss mse_loss(const Matrix& output, const Matrix& target);

}  // namespace mfccvoc::nn
