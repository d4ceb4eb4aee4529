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

#include "mfccvoc/nn/losses.hpp"

#include <string>

namespace mfccvoc::nn {

namespace {

void require_nonempty(Index n, const char* who) {
  if (n == 0) throw ContractError(std::string(who) + ": empty batch");
}

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

DiscriminatorLoss loss_d(const Vector& real_scores, const Vector& fake_scores) {
  require_nonempty(real_scores.size(), "loss_d");
  require_nonempty(fake_scores.size(), "loss_d");
  const double nr = static_cast<double>(real_scores.size());
  const double nf = static_cast<double>(fake_scores.size());
  DiscriminatorLoss out;
  const Vector er = real_scores.array() - 1.0;
  out.value = 0.5 * er.squaredNorm() / nr + 0.5 * fake_scores.squaredNorm() / nf;
  out.d_real = er / nr;
  out.d_fake = fake_scores / nf;
  return out;
}

GeneratorLoss loss_g_adv(const Vector& fake_scores) {
  require_nonempty(fake_scores.size(), "loss_g_adv");
  const double n = static_cast<double>(fake_scores.size());
  const Vector e = fake_scores.array() - 1.0;
  return {0.5 * e.squaredNorm() / n, e / n};
}

PeekLoss loss_g_peek(const Matrix& real_acts, const Matrix& fake_acts) {
  if (real_acts.rows() != fake_acts.rows() || real_acts.cols() != fake_acts.cols()) {
    throw ContractError("loss_g_peek: real activations " + dims(real_acts) + " vs fake " + dims(fake_acts));
  }
  require_nonempty(real_acts.size(), "loss_g_peek");
  const double n = static_cast<double>(real_acts.size());
  const Matrix diff = fake_acts - real_acts;
  return {0.5 * diff.squaredNorm() / n, diff / n};
}

RegressionLoss mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ContractError("mse_loss: output " + dims(output) + " vs target " + dims(target));
  }
  require_nonempty(output.size(), "mse_loss");
  const double n = static_cast<double>(output.size());
  const Matrix diff = output - target;
  return {0.5 * diff.squaredNorm() / n, diff / n};
}

}  // namespace mfccvoc::nn
