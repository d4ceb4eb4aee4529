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

// Central finite-difference checks of every backward pass.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfccvoc/nn/layers.hpp"

namespace mfccvoc::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Gradient magnitudes below this are compared absolutely: the relative
  // error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // Entries per tensor checked; larger tensors are sampled.
  Index max_entries = 48;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  Index checked = 0;
  // Entries whose +-step perturbation moved a ReLU/LReLU input across zero;
  // the function is not differentiable there at this step size, so they
  // are left out of max_rel_error. A check with more than a tenth of its
  // entries skipped fails.
  Index skipped = 0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

// Compares `analytic` with central differences of loss() over entries of
// `value` (perturbed in place and restored). Returns the largest relative
// error and adds the entries checked to `checked`. When `signature` is given
// it is read after every loss() call; entries where it changes are counted
// in `skipped` instead of compared.
double compare_gradient(const std::function<double()>& loss, Matrix& value, const Matrix& analytic,
                        const GradCheckOptions& opts, std::mt19937_64& rng, Index& checked,
                        const std::function<std::uint64_t()>& signature = {}, Index* skipped = nullptr);

// One layer on a random input, loss = sum(w * y) for a fixed random w.
GradCheckResult check_layer(const std::string& name, const LayerSpec& spec, Index batch, Index time, Mode mode,
                            const GradCheckOptions& opts = {});

// Every layer kind plus the GAN losses end to end and the pulse model.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts = {});

}  // namespace mfccvoc::nn
