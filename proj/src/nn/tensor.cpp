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

#include "mfccvoc/nn/tensor.hpp"

namespace mfccvoc::nn {

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.batch() != b.batch() || a.time() != b.time()) {
    throw ContractError("concat_channels: " + a.shape() + " vs " + b.shape());
  }
  Matrix m(a.channels() + b.channels(), a.data().cols());
  m << a.data(), b.data();
  return {a.batch(), a.channels() + b.channels(), a.time(), std::move(m)};
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  if (a.channels() != b.channels() || a.time() != b.time()) {
    throw ContractError("concat_batch: " + a.shape() + " vs " + b.shape());
  }
  Matrix m(a.channels(), a.data().cols() + b.data().cols());
  m << a.data(), b.data();
  return {a.batch() + b.batch(), a.channels(), a.time(), std::move(m)};
}

Tensor slice_channels(const Tensor& t, Index first, Index count) {
  if (first < 0 || first + count > t.channels()) throw ContractError("slice_channels out of range for " + t.shape());
  return {t.batch(), count, t.time(), t.data().middleRows(first, count)};
}

Tensor slice_batch(const Tensor& t, Index first, Index count) {
  if (first < 0 || first + count > t.batch()) throw ContractError("slice_batch out of range for " + t.shape());
  return {count, t.channels(), t.time(), t.data().middleCols(first * t.time(), count * t.time())};
}

}  // namespace mfccvoc::nn
