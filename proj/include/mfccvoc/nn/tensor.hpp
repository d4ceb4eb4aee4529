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

#include <string>

#include <Eigen/Core>

#include "mfccvoc/errors.hpp"

namespace mfccvoc::nn {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A batch of (channels x time) examples held in one channels x (batch * time)
// matrix. Example b owns columns [b * time, (b + 1) * time), so per-time-step
// layers reduce to a single matrix product over the whole batch.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Index batch, Index channels, Index time)
      : batch_(batch), channels_(channels), time_(time), data_(Matrix::Zero(channels, batch * time)) {}
  Tensor(Index batch, Index channels, Index time, Matrix data)
      : batch_(batch), channels_(channels), time_(time), data_(std::move(data)) {
    if (data_.rows() != channels || data_.cols() != batch * time) {
      throw ContractError("tensor data is " + std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()) +
                          ", expected " + shape_string(batch, channels, time));
    }
  }

  Index batch() const { return batch_; }
  Index channels() const { return channels_; }
  Index time() const { return time_; }
  Index size() const { return data_.size(); }

  Matrix& data() { return data_; }
  const Matrix& data() const { return data_; }

  auto example(Index b) { return data_.middleCols(b * time_, time_); }
  auto example(Index b) const { return data_.middleCols(b * time_, time_); }

  // Same per-example memory, new (channels, time) split.
  Tensor reshaped(Index channels, Index time) const {
    if (channels * time != channels_ * time_) {
      throw ContractError("cannot reshape " + shape() + " to " + shape_string(batch_, channels, time));
    }
    Matrix m = Eigen::Map<const Matrix>(data_.data(), channels, batch_ * time);
    return {batch_, channels, time, std::move(m)};
  }

  bool same_shape(const Tensor& o) const {
    return batch_ == o.batch_ && channels_ == o.channels_ && time_ == o.time_;
  }
  std::string shape() const { return shape_string(batch_, channels_, time_); }

  static std::string shape_string(Index b, Index c, Index t) {
    return "(" + std::to_string(b) + ", " + std::to_string(c) + ", " + std::to_string(t) + ")";
  }

 private:
  Index batch_ = 0;
  Index channels_ = 0;
  Index time_ = 0;
  Matrix data_;
};

// Stacks channels of equally shaped tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Stacks batches of equally shaped tensors.
Tensor concat_batch(const Tensor& a, const Tensor& b);
// Rows [first, first + count) of every example.
Tensor slice_channels(const Tensor& t, Index first, Index count);
// Examples [first, first + count).
Tensor slice_batch(const Tensor& t, Index first, Index count);

}  // namespace mfccvoc::nn
