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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfccvoc/nn/adam.hpp"
#include "mfccvoc/nn/models.hpp"

namespace mfccvoc::nn {

struct GanTrainConfig {
  int epochs = 20;
  Index batch_size = 64;
  AdamConfig generator_adam{};
  AdamConfig discriminator_adam{};
  double adversarial_weight = 1.0;
  double peek_weight = 1.0;
  std::uint64_t seed = 1;
  // Draw fresh noise for every example each epoch; otherwise one fixed draw.
  bool resample_noise = true;
  // Reshuffle example order every epoch.
  bool shuffle = true;
  // Per-epoch checkpoints go to <prefix>.epochNN.nnw when nonempty.
  std::string checkpoint_prefix;
  // Loss history CSV (epoch,batch,loss_d,loss_g_adv,loss_g_peek) when nonempty.
  std::string loss_csv;
};

struct LossRecord {
  int epoch = 0;
  Index batch = 0;
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double loss_g_peek = 0.0;
};

struct GanTrainResult {
  std::vector<LossRecord> history;
  std::vector<std::string> checkpoints;
};

// real, smooth: pulse_length x examples (x and x^ column by column).
// Alternates one discriminator update on loss_d with one generator update on
// w_adv * loss_g_adv + w_peek * loss_g_peek while the discriminator is fixed.
// Parameters are rounded to float32 at every epoch end so a checkpoint file
// and the in-memory model agree exactly. A non-finite loss throws
// InvariantError; checkpoints already written are kept.
GanTrainResult train_gan(const Matrix& real, const Matrix& smooth, GanPair& pair, const GanTrainConfig& cfg,
                         const std::function<void(const LossRecord&)>& on_batch = {});

std::string loss_history_csv(const std::vector<LossRecord>& history);

struct PulseTrainConfig {
  int epochs = 30;
  Index batch_size = 64;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 1;
};

// Fits the pulse model to targets (pulse_length x examples) from contexts
// (one cond_dim x context block per example) by mean squared error. Returns
// the mean loss of every epoch.
std::vector<double> train_pulse_model(const std::vector<Matrix>& contexts, const Matrix& targets, PulseModel& model,
                                      const PulseTrainConfig& cfg);

// Stacks contexts [first, first + count) into one batch tensor.
// Replace the batch-norm running averages with exact statistics of the
// given data under the current weights. The momentum averages trail the
// weights during training, which makes eval-mode output drift.
void calibrate_pulse_model(PulseModel& model, const std::vector<Matrix>& contexts, Index batch_size);
void calibrate_generator(Generator& generator, const Matrix& smooth, const Matrix& noise, Index batch_size);

Tensor context_batch(const std::vector<Matrix>& contexts, const std::vector<Index>& order, Index first, Index count);

// Columns picked by `order` as a (count, 1, rows) tensor.
Tensor column_batch(const Matrix& columns, const std::vector<Index>& order, Index first, Index count);

}  // namespace mfccvoc::nn
