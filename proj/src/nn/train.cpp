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

#include "mfccvoc/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "mfccvoc/binary_io.hpp"
#include "mfccvoc/nn/losses.hpp"

namespace mfccvoc::nn {

Tensor column_batch(const Matrix& columns, const std::vector<Index>& order, Index first, Index count) {
  Tensor out(count, 1, columns.rows());
  for (Index b = 0; b < count; ++b)
    out.example(b) = columns.col(order[static_cast<std::size_t>(first + b)]).transpose();
  return out;
}

Tensor context_batch(const std::vector<Matrix>& contexts, const std::vector<Index>& order, Index first, Index count) {
  const Matrix& c0 = contexts[static_cast<std::size_t>(order[static_cast<std::size_t>(first)])];
  Tensor out(count, c0.rows(), c0.cols());
  for (Index b = 0; b < count; ++b) {
    out.example(b) = contexts[static_cast<std::size_t>(order[static_cast<std::size_t>(first + b)])];
  }
  return out;
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::string out = "epoch,batch,loss_d,loss_g_adv,loss_g_peek\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%td,%.9g,%.9g,%.9g\n", r.epoch, static_cast<std::ptrdiff_t>(r.batch),
                  r.loss_d, r.loss_g_adv, r.loss_g_peek);
    out += line;
  }
  return out;
}

void calibrate_pulse_model(PulseModel& model, const std::vector<Matrix>& contexts, Index batch_size) {
  const Index n = static_cast<Index>(contexts.size());
  if (n == 0) return;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  model.stack().reset_statistics();
  for (Index first = 0; first < n; first += batch_size) {
    model.forward(context_batch(contexts, order, first, std::min(batch_size, n - first)), Mode::calibrate);
  }
}

void calibrate_generator(Generator& generator, const Matrix& smooth, const Matrix& noise, Index batch_size) {
  const Index n = smooth.cols();
  if (n == 0) return;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  generator.stack().reset_statistics();
  for (Index first = 0; first < n; first += batch_size) {
    const Index count = std::min(batch_size, n - first);
    generator.forward(column_batch(noise, order, first, count), column_batch(smooth, order, first, count),
                      Mode::calibrate);
  }
}

namespace {

std::vector<Parameter*> trainable(LayerStack& stack) { return stack.trainable_parameters(); }

}  // namespace

GanTrainResult train_gan(const Matrix& real, const Matrix& smooth, GanPair& pair, const GanTrainConfig& cfg,
                         const std::function<void(const LossRecord&)>& on_batch) {
  const Index n = real.cols();
  const Index len = pair.generator.config().pulse_length;
  if (n == 0) throw ContractError("train_gan: empty dataset");
  if (real.rows() != len || smooth.rows() != len || smooth.cols() != n) {
    throw ContractError("train_gan: real and smooth pulses must both be " + std::to_string(len) + " x N");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw ParameterError("train_gan: batch_size >= 1 and epochs >= 0");

  Generator& g = pair.generator;
  Discriminator& d = pair.discriminator;
  Adam g_opt(trainable(g.stack()), cfg.generator_adam);
  Adam d_opt(trainable(d.stack()), cfg.discriminator_adam);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix noise(len, n);
  auto draw_noise = [&] {
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < len; ++i) noise(i, j) = normal(rng);
  };
  draw_noise();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  GanTrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    if (cfg.resample_noise && epoch > 1) draw_noise();
    Index batch_index = 0;
    for (Index first = 0; first < n; first += cfg.batch_size, ++batch_index) {
      const Index count = std::min(cfg.batch_size, n - first);
      const Tensor x = column_batch(real, order, first, count);
      const Tensor xs = column_batch(smooth, order, first, count);
      const Tensor z = column_batch(noise, order, first, count);

      const Tensor fake = g.forward(z, xs, Mode::train);

      // Discriminator step: real and generated examples share one batch so
      // both see the same normalisation statistics.
      d.stack().zero_grad();
      Vector scores = d.forward(concat_batch(x, fake), Mode::train);
      const DiscriminatorLoss ld = loss_d(scores.head(count), scores.tail(count));
      Vector d_scores(2 * count);
      d_scores << ld.d_real, ld.d_fake;
      d.backward(d_scores, nullptr);
      d_opt.step();

      // Generator step with the discriminator fixed.
      g.stack().zero_grad();
      scores = d.forward(concat_batch(x, fake), Mode::train_frozen);
      const GeneratorLoss lg = loss_g_adv(scores.tail(count));
      const Tensor& peek = d.peek();
      const Tensor real_peek = slice_batch(peek, 0, count);
      const Tensor fake_peek = slice_batch(peek, count, count);
      const PeekLoss lp = loss_g_peek(real_peek.data(), fake_peek.data());

      Vector g_scores = Vector::Zero(2 * count);
      g_scores.tail(count) = cfg.adversarial_weight * lg.d_fake;
      Tensor g_peek(2 * count, peek.channels(), peek.time());
      g_peek.data().rightCols(fake_peek.data().cols()) = cfg.peek_weight * lp.d_fake;
      const Tensor dx = d.backward(g_scores, &g_peek);
      d.stack().zero_grad();
      g.backward(slice_batch(dx, count, count));
      g_opt.step();

      const LossRecord rec{epoch, batch_index, ld.value, lg.value, lp.value};
      if (!std::isfinite(rec.loss_d) || !std::isfinite(rec.loss_g_adv) || !std::isfinite(rec.loss_g_peek)) {
        throw InvariantError("train_gan: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      result.history.push_back(rec);
      if (on_batch) on_batch(rec);
    }
    calibrate_generator(g, smooth, noise, cfg.batch_size);
    pair.round_to_float32();
    if (!cfg.checkpoint_prefix.empty()) {
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, ".epoch%02d.nnw", epoch);
      const std::string path = cfg.checkpoint_prefix + suffix;
      pair.save(path);
      result.checkpoints.push_back(path);
    }
    if (!cfg.loss_csv.empty()) io::write_file_atomic(cfg.loss_csv, loss_history_csv(result.history));
  }
  return result;
}

std::vector<double> train_pulse_model(const std::vector<Matrix>& contexts, const Matrix& targets, PulseModel& model,
                                      const PulseTrainConfig& cfg) {
  const Index n = targets.cols();
  if (n == 0 || static_cast<Index>(contexts.size()) != n) {
    throw ContractError("train_pulse_model: need one context per target pulse");
  }
  if (targets.rows() != model.config().pulse_length) {
    throw ContractError("train_pulse_model: target pulses must have length " +
                        std::to_string(model.config().pulse_length));
  }
  Adam opt(model.stack().trainable_parameters(), cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> epoch_loss;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    Index batches = 0;
    for (Index first = 0; first < n; first += cfg.batch_size, ++batches) {
      const Index count = std::min(cfg.batch_size, n - first);
      const Tensor ctx = context_batch(contexts, order, first, count);
      const Tensor target = column_batch(targets, order, first, count);
      model.stack().zero_grad();
      const Tensor y = model.forward(ctx, Mode::train);
      const RegressionLoss loss = mse_loss(y.data(), target.data());
      if (!std::isfinite(loss.value)) throw InvariantError("train_pulse_model: non-finite loss");
      model.backward(Tensor(count, 1, y.time(), loss.d_output));
      opt.step();
      total += loss.value;
    }
    epoch_loss.push_back(total / static_cast<double>(batches));
  }
  calibrate_pulse_model(model, contexts, cfg.batch_size);
  model.stack().round_to_float32();
  return epoch_loss;
}

}  // namespace mfccvoc::nn
