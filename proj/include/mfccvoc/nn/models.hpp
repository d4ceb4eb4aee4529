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

// The network topologies: the smooth-pulse model, the residual GAN pair and
// the autoregressive F0 classifier.

#include <cstdint>
#include <string>
#include <vector>

#include "mfccvoc/nn/layers.hpp"
#include "mfccvoc/nn/serialize.hpp"

namespace mfccvoc::nn {

// Runs layers [first, last) of a stack forward or backward.
Tensor forward_layers(LayerStack& stack, Tensor x, Mode mode, std::size_t first, std::size_t last);
Tensor backward_layers(LayerStack& stack, Tensor g, std::size_t first, std::size_t last);

std::vector<Layer*> layer_pointers(LayerStack& stack);
std::vector<const Layer*> layer_pointers(const LayerStack& stack);

// ---------------------------------------------------------------------------

struct PulseModelConfig {
  Index cond_dim = 22;
  Index context = 40;
  Index gru_units = 50;
  Index pulse_length = 400;
  Index conv_channels = 100;
  Index conv_layers = 4;
  Index width = 15;
};

// GRU(50, ReLU) over the context window, last state -> BN -> Dense(400) ->
// ReLU -> BN -> reshape to a 1-channel sequence -> 4x [Conv(100) LReLU BN] ->
// Conv(1) LReLU BN.
class PulseModel {
 public:
  explicit PulseModel(PulseModelConfig cfg = {});

  // context: (batch, cond_dim, context) -> (batch, 1, pulse_length)
  Tensor forward(const Tensor& context, Mode mode);
  Tensor backward(const Tensor& grad);

  const PulseModelConfig& config() const { return cfg_; }
  LayerStack& stack() { return stack_; }
  const LayerStack& stack() const { return stack_; }

  void save(const std::string& path) const;
  // Rebuilds the topology from the file and loads it.
  static PulseModel load(const std::string& path);

 private:
  static constexpr std::size_t kReshapeAt = 5;  // layers before the reshape
  PulseModelConfig cfg_;
  LayerStack stack_;
};

// ---------------------------------------------------------------------------

struct GeneratorConfig {
  Index channels = 100;
  Index width = 15;
  Index hidden_layers = 3;
  Index pulse_length = 400;
  // The output layer is literally "tanh, BN"; false swaps to BN then tanh.
  bool bn_after_tanh = true;
  // Drops tanh and BN from the output layer, making G linear when
  // hidden_layers = 0. Only used for optimisation sanity checks.
  bool linear_output = false;
};

struct GeneratorGrad {
  Tensor noise;
  Tensor smooth;
};

// Residual generator: every conv sees the smooth pulse x^ as an extra input
// channel; the output is x' = x^ + residual.
class Generator {
 public:
  explicit Generator(GeneratorConfig cfg = {});

  // noise, smooth: (batch, 1, pulse_length)
  Tensor forward(const Tensor& noise, const Tensor& smooth, Mode mode);
  const Tensor& residual() const { return residual_; }
  GeneratorGrad backward(const Tensor& grad_output);

  const GeneratorConfig& config() const { return cfg_; }
  LayerStack& stack() { return stack_; }
  const LayerStack& stack() const { return stack_; }
  // Layer index where each conv block starts.
  const std::vector<std::size_t>& block_starts() const { return block_starts_; }

  static std::vector<LayerSpec> topology(const GeneratorConfig& cfg);

 private:
  GeneratorConfig cfg_;
  LayerStack stack_;
  std::vector<std::size_t> block_starts_;
  Tensor smooth_;
  Tensor residual_;
};

// ---------------------------------------------------------------------------

struct DiscriminatorConfig {
  std::vector<Index> channels{64, 128, 256, 128, 1};
  std::vector<Index> widths{7, 7, 7, 5, 3};
  std::vector<Index> strides{3, 3, 3, 2, 2};
  std::size_t peek_block = 2;  // third conv block
  Index pulse_length = 400;
};

// Input is [x; log|FFT(x)|] as two channels. Each block is Conv -> LReLU ->
// BN; the last block's remaining time steps are averaged to one score.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorConfig cfg = {});

  // x: (batch, 1, pulse_length) -> one score per example.
  Vector forward(const Tensor& x, Mode mode);
  // Activations of the peek block from the latest forward.
  const Tensor& peek() const { return peek_; }
  // Gradient with respect to x. d_peek may be null.
  Tensor backward(const Vector& d_scores, const Tensor* d_peek);

  const DiscriminatorConfig& config() const { return cfg_; }
  LayerStack& stack() { return stack_; }
  const LayerStack& stack() const { return stack_; }
  // Output length of every block for the configured pulse length.
  std::vector<Index> block_lengths() const;

  static std::vector<LayerSpec> topology(const DiscriminatorConfig& cfg);

 private:
  std::size_t peek_end() const { return 3 * cfg_.peek_block + 4; }
  DiscriminatorConfig cfg_;
  LayerStack stack_;  // layer 0 is the FFT-magnitude layer
  Tensor peek_;
  Index final_length_ = 0;
  Index batch_ = 0;
};

// ---------------------------------------------------------------------------

struct GanPair {
  Generator generator;
  Discriminator discriminator;

  GanPair(GeneratorConfig g = {}, DiscriminatorConfig d = {}) : generator(g), discriminator(std::move(d)) {}

  void initialize(std::uint64_t seed);
  void round_to_float32();
  std::vector<Layer*> layers();
  std::vector<const Layer*> layers() const;
  void save(const std::string& path) const;
  // Rebuilds both networks from the file's layer list, then loads them.
  static GanPair load(const std::string& path);
  static GanPair from_records(const std::vector<LayerRecord>& records);
};

// ---------------------------------------------------------------------------

struct F0NetConfig {
  Index inputs = 20;
  Index dense_units = 256;
  Index blstm_units = 128;
  Index lstm_units = 128;
  Index classes = 256;
};

struct F0NetOutput {
  std::vector<int> classes;  // per frame
  Matrix probabilities;      // classes x frames
};

// Standardize -> Dense(256) tanh -> Dense(256) tanh -> BLSTM(128) ->
// LSTM(128) fed the previous decoded class as a one-hot vector ->
// Dense(256) -> softmax. Decoding is greedy; ties go to the lowest class.
class F0Net {
 public:
  explicit F0Net(F0NetConfig cfg = {});

  // features: inputs x frames
  F0NetOutput decode(const Matrix& features);

  const F0NetConfig& config() const { return cfg_; }
  LayerStack& stack() { return stack_; }
  const LayerStack& stack() const { return stack_; }

  // Layer indices.
  static constexpr std::size_t kStandardize = 0;
  static constexpr std::size_t kBlstm = 5;
  static constexpr std::size_t kLstm = 6;
  static constexpr std::size_t kOutput = 7;

  void save(const std::string& path) const;
  static F0Net load(const std::string& path);

 private:
  F0NetConfig cfg_;
  LayerStack stack_;
};

}  // namespace mfccvoc::nn
