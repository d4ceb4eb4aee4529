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

// Layers with forward and exact reverse-mode gradients. Each layer keeps the
// cache of its most recent forward pass; backward() consumes it and
// accumulates parameter gradients.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfccvoc/nn/tensor.hpp"

namespace mfccvoc::nn {

enum class LayerKind : std::uint32_t {
  dense = 1,
  conv1d = 2,
  gru = 3,
  lstm = 4,
  blstm = 5,
  batch_norm = 6,
  lrelu = 7,
  relu = 8,
  tanh = 9,
  softmax = 10,
  fft_magnitude = 11,
  standardize = 12,
};

std::string_view kind_name(LayerKind kind);

enum class Padding : int { same = 0, valid = 1 };
enum class Activation : int { tanh = 0, relu = 1 };

// train: batch statistics, running averages updated.
// train_frozen: batch statistics, running averages untouched.
// eval: running averages.
// calibrate: normalise with batch statistics and accumulate exact population
// statistics (since the last reset_statistics()) into the running buffers.
enum class Mode { train, train_frozen, eval, calibrate };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Index in_channels = 0;
  Index out_channels = 0;  // hidden size for recurrent layers
  Index width = 1;
  Index stride = 1;
  Padding padding = Padding::same;
  double slope = 0.2;
  double epsilon = 1e-5;
  double momentum = 0.99;
  double scale = 0.5;
  Index length = 400;
  Activation activation = Activation::tanh;
  bool return_sequences = true;

  static LayerSpec dense(Index in, Index out);
  static LayerSpec conv1d(Index in, Index out, Index width, Index stride = 1, Padding padding = Padding::same);
  static LayerSpec gru(Index in, Index hidden, Activation activation = Activation::tanh,
                       bool return_sequences = true);
  static LayerSpec lstm(Index in, Index hidden);
  static LayerSpec blstm(Index in, Index hidden);
  static LayerSpec batch_norm(Index channels, double epsilon = 1e-5, double momentum = 0.99);
  static LayerSpec lrelu(double slope = 0.2);
  static LayerSpec relu();
  static LayerSpec tanh();
  static LayerSpec softmax();
  static LayerSpec fft_magnitude(Index length = 400, double epsilon = 1e-6, double scale = 0.5);
  static LayerSpec standardize(Index channels);

  // The hyperparameters that define this kind, in a fixed order.
  std::vector<std::pair<std::string, double>> hyperparameters() const;
  static LayerSpec from_hyperparameters(LayerKind kind, const std::vector<std::pair<std::string, double>>& hp);

  // Channels produced for an input with in_channels (activations pass through).
  Index output_channels(Index input_channels) const;

  std::string describe() const;
  bool matches(const LayerSpec& other) const { return kind == other.kind && hyperparameters() == other.hyperparameters(); }
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(std::move(spec)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const LayerSpec& spec() const { return spec_; }
  LayerKind kind() const { return spec_.kind; }

  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  // Throws ContractError when called before forward().
  virtual Tensor backward(const Tensor& grad_out) = 0;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;

  void zero_grad();
  // Glorot-uniform weights, zero biases, unit BN scale; LSTM forget bias 1.
  virtual void initialize(std::mt19937_64& rng);

  // Hash of which side of a kink (ReLU, LReLU) every cached pre-activation
  // lies on; 0 for smooth layers. Finite-difference checks use it to spot
  // perturbations that cross a kink.
  virtual std::uint64_t kink_signature() const { return 0; }

  // Starts a fresh Mode::calibrate accumulation; no-op for stateless layers.
  virtual void reset_statistics() {}

 protected:
  Parameter& add_parameter(std::string name, Index rows, Index cols, bool trainable = true);
  void require_forward(std::string_view who) const;
  void check_channels(const Tensor& x, Index expected) const;

  LayerSpec spec_;
  std::vector<Parameter> params_;
  bool has_forward_ = false;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

// LSTM with a single-step interface used by autoregressive decoding.
class LstmLayer : public Layer {
 public:
  explicit LstmLayer(const LayerSpec& spec);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void initialize(std::mt19937_64& rng) override;

  struct State {
    Matrix h;  // hidden x batch
    Matrix c;
  };
  State initial_state(Index batch) const;
  // Advances the state by one step on x (in_channels x batch); returns h.
  const Matrix& step(const Eigen::Ref<const Matrix>& x, State& state) const;

 private:
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

// Owns an ordered list of layers.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(LayerStack&&) = default;
  LayerStack& operator=(LayerStack&&) = default;

  Layer& add(const LayerSpec& spec);
  void push_back(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  std::size_t size() const { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }
  const Layer& operator[](std::size_t i) const { return *layers_[i]; }

  std::vector<LayerSpec> specs() const;
  std::vector<Parameter*> trainable_parameters();
  std::vector<Parameter*> all_parameters();
  Index parameter_count() const;
  void zero_grad();
  void initialize(std::uint64_t seed);
  std::uint64_t kink_signature() const;
  void reset_statistics();
  // Rounds every stored value to float32 precision, the on-disk precision.
  void round_to_float32();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace mfccvoc::nn
