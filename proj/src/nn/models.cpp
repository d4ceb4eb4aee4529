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

#include "mfccvoc/nn/models.hpp"

namespace mfccvoc::nn {

Tensor forward_layers(LayerStack& stack, Tensor x, Mode mode, std::size_t first, std::size_t last) {
  for (std::size_t i = first; i < last; ++i) {
    x = stack[i].forward(x, mode);
#ifndef NDEBUG
    if (!x.data().allFinite()) {
      throw InvariantError("non-finite output from layer " + std::to_string(i) + " (" +
                           std::string(kind_name(stack[i].kind())) + ")");
    }
#endif
  }
  return x;
}

Tensor backward_layers(LayerStack& stack, Tensor g, std::size_t first, std::size_t last) {
  for (std::size_t i = last; i-- > first;) g = stack[i].backward(g);
  return g;
}

std::vector<Layer*> layer_pointers(LayerStack& stack) {
  std::vector<Layer*> out;
  for (std::size_t i = 0; i < stack.size(); ++i) out.push_back(&stack[i]);
  return out;
}

std::vector<const Layer*> layer_pointers(const LayerStack& stack) {
  std::vector<const Layer*> out;
  for (std::size_t i = 0; i < stack.size(); ++i) out.push_back(&stack[i]);
  return out;
}

namespace {

std::vector<std::size_t> conv_indices(const std::vector<LayerRecord>& records, std::size_t first, std::size_t last) {
  std::vector<std::size_t> out;
  for (std::size_t i = first; i < last; ++i)
    if (records[i].spec.kind == LayerKind::conv1d) out.push_back(i);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// PulseModel

PulseModel::PulseModel(PulseModelConfig cfg) : cfg_(cfg) {
  stack_.add(LayerSpec::gru(cfg.cond_dim, cfg.gru_units, Activation::relu, false));
  stack_.add(LayerSpec::batch_norm(cfg.gru_units));
  stack_.add(LayerSpec::dense(cfg.gru_units, cfg.pulse_length));
  stack_.add(LayerSpec::relu());
  stack_.add(LayerSpec::batch_norm(cfg.pulse_length));
  Index in = 1;
  for (Index i = 0; i < cfg.conv_layers; ++i) {
    stack_.add(LayerSpec::conv1d(in, cfg.conv_channels, cfg.width));
    stack_.add(LayerSpec::lrelu());
    stack_.add(LayerSpec::batch_norm(cfg.conv_channels));
    in = cfg.conv_channels;
  }
  stack_.add(LayerSpec::conv1d(in, 1, cfg.width));
  stack_.add(LayerSpec::lrelu());
  stack_.add(LayerSpec::batch_norm(1));
}

Tensor PulseModel::forward(const Tensor& context, Mode mode) {
  Tensor h = forward_layers(stack_, context, mode, 0, kReshapeAt);
  h = h.reshaped(1, cfg_.pulse_length);
  return forward_layers(stack_, std::move(h), mode, kReshapeAt, stack_.size());
}

Tensor PulseModel::backward(const Tensor& grad) {
  Tensor g = backward_layers(stack_, grad, kReshapeAt, stack_.size());
  g = g.reshaped(cfg_.pulse_length, 1);
  return backward_layers(stack_, std::move(g), 0, kReshapeAt);
}

void PulseModel::save(const std::string& path) const { save_weights(path, layer_pointers(stack_)); }

PulseModel PulseModel::load(const std::string& path) {
  const auto records = read_weights(path);
  if (records.size() < kReshapeAt + 3 || records[0].spec.kind != LayerKind::gru ||
      records[2].spec.kind != LayerKind::dense || records[kReshapeAt].spec.kind != LayerKind::conv1d) {
    throw LoadError(path + ": layer list does not describe a pulse model");
  }
  PulseModelConfig cfg;
  cfg.cond_dim = records[0].spec.in_channels;
  cfg.gru_units = records[0].spec.out_channels;
  cfg.pulse_length = records[2].spec.out_channels;
  cfg.conv_channels = records[kReshapeAt].spec.out_channels;
  cfg.width = records[kReshapeAt].spec.width;
  cfg.conv_layers = static_cast<Index>(conv_indices(records, 0, records.size()).size()) - 1;
  PulseModel model(cfg);
  try {
    assign_weights(records, layer_pointers(model.stack_));
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Generator

std::vector<LayerSpec> Generator::topology(const GeneratorConfig& cfg) {
  if (cfg.hidden_layers < 0 || cfg.channels < 1 || cfg.pulse_length < 1) {
    throw ParameterError("generator needs channels >= 1 and hidden_layers >= 0");
  }
  std::vector<LayerSpec> out;
  Index in = 2;
  for (Index i = 0; i < cfg.hidden_layers; ++i) {
    out.push_back(LayerSpec::conv1d(in, cfg.channels, cfg.width));
    out.push_back(LayerSpec::lrelu());
    out.push_back(LayerSpec::batch_norm(cfg.channels));
    in = cfg.channels + 1;
  }
  out.push_back(LayerSpec::conv1d(in, 1, cfg.width));
  if (!cfg.linear_output) {
    if (cfg.bn_after_tanh) {
      out.push_back(LayerSpec::tanh());
      out.push_back(LayerSpec::batch_norm(1));
    } else {
      out.push_back(LayerSpec::batch_norm(1));
      out.push_back(LayerSpec::tanh());
    }
  }
  return out;
}

Generator::Generator(GeneratorConfig cfg) : cfg_(cfg) {
  for (const auto& spec : topology(cfg)) {
    if (spec.kind == LayerKind::conv1d) block_starts_.push_back(stack_.size());
    stack_.add(spec);
  }
}

Tensor Generator::forward(const Tensor& noise, const Tensor& smooth, Mode mode) {
  if (noise.channels() != 1 || smooth.channels() != 1 || noise.time() != cfg_.pulse_length ||
      !noise.same_shape(smooth)) {
    throw ContractError("generator expects noise and smooth pulses of shape (batch, 1, " +
                        std::to_string(cfg_.pulse_length) + "), got " + noise.shape() + " and " + smooth.shape());
  }
  smooth_ = smooth;
  Tensor h = concat_channels(noise, smooth);
  for (std::size_t b = 0; b < block_starts_.size(); ++b) {
    if (b > 0) h = concat_channels(h, smooth);
    const std::size_t end = b + 1 < block_starts_.size() ? block_starts_[b + 1] : stack_.size();
    h = forward_layers(stack_, std::move(h), mode, block_starts_[b], end);
  }
  residual_ = h;
  Tensor out = smooth;
  out.data() += residual_.data();
  return out;
}

GeneratorGrad Generator::backward(const Tensor& grad_output) {
  Tensor d_smooth = grad_output;
  Tensor g = grad_output;
  for (std::size_t b = block_starts_.size(); b-- > 0;) {
    const std::size_t end = b + 1 < block_starts_.size() ? block_starts_[b + 1] : stack_.size();
    g = backward_layers(stack_, std::move(g), block_starts_[b], end);
    if (b > 0) {
      const Index c = g.channels() - 1;
      d_smooth.data() += slice_channels(g, c, 1).data();
      g = slice_channels(g, 0, c);
    }
  }
  d_smooth.data() += slice_channels(g, 1, 1).data();
  return {slice_channels(g, 0, 1), std::move(d_smooth)};
}

// ---------------------------------------------------------------------------
// Discriminator

std::vector<LayerSpec> Discriminator::topology(const DiscriminatorConfig& cfg) {
  const std::size_t n = cfg.channels.size();
  if (n == 0 || cfg.widths.size() != n || cfg.strides.size() != n) {
    throw ParameterError("discriminator channels, widths and strides must have equal nonzero length");
  }
  if (cfg.peek_block >= n) throw ParameterError("discriminator peek block out of range");
  if (cfg.channels.back() != 1) throw ParameterError("discriminator last block must have one channel");
  std::vector<LayerSpec> out;
  out.push_back(LayerSpec::fft_magnitude(cfg.pulse_length));
  Index in = 2;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(LayerSpec::conv1d(in, cfg.channels[i], cfg.widths[i], cfg.strides[i]));
    out.push_back(LayerSpec::lrelu());
    out.push_back(LayerSpec::batch_norm(cfg.channels[i]));
    in = cfg.channels[i];
  }
  return out;
}

Discriminator::Discriminator(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
  for (const auto& spec : topology(cfg_)) stack_.add(spec);
}

std::vector<Index> Discriminator::block_lengths() const {
  std::vector<Index> out;
  Index len = cfg_.pulse_length;
  for (Index s : cfg_.strides) {
    len = (len + s - 1) / s;
    out.push_back(len);
  }
  return out;
}

Vector Discriminator::forward(const Tensor& x, Mode mode) {
  if (x.channels() != 1 || x.time() != cfg_.pulse_length) {
    throw ContractError("discriminator expects (batch, 1, " + std::to_string(cfg_.pulse_length) + "), got " +
                        x.shape());
  }
  const Tensor spectrum = stack_[0].forward(x, mode);
  Tensor h = forward_layers(stack_, concat_channels(x, spectrum), mode, 1, peek_end());
  peek_ = h;
  h = forward_layers(stack_, std::move(h), mode, peek_end(), stack_.size());
  batch_ = x.batch();
  final_length_ = h.time();
  Vector scores(batch_);
  for (Index b = 0; b < batch_; ++b) scores(b) = h.example(b).mean();
  return scores;
}

Tensor Discriminator::backward(const Vector& d_scores, const Tensor* d_peek) {
  if (d_scores.size() != batch_) throw ContractError("discriminator backward: score gradient size mismatch");
  Tensor g(batch_, 1, final_length_);
  for (Index b = 0; b < batch_; ++b) g.example(b).setConstant(d_scores(b) / static_cast<double>(final_length_));
  g = backward_layers(stack_, std::move(g), peek_end(), stack_.size());
  if (d_peek != nullptr) {
    if (!d_peek->same_shape(g)) {
      throw ContractError("discriminator backward: peek gradient " + d_peek->shape() + " vs " + g.shape());
    }
    g.data() += d_peek->data();
  }
  g = backward_layers(stack_, std::move(g), 1, peek_end());
  Tensor dx = slice_channels(g, 0, 1);
  dx.data() += stack_[0].backward(slice_channels(g, 1, 1)).data();
  return dx;
}

// ---------------------------------------------------------------------------
// GanPair

void GanPair::initialize(std::uint64_t seed) {
  generator.stack().initialize(seed);
  discriminator.stack().initialize(seed ^ 0x9e3779b97f4a7c15ULL);
}

void GanPair::round_to_float32() {
  generator.stack().round_to_float32();
  discriminator.stack().round_to_float32();
}

std::vector<Layer*> GanPair::layers() {
  auto out = layer_pointers(generator.stack());
  for (Layer* l : layer_pointers(discriminator.stack())) out.push_back(l);
  return out;
}

std::vector<const Layer*> GanPair::layers() const {
  auto out = layer_pointers(generator.stack());
  for (const Layer* l : layer_pointers(discriminator.stack())) out.push_back(l);
  return out;
}

void GanPair::save(const std::string& path) const { save_weights(path, layers()); }

GanPair GanPair::from_records(const std::vector<LayerRecord>& records) {
  std::size_t split = 0;
  while (split < records.size() && records[split].spec.kind != LayerKind::fft_magnitude) ++split;
  if (split == records.size()) throw LoadError("layer list has no discriminator (fft_magnitude layer missing)");
  const auto g_convs = conv_indices(records, 0, split);
  const auto d_convs = conv_indices(records, split, records.size());
  if (g_convs.empty() || d_convs.empty()) throw LoadError("layer list does not describe a GAN pair");

  GeneratorConfig g;
  g.hidden_layers = static_cast<Index>(g_convs.size()) - 1;
  g.width = records[g_convs.front()].spec.width;
  g.channels = g.hidden_layers > 0 ? records[g_convs.front()].spec.out_channels : 1;
  g.pulse_length = records[split].spec.length;
  const std::size_t tail = split - g_convs.back() - 1;
  g.linear_output = tail == 0;
  g.bn_after_tanh = tail < 1 || records[g_convs.back() + 1].spec.kind == LayerKind::tanh;

  DiscriminatorConfig d;
  d.channels.clear();
  d.widths.clear();
  d.strides.clear();
  for (std::size_t i : d_convs) {
    d.channels.push_back(records[i].spec.out_channels);
    d.widths.push_back(records[i].spec.width);
    d.strides.push_back(records[i].spec.stride);
  }
  d.pulse_length = records[split].spec.length;
  d.peek_block = std::min<std::size_t>(2, d_convs.size() - 1);

  GanPair pair(g, d);
  assign_weights(records, pair.layers());
  return pair;
}

GanPair GanPair::load(const std::string& path) {
  const auto records = read_weights(path);
  try {
    return from_records(records);
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  } catch (const ParameterError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// F0Net

F0Net::F0Net(F0NetConfig cfg) : cfg_(cfg) {
  stack_.add(LayerSpec::standardize(cfg.inputs));
  stack_.add(LayerSpec::dense(cfg.inputs, cfg.dense_units));
  stack_.add(LayerSpec::tanh());
  stack_.add(LayerSpec::dense(cfg.dense_units, cfg.dense_units));
  stack_.add(LayerSpec::tanh());
  stack_.add(LayerSpec::blstm(cfg.dense_units, cfg.blstm_units));
  stack_.add(LayerSpec::lstm(2 * cfg.blstm_units + cfg.classes, cfg.lstm_units));
  stack_.add(LayerSpec::dense(cfg.lstm_units, cfg.classes));
  stack_.add(LayerSpec::softmax());
}

F0NetOutput F0Net::decode(const Matrix& features) {
  if (features.rows() != cfg_.inputs) {
    throw ContractError("f0 net expects " + std::to_string(cfg_.inputs) + " features per frame, got " +
                        std::to_string(features.rows()));
  }
  const Index frames = features.cols();
  F0NetOutput out;
  out.classes.resize(static_cast<std::size_t>(frames));
  out.probabilities.resize(cfg_.classes, frames);
  if (frames == 0) return out;

  const Tensor encoded = forward_layers(stack_, Tensor(1, cfg_.inputs, frames, features), Mode::eval, 0, kLstm);
  const auto& lstm = static_cast<const LstmLayer&>(stack_[kLstm]);
  const Matrix& w = stack_[kOutput].parameter("weight").value;
  const Matrix& bias = stack_[kOutput].parameter("bias").value;
  const Index enc = encoded.channels();

  LstmLayer::State state = lstm.initial_state(1);
  Vector input = Vector::Zero(enc + cfg_.classes);
  int previous = -1;
  for (Index t = 0; t < frames; ++t) {
    input.head(enc) = encoded.data().col(t);
    input.tail(cfg_.classes).setZero();
    if (previous >= 0) input(enc + previous) = 1.0;
    const Matrix& h = lstm.step(input, state);
    Vector logits = w * h.col(0) + bias.col(0);
    logits.array() -= logits.maxCoeff();
    Vector p = logits.array().exp();
    p /= p.sum();
    int best = 0;
    for (Index k = 1; k < p.size(); ++k)
      if (p(k) > p(best)) best = static_cast<int>(k);
    out.probabilities.col(t) = p;
    out.classes[static_cast<std::size_t>(t)] = best;
    previous = best;
  }
  return out;
}

void F0Net::save(const std::string& path) const { save_weights(path, layer_pointers(stack_)); }

F0Net F0Net::load(const std::string& path) {
  const auto records = read_weights(path);
  if (records.size() != 9 || records[kStandardize].spec.kind != LayerKind::standardize ||
      records[1].spec.kind != LayerKind::dense || records[kBlstm].spec.kind != LayerKind::blstm ||
      records[kLstm].spec.kind != LayerKind::lstm || records[kOutput].spec.kind != LayerKind::dense) {
    throw LoadError(path + ": layer list does not describe an F0 network");
  }
  F0NetConfig cfg;
  cfg.inputs = records[kStandardize].spec.in_channels;
  cfg.dense_units = records[1].spec.out_channels;
  cfg.blstm_units = records[kBlstm].spec.out_channels;
  cfg.lstm_units = records[kLstm].spec.out_channels;
  cfg.classes = records[kOutput].spec.out_channels;
  F0Net net(cfg);
  try {
    assign_weights(records, layer_pointers(net.stack_));
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
  return net;
}

}  // namespace mfccvoc::nn
