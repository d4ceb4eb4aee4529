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

// Pipeline configuration: flat `module.key = value` text with `#` comments.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfccvoc/cepstral.hpp"
#include "mfccvoc/nn/models.hpp"
#include "mfccvoc/nn/train.hpp"
#include "mfccvoc/pitch.hpp"
#include "mfccvoc/signal.hpp"
#include "mfccvoc/wav.hpp"

namespace mfccvoc {

using Eigen::Index;

enum class ExcitationMode { impulse, dnn, gan };

std::string to_string(ExcitationMode m);
ExcitationMode parse_excitation_mode(const std::string& s);

struct PipelineConfig {
  int sample_rate = 16000;
  dsp::FrameConfig frames{};
  cepstral::CepstralConfig cepstral{};
  Index ar_order = 30;
  pitch::TrackerConfig tracker{};
  pitch::F0Quantizer quantizer{};

  ExcitationMode excitation = ExcitationMode::impulse;
  std::string pulse_model_path;
  std::string gan_weights_path;
  std::string f0_net_path;

  std::uint64_t seed = 1;
  dsp::WavSampleFormat wav_format = dsp::WavSampleFormat::float32;

  nn::GeneratorConfig generator{};
  nn::DiscriminatorConfig discriminator{};
  nn::GanTrainConfig gan_train{};
  nn::PulseModelConfig pulse_model{};
  nn::PulseTrainConfig pulse_train{};

  // Applies one `key = value` assignment; ParameterError on unknown keys or
  // malformed values.
  void set(const std::string& key, const std::string& value);
  // Parses a whole config text; errors carry the line number.
  void apply_text(const std::string& text, const std::string& origin = "config");
  void load_file(const std::string& path);

  // Every key, sorted, values printed losslessly.
  std::map<std::string, std::string> values() const;
  std::string dump() const;
  // FNV-1a over dump().
  std::uint64_t hash() const;

  // Throws ParameterError on inconsistent values.
  void validate() const;
};

// Master seed, overridden by VOCODER_SEED when set.
std::uint64_t effective_seed(const PipelineConfig& cfg);

// Stream seed for one utterance: mixes the master seed with the utterance
// name (file stem), so results do not depend on processing order.
std::uint64_t utterance_seed(std::uint64_t master, const std::string& utterance);

// File name without directories or extension.
std::string utterance_name(const std::string& path);

}  // namespace mfccvoc
