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

#include "mfccvoc/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include "mfccvoc/binary_io.hpp"

namespace mfccvoc {

std::string to_string(ExcitationMode m) {
  switch (m) {
    case ExcitationMode::impulse: return "impulse";
    case ExcitationMode::dnn: return "dnn";
    case ExcitationMode::gan: return "gan";
  }
  return "impulse";
}

ExcitationMode parse_excitation_mode(const std::string& s) {
  if (s == "impulse") return ExcitationMode::impulse;
  if (s == "dnn") return ExcitationMode::dnn;
  if (s == "gan") return ExcitationMode::gan;
  throw ParameterError("unknown excitation mode '" + s + "' (expected impulse, dnn or gan)");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ParameterError(key + ": not a number: '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ParameterError(key + ": not an integer: '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParameterError(key + ": not an unsigned integer: '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError(key + ": not a boolean: '" + v + "'");
}

std::string join(const std::vector<Index>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::vector<Index> parse_list(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ParameterError(key + ": empty list");
  return out;
}

struct Field {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

// Helpers binding a member reached through `access`.
template <typename Access>
Field index_field(Access access) {
  return {[access](const PipelineConfig& c) { return std::to_string(access(const_cast<PipelineConfig&>(c))); },
          [access](PipelineConfig& c, const std::string& k, const std::string& v) {
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(parse_int(k, v));
          }};
}

template <typename Access>
Field double_field(Access access) {
  return {[access](const PipelineConfig& c) { return fmt_double(access(const_cast<PipelineConfig&>(c))); },
          [access](PipelineConfig& c, const std::string& k, const std::string& v) { access(c) = parse_double(k, v); }};
}

template <typename Access>
Field bool_field(Access access) {
  return {[access](const PipelineConfig& c) { return std::string(access(const_cast<PipelineConfig&>(c)) ? "true" : "false"); },
          [access](PipelineConfig& c, const std::string& k, const std::string& v) { access(c) = parse_bool(k, v); }};
}

template <typename Access>
Field string_field(Access access) {
  return {[access](const PipelineConfig& c) { return access(const_cast<PipelineConfig&>(c)); },
          [access](PipelineConfig& c, const std::string&, const std::string& v) { access(c) = v; }};
}

template <typename Access>
Field list_field(Access access) {
  return {[access](const PipelineConfig& c) { return join(access(const_cast<PipelineConfig&>(c))); },
          [access](PipelineConfig& c, const std::string& k, const std::string& v) { access(c) = parse_list(k, v); }};
}

#define MFCCVOC_REF(expr) [](PipelineConfig& c) -> auto& { return expr; }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["signal.sample_rate"] = index_field(MFCCVOC_REF(c.sample_rate));
    t["signal.frame_length"] = index_field(MFCCVOC_REF(c.frames.frame_length));
    t["signal.hop_length"] = index_field(MFCCVOC_REF(c.frames.hop_length));
    t["signal.fft_size"] = index_field(MFCCVOC_REF(c.frames.fft_size));
    t["signal.preemphasis"] = double_field(MFCCVOC_REF(c.frames.preemphasis));
    t["signal.window"] = {
        [](const PipelineConfig& c) {
          return std::string(c.frames.window == dsp::WindowType::hann ? "hann" : "rectangular");
        },
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "hann") c.frames.window = dsp::WindowType::hann;
          else if (v == "rectangular") c.frames.window = dsp::WindowType::rectangular;
          else throw ParameterError(k + ": expected hann or rectangular, got '" + v + "'");
        }};
    t["signal.wav_format"] = {
        [](const PipelineConfig& c) {
          return std::string(c.wav_format == dsp::WavSampleFormat::pcm16 ? "pcm16" : "float32");
        },
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "pcm16") c.wav_format = dsp::WavSampleFormat::pcm16;
          else if (v == "float32") c.wav_format = dsp::WavSampleFormat::float32;
          else throw ParameterError(k + ": expected float32 or pcm16, got '" + v + "'");
        }};

    t["cepstral.n_mels"] = index_field(MFCCVOC_REF(c.cepstral.n_mels));
    t["cepstral.n_coef"] = index_field(MFCCVOC_REF(c.cepstral.n_coef));
    t["cepstral.f_min"] = double_field(MFCCVOC_REF(c.cepstral.f_min));
    t["cepstral.f_max"] = double_field(MFCCVOC_REF(c.cepstral.f_max));
    t["cepstral.floor_eps"] = double_field(MFCCVOC_REF(c.cepstral.floor_eps));

    t["envelope.order"] = index_field(MFCCVOC_REF(c.ar_order));

    t["pitch.f_min"] = double_field(MFCCVOC_REF(c.tracker.f_min));
    t["pitch.f_max"] = double_field(MFCCVOC_REF(c.tracker.f_max));
    t["pitch.voicing_threshold"] = double_field(MFCCVOC_REF(c.tracker.voicing_threshold));
    t["pitch.silence_db"] = double_field(MFCCVOC_REF(c.tracker.silence_db));
    t["pitch.median_length"] = index_field(MFCCVOC_REF(c.tracker.median_length));
    t["pitch.octave_tolerance"] = double_field(MFCCVOC_REF(c.tracker.octave_tolerance));
    t["pitch.codec_f_min"] = double_field(MFCCVOC_REF(c.quantizer.f_min));
    t["pitch.codec_f_max"] = double_field(MFCCVOC_REF(c.quantizer.f_max));
    t["pitch.f0_net"] = string_field(MFCCVOC_REF(c.f0_net_path));

    t["excitation.mode"] = {[](const PipelineConfig& c) { return to_string(c.excitation); },
                            [](PipelineConfig& c, const std::string&, const std::string& v) {
                              c.excitation = parse_excitation_mode(v);
                            }};
    t["excitation.pulse_model"] = string_field(MFCCVOC_REF(c.pulse_model_path));
    t["excitation.gan_weights"] = string_field(MFCCVOC_REF(c.gan_weights_path));

    t["pipeline.seed"] = {[](const PipelineConfig& c) { return std::to_string(c.seed); },
                          [](PipelineConfig& c, const std::string& k, const std::string& v) {
                            c.seed = parse_u64(k, v);
                          }};

    t["gan.generator_channels"] = index_field(MFCCVOC_REF(c.generator.channels));
    t["gan.generator_width"] = index_field(MFCCVOC_REF(c.generator.width));
    t["gan.generator_layers"] = index_field(MFCCVOC_REF(c.generator.hidden_layers));
    t["gan.bn_after_tanh"] = bool_field(MFCCVOC_REF(c.generator.bn_after_tanh));
    t["gan.discriminator_channels"] = list_field(MFCCVOC_REF(c.discriminator.channels));
    t["gan.discriminator_widths"] = list_field(MFCCVOC_REF(c.discriminator.widths));
    t["gan.discriminator_strides"] = list_field(MFCCVOC_REF(c.discriminator.strides));
    t["gan.peek_block"] = index_field(MFCCVOC_REF(c.discriminator.peek_block));
    t["gan.epochs"] = index_field(MFCCVOC_REF(c.gan_train.epochs));
    t["gan.batch_size"] = index_field(MFCCVOC_REF(c.gan_train.batch_size));
    t["gan.generator_lr"] = double_field(MFCCVOC_REF(c.gan_train.generator_adam.learning_rate));
    t["gan.discriminator_lr"] = double_field(MFCCVOC_REF(c.gan_train.discriminator_adam.learning_rate));
    t["gan.beta1"] = {[](const PipelineConfig& c) { return fmt_double(c.gan_train.generator_adam.beta1); },
                      [](PipelineConfig& c, const std::string& k, const std::string& v) {
                        c.gan_train.generator_adam.beta1 = c.gan_train.discriminator_adam.beta1 = parse_double(k, v);
                      }};
    t["gan.beta2"] = {[](const PipelineConfig& c) { return fmt_double(c.gan_train.generator_adam.beta2); },
                      [](PipelineConfig& c, const std::string& k, const std::string& v) {
                        c.gan_train.generator_adam.beta2 = c.gan_train.discriminator_adam.beta2 = parse_double(k, v);
                      }};
    t["gan.adversarial_weight"] = double_field(MFCCVOC_REF(c.gan_train.adversarial_weight));
    t["gan.peek_weight"] = double_field(MFCCVOC_REF(c.gan_train.peek_weight));
    t["gan.resample_noise"] = bool_field(MFCCVOC_REF(c.gan_train.resample_noise));

    t["pulse.gru_units"] = index_field(MFCCVOC_REF(c.pulse_model.gru_units));
    t["pulse.conv_channels"] = index_field(MFCCVOC_REF(c.pulse_model.conv_channels));
    t["pulse.conv_layers"] = index_field(MFCCVOC_REF(c.pulse_model.conv_layers));
    t["pulse.width"] = index_field(MFCCVOC_REF(c.pulse_model.width));
    t["pulse.context"] = index_field(MFCCVOC_REF(c.pulse_model.context));
    t["pulse.epochs"] = index_field(MFCCVOC_REF(c.pulse_train.epochs));
    t["pulse.batch_size"] = index_field(MFCCVOC_REF(c.pulse_train.batch_size));
    t["pulse.lr"] = double_field(MFCCVOC_REF(c.pulse_train.adam.learning_rate));
    return t;
  }();
  return table;
}

#undef MFCCVOC_REF

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ParameterError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

void PipelineConfig::apply_text(const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParameterError& e) {
      throw ParameterError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void PipelineConfig::load_file(const std::string& path) { apply_text(io::read_file(path), path); }

std::map<std::string, std::string> PipelineConfig::values() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(*this);
  return out;
}

std::string PipelineConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values()) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t PipelineConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void PipelineConfig::validate() const {
  if (sample_rate <= 0) throw ParameterError("signal.sample_rate must be positive");
  frames.validate();
  if (cepstral.n_coef < 1 || cepstral.n_coef > cepstral.n_mels) {
    throw ParameterError("cepstral.n_coef must be in [1, cepstral.n_mels]");
  }
  if (!(cepstral.f_min >= 0.0 && cepstral.f_min < cepstral.f_max && cepstral.f_max <= 0.5 * sample_rate)) {
    throw ParameterError("cepstral band must satisfy 0 <= f_min < f_max <= sample_rate / 2");
  }
  if (ar_order < 1) throw ParameterError("envelope.order must be >= 1");
  if (!(tracker.f_min > 0.0 && tracker.f_min < tracker.f_max)) throw ParameterError("pitch.f_min < pitch.f_max required");
  if (!(quantizer.f_min > 0.0 && quantizer.f_min < quantizer.f_max)) {
    throw ParameterError("pitch.codec_f_min < pitch.codec_f_max required");
  }
  if (gan_train.epochs < 0 || gan_train.batch_size < 1) throw ParameterError("gan.epochs >= 0, gan.batch_size >= 1");
  if (pulse_train.epochs < 0 || pulse_train.batch_size < 1) {
    throw ParameterError("pulse.epochs >= 0, pulse.batch_size >= 1");
  }
  nn::Generator::topology(generator);
  nn::Discriminator::topology(discriminator);
}

std::uint64_t effective_seed(const PipelineConfig& cfg) {
  if (const char* env = std::getenv("VOCODER_SEED"); env != nullptr && *env != '\0') {
    return parse_u64("VOCODER_SEED", env);
  }
  return cfg.seed;
}

std::uint64_t utterance_seed(std::uint64_t master, const std::string& utterance) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : utterance) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer over the combination
  std::uint64_t z = h ^ (master + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string utterance_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

}  // namespace mfccvoc
