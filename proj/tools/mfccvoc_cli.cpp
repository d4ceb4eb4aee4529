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

// Command-line front end. Exit status: 0 success, 1 internal invariant
// violation or failed self-check, 2 user or input error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfccvoc/binary_io.hpp"
#include "mfccvoc/config.hpp"
#include "mfccvoc/errors.hpp"
#include "mfccvoc/pipeline.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string dump_config;
  long long seed = -1;
};

mfccvoc::PipelineConfig build_config(const GlobalOptions& g) {
  mfccvoc::PipelineConfig cfg;
  if (!g.config_path.empty()) cfg.load_file(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw mfccvoc::ParameterError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
  cfg.validate();
  if (!g.dump_config.empty()) mfccvoc::io::write_file_atomic(g.dump_config, cfg.dump());
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MFCC-driven source-filter vocoder with neural glottal excitation"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--set", g.overrides, "override one configuration key (key=value), repeatable");
  app.add_option("--seed", g.seed, "master seed (VOCODER_SEED takes precedence)");
  app.add_option("--dump-config", g.dump_config, "write the effective configuration to this file");

  std::string in1, in2, out1, out2, extra;
  std::string excitation_mode, pulse_model, gan_weights;
  std::vector<std::string> inputs;
  bool pcm16 = false;
  int precision = 1;
  int epochs = -1;

  auto* analyze = app.add_subcommand("analyze", "wav -> MFCC (MFC1) and F0 (F0T1) files");
  analyze->add_option("wav", in1)->required();
  analyze->add_option("mfcc_out", out1)->required();
  analyze->add_option("f0_out", out2)->required();
  analyze->add_option("--f0-csv", extra, "also write frame,f0_hz,voiced CSV");

  mfccvoc::SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "MFCC + F0 -> wav");
  synth->add_option("mfcc", synth_opts.mfcc_in)->required();
  synth->add_option("wav_out", synth_opts.wav_out)->required();
  auto* f0_opt = synth->add_option("--f0", synth_opts.f0_in, "F0T1 track");
  auto* pred_opt = synth->add_option("--predict-f0", synth_opts.f0_weights, "F0 network weights (NNW1)");
  f0_opt->excludes(pred_opt);
  synth->add_option("--excitation", excitation_mode, "impulse, dnn or gan");
  synth->add_option("--pulse-model", pulse_model, "pulse model weights for dnn/gan");
  synth->add_option("--gan-weights", gan_weights, "GAN pair weights for gan");
  synth->add_flag("--pcm16", pcm16, "write 16-bit PCM instead of float32");

  auto* copy = app.add_subcommand("copy-synth", "analyze then synthesize a wav");
  copy->add_option("wav", in1)->required();
  copy->add_option("wav_out", out1)->required();
  copy->add_option("--excitation", excitation_mode, "impulse, dnn or gan");
  copy->add_option("--pulse-model", pulse_model, "pulse model weights for dnn/gan");
  copy->add_option("--gan-weights", gan_weights, "GAN pair weights for gan");
  copy->add_flag("--pcm16", pcm16, "write 16-bit PCM instead of float32");

  auto* extract = app.add_subcommand("extract-pulses", "wav -> pulse dataset (PLS1)");
  extract->add_option("wav", in1)->required();
  extract->add_option("dataset_out", out1)->required();

  auto* train_gan = app.add_subcommand("train-gan", "train the residual GAN on a PLS1 dataset");
  train_gan->add_option("dataset", in1)->required();
  train_gan->add_option("weights_out", out1)->required();
  train_gan->add_option("--pulse-model", pulse_model, "pulse model producing x^ (default: low-passed pulses)");
  train_gan->add_option("--epochs", epochs, "number of epochs");

  auto* train_pulse = app.add_subcommand("train-pulse", "train the smooth pulse model on wav files");
  train_pulse->add_option("weights_out", out1)->required();
  train_pulse->add_option("wavs", inputs)->required();
  train_pulse->add_option("--epochs", epochs, "number of epochs");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");

  auto* metrics = app.add_subcommand("f0-metrics", "RMSE, VUV error and correlation of two F0 tracks");
  metrics->add_option("reference", in1)->required();
  metrics->add_option("generated", in2)->required();
  metrics->add_option("--precision", precision, "decimal places");

  auto* quantize = app.add_subcommand("f0-quantize", "pass an F0 track through the 256-class codec");
  quantize->add_option("f0", in1)->required();
  quantize->add_option("f0_out", out1)->required();
  quantize->add_option("--classes-csv", extra, "also write frame,class,f0_hz CSV");

  auto* invert = app.add_subcommand("invert-envelope", "MFCC -> all-pole envelopes (ARE1)");
  invert->add_option("mfcc", in1)->required();
  invert->add_option("envelope_out", out1)->required();
  invert->add_option("--csv", extra, "also write frame,gain,a1.. CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gradcheck) return mfccvoc::cmd_gradcheck(std::cout) ? 0 : 1;

    mfccvoc::PipelineConfig cfg = build_config(g);
    if (!excitation_mode.empty()) cfg.set("excitation.mode", excitation_mode);
    if (!pulse_model.empty()) cfg.pulse_model_path = pulse_model;
    if (!gan_weights.empty()) cfg.gan_weights_path = gan_weights;
    if (pcm16) cfg.wav_format = mfccvoc::dsp::WavSampleFormat::pcm16;
    if (epochs >= 0) {
      cfg.gan_train.epochs = epochs;
      cfg.pulse_train.epochs = epochs;
    }

    if (*analyze) {
      mfccvoc::cmd_analyze(in1, out1, out2, cfg, std::cout, extra);
    } else if (*synth) {
      mfccvoc::cmd_synth(synth_opts, cfg, std::cout);
    } else if (*copy) {
      mfccvoc::cmd_copy_synth(in1, out1, cfg, std::cout);
    } else if (*extract) {
      mfccvoc::cmd_extract_pulses(in1, out1, cfg, std::cout);
    } else if (*train_gan) {
      mfccvoc::cmd_train_gan(in1, out1, cfg, std::cout);
    } else if (*train_pulse) {
      mfccvoc::cmd_train_pulse(inputs, out1, cfg, std::cout);
    } else if (*metrics) {
      mfccvoc::cmd_f0_metrics(in1, in2, std::cout, precision);
    } else if (*quantize) {
      mfccvoc::cmd_f0_quantize(in1, out1, cfg, std::cout, extra);
    } else if (*invert) {
      mfccvoc::cmd_invert_envelope(in1, out1, cfg, std::cout, extra);
    }
  } catch (const mfccvoc::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  } catch (const mfccvoc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
