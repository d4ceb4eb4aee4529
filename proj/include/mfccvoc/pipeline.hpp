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

// End-to-end analysis and synthesis, and the command implementations behind
// the command-line tool. Commands report progress on `log` and throw the
// error types of errors.hpp.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mfccvoc/config.hpp"
#include "mfccvoc/envelope.hpp"
#include "mfccvoc/excitation.hpp"

namespace mfccvoc {

struct Analysis {
  cepstral::MfccSequence mfcc;
  pitch::PitchTrack track;
};

// MFCCs of the pre-emphasized signal and F0 of the original.
Analysis analyze_waveform(const dsp::Waveform& x, const PipelineConfig& cfg);

// Envelope from MFCCs: pseudo-inverse reconstruction then all-pole fit.
struct EnvelopeFit {
  envelope::ArEnvelope envelope;
  Index floored_bins = 0;
  Index floored_frames = 0;
};
EnvelopeFit envelope_from_mfcc(const cepstral::MfccSequence& mfcc, const PipelineConfig& cfg);

// Optional trained models for the dnn and gan excitation modes.
struct ExcitationModels {
  std::optional<nn::PulseModel> pulse_model;
  std::optional<nn::GanPair> gan;
};
// Loads what cfg.excitation needs; LoadError/IoError when a file is missing.
ExcitationModels load_excitation_models(const PipelineConfig& cfg);

// Output samples for a frame count: (frames - 1) * hop + frame_length.
Index synthesis_length(Index frames, const dsp::FrameConfig& cfg);

dsp::Waveform make_excitation(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track,
                              const PipelineConfig& cfg, ExcitationModels& models, std::uint64_t seed);

// Envelope -> excitation -> synthesis filter -> de-emphasis.
dsp::Waveform synthesize(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track,
                         const PipelineConfig& cfg, ExcitationModels& models, std::uint64_t seed);

// Residual of the pre-emphasized signal under the MFCC-derived envelope.
dsp::Waveform mfcc_residual(const dsp::Waveform& x, const cepstral::MfccSequence& mfcc, const PipelineConfig& cfg);

// Pulses and their per-frame records for one utterance.
struct PulseExtraction {
  excitation::PulseDataset extracted;   // one entry per voiced mark kept
  excitation::PulseDataset associated;  // one record per voiced frame
  Eigen::MatrixXd conditioning;         // kCondDim x frames
  Index marks = 0;
};
PulseExtraction pulses_from_waveform(const dsp::Waveform& x, const PipelineConfig& cfg);

// Predicted track from MFCCs with an F0 network.
pitch::PitchTrack predict_f0(const cepstral::MfccSequence& mfcc, nn::F0Net& net, const pitch::F0Quantizer& q);

// Smooth stand-in for x^ when no pulse model is supplied: the real pulse
// with every DFT bin at or above 4 kHz removed.
Eigen::MatrixXd lowpass_pulses(const Eigen::MatrixXd& pulses, int sample_rate, double cutoff_hz = 4000.0);

// ---------------------------------------------------------------------------
// Commands

void cmd_analyze(const std::string& wav_in, const std::string& mfcc_out, const std::string& f0_out,
                 const PipelineConfig& cfg, std::ostream& log, const std::string& f0_csv_out = "");

struct SynthOptions {
  std::string mfcc_in;
  std::string f0_in;       // F0T1 track, or
  std::string f0_weights;  // F0 network weights
  std::string wav_out;
};
void cmd_synth(const SynthOptions& opts, const PipelineConfig& cfg, std::ostream& log);

void cmd_copy_synth(const std::string& wav_in, const std::string& wav_out, const PipelineConfig& cfg,
                    std::ostream& log);

void cmd_extract_pulses(const std::string& wav_in, const std::string& dataset_out, const PipelineConfig& cfg,
                        std::ostream& log);

// Writes the final pair to weights_out, per-epoch checkpoints to
// <weights_out>.epochNN.nnw and the loss history to <weights_out>.loss.csv.
void cmd_train_gan(const std::string& dataset_in, const std::string& weights_out, const PipelineConfig& cfg,
                   std::ostream& log);

void cmd_train_pulse(const std::vector<std::string>& wavs_in, const std::string& weights_out,
                     const PipelineConfig& cfg, std::ostream& log);

// Returns true when every check passes.
bool cmd_gradcheck(std::ostream& log);

void cmd_f0_metrics(const std::string& ref_in, const std::string& gen_in, std::ostream& out, int precision = 1);

void cmd_f0_quantize(const std::string& f0_in, const std::string& f0_out, const PipelineConfig& cfg,
                     std::ostream& log, const std::string& classes_csv_out = "");

void cmd_invert_envelope(const std::string& mfcc_in, const std::string& envelope_out, const PipelineConfig& cfg,
                         std::ostream& log, const std::string& csv_out = "");

}  // namespace mfccvoc
