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

// Glottal pulse datasets and the excitation generators: impulse train,
// pulse model ("dnn") and pulse model plus GAN residual ("gan"), all joined
// pitch-synchronously and normalized to unit RMS per frame.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mfccvoc/cepstral.hpp"
#include "mfccvoc/nn/models.hpp"
#include "mfccvoc/nn/train.hpp"
#include "mfccvoc/pitch.hpp"
#include "mfccvoc/signal.hpp"

namespace mfccvoc::excitation {

using Eigen::Index;

constexpr Index kPulseLength = 400;
constexpr Index kPulseCenter = kPulseLength / 2;
constexpr Index kCondDim = 22;  // 20 MFCC + log F0 + VUV
constexpr Index kContext = 40;
// Longest period that fits a two-period pulse in the buffer.
constexpr double kMinPulseF0 = 80.0;

struct Pulse {
  Eigen::VectorXd samples = Eigen::VectorXd::Zero(kPulseLength);
  Index mark = 0;
  Index frame_index = -1;  // conditioning frame, -1 before association
  Index period_samples = 0;
};

struct PulseDataset {
  std::vector<Pulse> pulses;
  Eigen::MatrixXd conditioning;  // kCondDim x pulses, filled by associate_frames
  Index skipped_pulses = 0;      // 2T > buffer length
  Index dropped_frames = 0;      // voiced frames without a mark within a period

  Index size() const { return static_cast<Index>(pulses.size()); }
};

// Two-period Hann-windowed residual segments centered in a 400 sample
// buffer, one per voiced mark. The rising half of the window spans the
// distance to the previous mark and the falling half the distance to the
// next, which is the plain 2T Hann at exact period spacing. Samples outside
// the signal count as zero.
PulseDataset extract_pulses(const dsp::Waveform& residual, const pitch::PitchMarks& marks,
                            const pitch::PitchTrack& track, const dsp::FrameConfig& frames);

// Per-frame conditioning vectors [c0..c19, log f0, vuv] as kCondDim x frames.
// Unvoiced frames carry log f0 = 0 and vuv = 0.
Eigen::MatrixXd frame_conditioning(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track);

// One record per voiced frame, holding the pulse whose mark is nearest the
// frame center (ties to the earlier mark). Frames with no mark within one
// period are dropped and counted.
PulseDataset associate_frames(const PulseDataset& extracted, const pitch::PitchTrack& track,
                              const dsp::FrameConfig& frames, const Eigen::MatrixXd& conditioning);

// kCondDim x context window of `conditioning` columns ending at column t,
// zero padded before the first column.
Eigen::MatrixXd context_window(const Eigen::MatrixXd& conditioning, Index t, Index context = kContext);

// Adds every pulse (column k of `pulses`) with index 200 on marks[k]; parts
// falling outside [0, length) are truncated.
dsp::Waveform overlap_add_pulses(const Eigen::MatrixXd& pulses, const pitch::PitchMarks& marks, Index length,
                                 int sample_rate);

// Unit-variance Gaussian noise on samples of unvoiced frames, zeros elsewhere.
Eigen::VectorXd unvoiced_noise(const pitch::PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                               std::uint64_t seed);

// Scales each frame's block of samples (those whose nearest frame center is
// that frame) to unit RMS. Voiced frames with a period longer than the hop
// measure RMS over one period centered on the block, so sparse pulse
// trains are normalized per period rather than per block. All-zero spans
// are left at zero.
void normalize_frames(Eigen::VectorXd& x, const pitch::PitchTrack& track, const dsp::FrameConfig& frames);

// voiced + unvoiced noise, then normalize_frames.
dsp::Waveform assemble_excitation(const dsp::Waveform& voiced, const pitch::PitchTrack& track,
                                  const dsp::FrameConfig& frames, std::uint64_t seed);

// Unit impulses at synthesis pitch marks, noise when unvoiced, normalized.
dsp::Waveform impulse_excitation(const pitch::PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                                 std::uint64_t seed);

// Smooth pulses x^ for a batch of contexts (kCondDim x context each);
// returns pulse_length x contexts.
Eigen::MatrixXd pulse_model_forward(nn::PulseModel& model, const std::vector<Eigen::MatrixXd>& contexts);

// x' = x^ + G(z, x^) for columns of smooth and noise.
Eigen::MatrixXd gan_generator_forward(nn::Generator& generator, const Eigen::MatrixXd& smooth,
                                      const Eigen::MatrixXd& noise);

// Pulse-model excitation; with a generator the GAN residual is added to each
// pulse. F0 below kMinPulseF0 is clamped for mark placement.
dsp::Waveform neural_excitation(const pitch::PitchTrack& track, const dsp::FrameConfig& frames,
                                const Eigen::MatrixXd& conditioning, Index length, nn::PulseModel& model,
                                nn::Generator* generator, std::uint64_t seed);

}  // namespace mfccvoc::excitation
