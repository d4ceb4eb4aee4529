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

// F0 tracking, pitch marks, the 256-class F0 codec and F0 objective metrics.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mfccvoc/errors.hpp"
#include "mfccvoc/signal.hpp"

namespace mfccvoc::pitch {

using Eigen::Index;

// Per-frame F0 on the analysis frame grid. f0_hz is 0 exactly on unvoiced frames.
struct PitchTrack {
  Eigen::VectorXd f0_hz;
  std::vector<bool> voiced;
  Index hop_length = 80;
  int sample_rate = 16000;

  Index frames() const { return f0_hz.size(); }
  // Builds a track from f0 values, treating f0 <= 0 as unvoiced.
  static PitchTrack from_f0(const Eigen::Ref<const Eigen::VectorXd>& f0, Index hop, int sample_rate);
  // voiced[t] == (f0[t] > 0) and both arrays agree in length.
  bool consistent() const;
  double voiced_fraction() const;
};

struct TrackerConfig {
  double f_min = 50.0;
  double f_max = 500.0;
  double voicing_threshold = 0.55;  // peak normalized autocorrelation
  double silence_db = -60.0;        // frame RMS gate, dBFS
  Index median_length = 3;
  // Smallest-lag peak within this fraction of the global NACF maximum wins.
  double octave_tolerance = 0.9;
};

// Normalized autocorrelation tracker with parabolic peak interpolation and
// median smoothing of voiced F0.
PitchTrack track_pitch(const dsp::Waveform& x, const dsp::FrameConfig& frames, const TrackerConfig& cfg = {});

struct PitchMarks {
  std::vector<Index> instants;  // strictly increasing sample indices

  Index size() const { return static_cast<Index>(instants.size()); }
  bool empty() const { return instants.empty(); }
};

// Synthesis mode (residual == nullptr): phase accumulation
// t_{k+1} = t_k + fs / f0(t_k) inside voiced runs. Analysis mode: each
// accumulated position is moved to the largest |residual| within +-25% of a
// period. F0 below min_f0 is raised to min_f0 before use.
PitchMarks place_pitch_marks(const PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                             const dsp::Waveform* residual = nullptr, double min_f0 = 0.0);

// Local pitch period (samples, rounded) at sample n; 0 when unvoiced.
Index period_at(const PitchTrack& track, const dsp::FrameConfig& frames, Index n, double min_f0 = 0.0);

// Class 0 is unvoiced; classes 1..255 span [f_min, f_max] linearly.
struct F0Quantizer {
  double f_min = 50.0;
  double f_max = 500.0;
  static constexpr int kClasses = 256;
  static constexpr int kVoicedClasses = 255;

  double bin_width() const { return (f_max - f_min) / (kVoicedClasses - 1); }
};

// f <= 0 is unvoiced (class 0); voiced values are clamped into range.
int quantize_f0(double f_hz, const F0Quantizer& q);
// Class 0 returns 0 Hz (unvoiced). Throws ContractError outside 0..255.
double dequantize_f0(int cls, const F0Quantizer& q);

struct F0Metrics {
  std::optional<double> rmse_hz;      // over frames voiced in both tracks
  double vuv_error_pct = 0.0;
  std::optional<double> correlation;  // Pearson, undefined on zero variance
  Index common_voiced = 0;
};

F0Metrics f0_metrics(const PitchTrack& reference, const PitchTrack& generated);

}  // namespace mfccvoc::pitch
