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

// Waveforms, framing and the magnitude STFT that feeds MFCC analysis.

#include <Eigen/Core>

#include "mfccvoc/errors.hpp"

namespace mfccvoc::dsp {

using Eigen::Index;

struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = 16000;

  Index size() const { return samples.size(); }
  bool all_finite() const { return samples.allFinite(); }
};

enum class WindowType { hann, rectangular };

// Frames are left aligned: frame t covers [t * hop_length, t * hop_length + frame_length).
struct FrameConfig {
  Index frame_length = 400;
  Index hop_length = 80;
  Index fft_size = 1024;
  WindowType window = WindowType::hann;
  double preemphasis = 0.97;

  // Throws ParameterError unless 0 < hop <= frame <= fft, fft a power of two
  // and 0 <= preemphasis < 1.
  void validate() const;

  Index num_bins() const { return fft_size / 2 + 1; }
  Index frame_count(Index num_samples) const;
  Index frame_start(Index t) const { return t * hop_length; }
  double frame_center(Index t) const {
    return static_cast<double>(t * hop_length) + 0.5 * static_cast<double>(frame_length);
  }
  // Frame whose center is nearest to sample n, clamped to [0, num_frames).
  Index frame_of_sample(Index n, Index num_frames) const;
};

struct Spectrogram {
  Eigen::MatrixXd magnitudes;  // frames x (fft_size / 2 + 1)
  FrameConfig config;

  Index frames() const { return magnitudes.rows(); }
  Index bins() const { return magnitudes.cols(); }
};

// Periodic Hann (sums to a constant at 50% overlap) or all-ones window.
Eigen::VectorXd make_window(WindowType type, Index length);

inline double window_energy(WindowType type, Index length) {
  return make_window(type, length).squaredNorm();
}

// y[n] = x[n] - alpha * x[n-1], x[-1] = 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> preemphasize(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar alpha) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> y(x.size());
  typename Derived::Scalar prev(0);
  for (Index n = 0; n < x.size(); ++n) {
    y(n) = x(n) - alpha * prev;
    prev = x(n);
  }
  return y;
}

// x[n] = y[n] + alpha * x[n-1]; exact inverse of preemphasize.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> deemphasize(
    const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar alpha) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> x(y.size());
  typename Derived::Scalar prev(0);
  for (Index n = 0; n < y.size(); ++n) {
    x(n) = y(n) + alpha * prev;
    prev = x(n);
  }
  return x;
}

Waveform preemphasize(const Waveform& x, double alpha);
Waveform deemphasize(const Waveform& y, double alpha);

// One-sided DFT magnitude of each windowed, zero-padded frame.
// Throws ContractError if x is shorter than one frame.
Spectrogram stft_magnitude(const Waveform& x, const FrameConfig& cfg);

// One-sided magnitude spectrum of a single block (zero padded to fft_size).
Eigen::VectorXd magnitude_spectrum(const Eigen::Ref<const Eigen::VectorXd>& block, Index fft_size);

}  // namespace mfccvoc::dsp
