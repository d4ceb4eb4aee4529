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

#include "mfccvoc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace mfccvoc::dsp {

void FrameConfig::validate() const {
  if (hop_length <= 0 || hop_length > frame_length || frame_length > fft_size) {
    throw ParameterError("frame config requires 0 < hop_length <= frame_length <= fft_size");
  }
  if ((fft_size & (fft_size - 1)) != 0) {
    throw ParameterError("fft_size must be a power of two, got " + std::to_string(fft_size));
  }
  if (!(preemphasis >= 0.0 && preemphasis < 1.0)) {
    throw ParameterError("preemphasis must lie in [0, 1)");
  }
}

Index FrameConfig::frame_count(Index num_samples) const {
  if (num_samples < frame_length) return 0;
  return (num_samples - frame_length) / hop_length + 1;
}

Index FrameConfig::frame_of_sample(Index n, Index num_frames) const {
  if (num_frames <= 0) return 0;
  const double pos = (static_cast<double>(n) - 0.5 * static_cast<double>(frame_length)) /
                     static_cast<double>(hop_length);
  const auto t = static_cast<Index>(std::floor(pos + 0.5));
  return std::clamp<Index>(t, 0, num_frames - 1);
}

Eigen::VectorXd make_window(WindowType type, Index length) {
  Eigen::VectorXd w(length);
  if (type == WindowType::rectangular) {
    w.setOnes();
    return w;
  }
  for (Index n = 0; n < length; ++n) {
    w(n) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  }
  return w;
}

Waveform preemphasize(const Waveform& x, double alpha) {
  return {preemphasize(x.samples, alpha), x.sample_rate};
}

Waveform deemphasize(const Waveform& y, double alpha) {
  return {deemphasize(y.samples, alpha), y.sample_rate};
}

Eigen::VectorXd magnitude_spectrum(const Eigen::Ref<const Eigen::VectorXd>& block, Index fft_size) {
  std::vector<double> in(static_cast<std::size_t>(fft_size), 0.0);
  const Index n = std::min(block.size(), fft_size);
  for (Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = block(i);
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.fwd(out, in);
  Eigen::VectorXd mag(fft_size / 2 + 1);
  for (Index k = 0; k < mag.size(); ++k) mag(k) = std::abs(out[static_cast<std::size_t>(k)]);
  return mag;
}

Spectrogram stft_magnitude(const Waveform& x, const FrameConfig& cfg) {
  cfg.validate();
  const Index frames = cfg.frame_count(x.size());
  if (frames == 0) {
    throw ContractError("empty input: " + std::to_string(x.size()) +
                        " samples is shorter than one frame of " +
                        std::to_string(cfg.frame_length));
  }
  const Eigen::VectorXd window = make_window(cfg.window, cfg.frame_length);
  Spectrogram spec{Eigen::MatrixXd(frames, cfg.num_bins()), cfg};
  Eigen::VectorXd block(cfg.frame_length);
  for (Index t = 0; t < frames; ++t) {
    block = x.samples.segment(cfg.frame_start(t), cfg.frame_length).cwiseProduct(window);
    spec.magnitudes.row(t) = magnitude_spectrum(block, cfg.fft_size).transpose();
  }
  return spec;
}

}  // namespace mfccvoc::dsp
