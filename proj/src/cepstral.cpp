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

#include "mfccvoc/cepstral.hpp"

#include <numbers>
#include <string>

namespace mfccvoc::cepstral {

MelFilterbank build_mel_filterbank(Index n_mels, Index n_bins, int sample_rate, double f_min,
                                   double f_max) {
  if (n_mels < 2) throw ParameterError("mel filterbank needs at least 2 filters");
  if (n_bins < 2) throw ParameterError("mel filterbank needs at least 2 frequency bins");
  const double nyquist = 0.5 * sample_rate;
  if (!(f_min >= 0.0 && f_min < f_max)) throw ParameterError("mel range requires 0 <= f_min < f_max");
  if (f_max > nyquist) {
    throw ParameterError("mel f_max " + std::to_string(f_max) + " Hz exceeds Nyquist " +
                         std::to_string(nyquist) + " Hz");
  }

  MelFilterbank fb;
  fb.sample_rate = sample_rate;
  fb.vertices_hz.resize(n_mels + 2);
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  for (Index i = 0; i < n_mels + 2; ++i) {
    const double m = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1);
    fb.vertices_hz(i) = mel_to_hz(m);
  }
  // mel_to_hz(hz_to_mel(f)) is not exact; pin the ends
  fb.vertices_hz(0) = f_min;
  fb.vertices_hz(n_mels + 1) = f_max;
  fb.center_freqs = fb.vertices_hz.segment(1, n_mels);

  const double fft_size = 2.0 * static_cast<double>(n_bins - 1);
  fb.weights.setZero(n_mels, n_bins);
  for (Index i = 0; i < n_mels; ++i) {
    const double lo = fb.vertices_hz(i);
    const double mid = fb.vertices_hz(i + 1);
    const double hi = fb.vertices_hz(i + 2);
    for (Index k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb.weights(i, k) = std::max(0.0, std::min(rise, fall));
    }
    if (fb.weights.row(i).maxCoeff() <= 0.0) {
      throw ParameterError("mel filter " + std::to_string(i) +
                           " covers no frequency bin; use more bins or fewer filters");
    }
  }
  fb.pseudo_inverse = pseudo_inverse(fb.weights);
  // Bins no filter touches get exactly zero from the minimum-norm solution;
  // SVD leaves ~1e-17 of either sign there, which would trip the floor.
  for (Index k = 0; k < n_bins; ++k) {
    if (fb.weights.col(k).maxCoeff() <= 0.0) fb.pseudo_inverse.row(k).setZero();
  }
  return fb;
}

DctBasis build_dct(Index n_coef, Index n_mels) {
  if (n_coef < 1 || n_coef > n_mels) throw ParameterError("DCT requires 1 <= n_coef <= n_mels");
  DctBasis dct;
  dct.forward.resize(n_coef, n_mels);
  const double n = static_cast<double>(n_mels);
  for (Index k = 0; k < n_coef; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (Index m = 0; m < n_mels; ++m) {
      dct.forward(k, m) =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(m) + 0.5) / n);
    }
  }
  dct.pseudo_inverse = dct.forward.transpose();
  return dct;
}

MfccSequence mfcc(const dsp::Spectrogram& spec, const MelFilterbank& mel, const DctBasis& dct,
                  double floor_eps) {
  if (spec.bins() != mel.n_bins()) {
    throw ContractError("mfcc: spectrogram has " + std::to_string(spec.bins()) +
                        " bins, filterbank expects " + std::to_string(mel.n_bins()));
  }
  if (dct.n_mels() != mel.n_mels()) {
    throw ContractError("mfcc: DCT expects " + std::to_string(dct.n_mels()) + " mel channels, filterbank has " +
                        std::to_string(mel.n_mels()));
  }
  if (!(floor_eps > 0.0)) throw ContractError("mfcc: floor_eps must be positive");

  const Eigen::MatrixXd log_mel =
      (spec.magnitudes * mel.weights.transpose()).array().max(floor_eps).log().matrix();
  return {log_mel * dct.forward.transpose(), spec.config, mel.sample_rate};
}

Reconstruction reconstruct_spectrum(const MfccSequence& c, const MelFilterbank& mel,
                                    const DctBasis& dct, bool floor_negative) {
  if (c.n_coef() != dct.n_coef()) {
    throw ContractError("reconstruct_spectrum: sequence has " + std::to_string(c.n_coef()) +
                        " coefficients, DCT expects " + std::to_string(dct.n_coef()));
  }
  if (dct.n_mels() != mel.n_mels()) throw ContractError("reconstruct_spectrum: DCT/filterbank size mismatch");

  const Eigen::MatrixXd mel_energy = (c.coefficients * dct.pseudo_inverse.transpose()).array().exp().matrix();
  Reconstruction out;
  out.spectrum.config = c.config;
  out.spectrum.magnitudes = mel_energy * mel.pseudo_inverse.transpose();
  if (floor_negative) {
    for (Index t = 0; t < out.spectrum.frames(); ++t) {
      Index clamped = 0;
      for (Index k = 0; k < out.spectrum.bins(); ++k) {
        double& v = out.spectrum.magnitudes(t, k);
        if (v < 0.0) {
          v = 0.0;
          ++clamped;
        }
      }
      out.floored_bins += clamped;
      if (clamped > 0) ++out.floored_frames;
    }
  }
  return out;
}

CepstralAnalyzer::CepstralAnalyzer(const CepstralConfig& cfg, const dsp::FrameConfig& frames,
                                   int sample_rate)
    : config(cfg),
      mel(build_mel_filterbank(cfg.n_mels, frames.num_bins(), sample_rate, cfg.f_min, cfg.f_max)),
      dct(build_dct(cfg.n_coef, cfg.n_mels)) {}

}  // namespace mfccvoc::cepstral
