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

// Mel filterbank, truncated DCT, MFCC computation and least-squares
// spectrum reconstruction:
//
//   C = D log(M S)          (analysis)
//   S^ = max(M+ exp(D+ C), 0)  (reconstruction)

#include <cmath>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "mfccvoc/errors.hpp"
#include "mfccvoc/signal.hpp"

namespace mfccvoc::cepstral {

using Eigen::Index;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Moore-Penrose pseudoinverse through the SVD. Singular values below
// rtol * sigma_max are treated as zero; rtol < 0 selects
// max(rows, cols) * machine epsilon.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pseudo_inverse(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar rtol = -1) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.size() == 0) throw ContractError("pseudo_inverse of an empty matrix");
  if (!a.allFinite()) throw ContractError("pseudo_inverse of a matrix with non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  if (rtol < Scalar(0)) {
    rtol = static_cast<Scalar>(std::max(a.rows(), a.cols())) * Eigen::NumTraits<Scalar>::epsilon();
  }
  const Scalar cutoff = rtol * (sigma.size() > 0 ? sigma(0) : Scalar(0));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) {
    inv(i) = (sigma(i) > cutoff && sigma(i) > Scalar(0)) ? Scalar(1) / sigma(i) : Scalar(0);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

struct MelFilterbank {
  Eigen::MatrixXd weights;        // n_mels x n_bins, unit-peak triangles
  Eigen::MatrixXd pseudo_inverse;  // n_bins x n_mels
  Eigen::VectorXd vertices_hz;    // n_mels + 2 triangle vertices
  Eigen::VectorXd center_freqs;   // n_mels
  int sample_rate = 16000;

  Index n_mels() const { return weights.rows(); }
  Index n_bins() const { return weights.cols(); }
};

// Triangles with vertices equally spaced on the mel scale between f_min and
// f_max. Filter i rises from vertex i to i+1 and falls to i+2.
MelFilterbank build_mel_filterbank(Index n_mels, Index n_bins, int sample_rate, double f_min,
                                   double f_max);

struct DctBasis {
  Eigen::MatrixXd forward;         // n_coef x n_mels, orthonormal rows
  Eigen::MatrixXd pseudo_inverse;  // n_mels x n_coef, equal to forward^T

  Index n_coef() const { return forward.rows(); }
  Index n_mels() const { return forward.cols(); }
};

// Orthonormal type-II DCT truncated to the first n_coef rows.
DctBasis build_dct(Index n_coef, Index n_mels);

struct MfccSequence {
  Eigen::MatrixXd coefficients;  // frames x n_coef; column 0 carries log energy
  dsp::FrameConfig config;
  int sample_rate = 16000;

  Index frames() const { return coefficients.rows(); }
  Index n_coef() const { return coefficients.cols(); }
};

struct CepstralConfig {
  Index n_mels = 24;
  Index n_coef = 20;
  double f_min = 0.0;
  double f_max = 8000.0;
  double floor_eps = 1e-10;
};

// Per frame c = D log(max(M s, floor_eps)) on the magnitude spectrum.
MfccSequence mfcc(const dsp::Spectrogram& spec, const MelFilterbank& mel, const DctBasis& dct,
                  double floor_eps);

struct Reconstruction {
  dsp::Spectrogram spectrum;
  Index floored_bins = 0;    // entries clamped to zero
  Index floored_frames = 0;  // frames with at least one clamped entry
};

// S^ = M+ exp(D+ c) per frame, negative values floored to zero unless
// floor_negative is false.
Reconstruction reconstruct_spectrum(const MfccSequence& c, const MelFilterbank& mel,
                                    const DctBasis& dct, bool floor_negative = true);

// Mel filterbank and DCT pair for one configuration.
struct CepstralAnalyzer {
  CepstralConfig config;
  MelFilterbank mel;
  DctBasis dct;

  CepstralAnalyzer(const CepstralConfig& cfg, const dsp::FrameConfig& frames, int sample_rate);

  MfccSequence analyze(const dsp::Spectrogram& spec) const {
    return mfcc(spec, mel, dct, config.floor_eps);
  }
  Reconstruction reconstruct(const MfccSequence& c) const {
    return reconstruct_spectrum(c, mel, dct);
  }
};

}  // namespace mfccvoc::cepstral
