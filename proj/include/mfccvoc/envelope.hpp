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

// All-pole envelope fitting from magnitude spectra and the time-varying
// analysis (inverse) and synthesis filters built from it.

#include <Eigen/Core>

#include "mfccvoc/errors.hpp"
#include "mfccvoc/signal.hpp"

namespace mfccvoc::envelope {

using Eigen::Index;

// A(z) = 1 + sum_k a[k] z^-k per frame, with a gain g > 0.
struct ArEnvelope {
  Eigen::MatrixXd coefficients;  // frames x order, a[1..p]
  Eigen::VectorXd gains;         // frames

  Index frames() const { return coefficients.rows(); }
  Index order() const { return coefficients.cols(); }
};

template <typename Scalar>
struct LevinsonResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> a;           // a[1..p]
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> reflection;  // k[1..p]
  Scalar error = Scalar(0);                             // prediction error energy E_p
  Index order_reached = 0;  // < p when the recursion stopped on a non-positive-definite r
};

// Levinson-Durbin recursion on r[0..p]. Stops early, leaving the remaining
// coefficients at zero, if the error energy would become non-positive.
template <typename Derived>
LevinsonResult<typename Derived::Scalar> levinson_durbin(const Eigen::MatrixBase<Derived>& r, Index order) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (order < 1) throw ContractError("levinson_durbin: order must be >= 1");
  if (r.size() < order + 1) throw ContractError("levinson_durbin: need r[0..order]");
  LevinsonResult<Scalar> out;
  out.a = Vector::Zero(order);
  out.reflection = Vector::Zero(order);
  Scalar err = r(0);
  Vector prev(order);
  for (Index m = 1; m <= order; ++m) {
    Scalar acc = r(m);
    for (Index j = 1; j < m; ++j) acc += out.a(j - 1) * r(m - j);
    const Scalar k = -acc / err;
    const Scalar next_err = err * (Scalar(1) - k * k);
    if (!(next_err > Scalar(0)) || !(Eigen::numext::abs(k) < Scalar(1))) break;
    prev.head(m - 1) = out.a.head(m - 1);
    for (Index j = 1; j < m; ++j) out.a(j - 1) = prev(j - 1) + k * prev(m - j - 1);
    out.a(m - 1) = k;
    out.reflection(m - 1) = k;
    err = next_err;
    out.order_reached = m;
  }
  out.error = err;
  return out;
}

// Step-down recursion: true iff every reflection coefficient has |k| < 1,
// i.e. all roots of A(z) lie strictly inside the unit circle.
bool is_minimum_phase(const Eigen::Ref<const Eigen::VectorXd>& a);

// Magnitudes of the roots of A(z), by companion-matrix eigenvalues.
Eigen::VectorXd pole_magnitudes(const Eigen::Ref<const Eigen::VectorXd>& a);

// Squares the one-sided magnitude spectrum, mirrors it to fft_size points
// and inverse transforms. Returns r[0..max_lag].
Eigen::VectorXd autocorrelation_from_spectrum(const Eigen::Ref<const Eigen::VectorXd>& magnitude,
                                              Index fft_size, Index max_lag);

struct AllPoleFrame {
  Eigen::VectorXd a;
  double gain = 1.0;
  bool silent = false;  // r[0] <= 0 fallback taken
};

inline constexpr double kConditioning = 1e-6;
inline constexpr double kSilentGain = 1e-9;

// Levinson fit after scaling r[0] by (1 + 1e-6); gain = sqrt(E_p).
// r[0] <= 0 (or non-finite r) yields A(z) = 1 with a tiny gain.
AllPoleFrame fit_allpole(const Eigen::Ref<const Eigen::VectorXd>& r, Index order);

// Fits every frame of a magnitude spectrogram. Autocorrelations are divided
// by the analysis window energy so that the gain is a per-sample quantity.
ArEnvelope fit_envelope(const dsp::Spectrogram& spec, Index order);

// e[n] = (x[n] + sum_k a_t[k] x[n-k]) / g_t where t is the frame whose center
// is nearest n; past samples carry across frame boundaries.
dsp::Waveform inverse_filter(const dsp::Waveform& x, const ArEnvelope& env, const dsp::FrameConfig& cfg);

// y[n] = g_t e[n] - sum_k a_t[k] y[n-k]. Throws InvariantError on an
// unstable frame.
dsp::Waveform synthesis_filter(const dsp::Waveform& e, const ArEnvelope& env, const dsp::FrameConfig& cfg);

}  // namespace mfccvoc::envelope
