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

#include "mfccvoc/envelope.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

namespace mfccvoc::envelope {

bool is_minimum_phase(const Eigen::Ref<const Eigen::VectorXd>& a) {
  Eigen::VectorXd cur = a;
  for (Index m = cur.size(); m >= 1; --m) {
    const double k = cur(m - 1);
    if (!(std::abs(k) < 1.0)) return false;
    const double denom = 1.0 - k * k;
    Eigen::VectorXd next(m - 1);
    for (Index j = 1; j < m; ++j) next(j - 1) = (cur(j - 1) - k * cur(m - j - 1)) / denom;
    cur = next;
  }
  return true;
}

Eigen::VectorXd pole_magnitudes(const Eigen::Ref<const Eigen::VectorXd>& a) {
  const Index p = a.size();
  if (p == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  companion.row(0) = -a.transpose();
  for (Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs();
}

Eigen::VectorXd autocorrelation_from_spectrum(const Eigen::Ref<const Eigen::VectorXd>& magnitude,
                                              Index fft_size, Index max_lag) {
  if (magnitude.size() != fft_size / 2 + 1) {
    throw ContractError("autocorrelation_from_spectrum: expected " + std::to_string(fft_size / 2 + 1) +
                        " bins, got " + std::to_string(magnitude.size()));
  }
  if (max_lag >= fft_size) throw ContractError("autocorrelation_from_spectrum: max_lag too large");
  std::vector<std::complex<double>> power(static_cast<std::size_t>(magnitude.size()));
  for (Index k = 0; k < magnitude.size(); ++k) power[static_cast<std::size_t>(k)] = magnitude(k) * magnitude(k);
  std::vector<double> r;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.inv(r, power, static_cast<std::size_t>(fft_size));
  Eigen::VectorXd out(max_lag + 1);
  for (Index k = 0; k <= max_lag; ++k) out(k) = r[static_cast<std::size_t>(k)];
  return out;
}

AllPoleFrame fit_allpole(const Eigen::Ref<const Eigen::VectorXd>& r, Index order) {
  if (order < 1) throw ContractError("fit_allpole: order must be >= 1");
  if (r.size() < order + 1) throw ContractError("fit_allpole: need r[0..order]");
  AllPoleFrame out;
  out.a = Eigen::VectorXd::Zero(order);
  if (!(r(0) > 0.0) || !r.allFinite()) {
    out.gain = kSilentGain;
    out.silent = true;
    return out;
  }
  Eigen::VectorXd conditioned = r.head(order + 1);
  conditioned(0) *= 1.0 + kConditioning;
  const auto lev = levinson_durbin(conditioned, order);
  out.a = lev.a;
  out.gain = std::sqrt(lev.error);
  return out;
}

ArEnvelope fit_envelope(const dsp::Spectrogram& spec, Index order) {
  const double norm = dsp::window_energy(spec.config.window, spec.config.frame_length);
  ArEnvelope env{Eigen::MatrixXd(spec.frames(), order), Eigen::VectorXd(spec.frames())};
  for (Index t = 0; t < spec.frames(); ++t) {
    const Eigen::VectorXd r =
        autocorrelation_from_spectrum(spec.magnitudes.row(t).transpose(), spec.config.fft_size, order) / norm;
    const AllPoleFrame f = fit_allpole(r, order);
    env.coefficients.row(t) = f.a.transpose();
    env.gains(t) = f.gain;
  }
  return env;
}

namespace {

void check_envelope(const ArEnvelope& env) {
  if (env.frames() < 1) throw ContractError("envelope has no frames");
  if (env.gains.size() != env.frames()) throw ContractError("envelope gain count differs from frame count");
}

}  // namespace

dsp::Waveform inverse_filter(const dsp::Waveform& x, const ArEnvelope& env, const dsp::FrameConfig& cfg) {
  check_envelope(env);
  const Index p = env.order();
  dsp::Waveform y{Eigen::VectorXd(x.size()), x.sample_rate};
  for (Index n = 0; n < x.size(); ++n) {
    const Index t = cfg.frame_of_sample(n, env.frames());
    double acc = x.samples(n);
    for (Index k = 1; k <= p && k <= n; ++k) acc += env.coefficients(t, k - 1) * x.samples(n - k);
    y.samples(n) = acc / env.gains(t);
  }
  return y;
}

dsp::Waveform synthesis_filter(const dsp::Waveform& e, const ArEnvelope& env, const dsp::FrameConfig& cfg) {
  check_envelope(env);
  for (Index t = 0; t < env.frames(); ++t) {
    if (!is_minimum_phase(env.coefficients.row(t).transpose())) {
      throw InvariantError("synthesis_filter: frame " + std::to_string(t) + " is unstable");
    }
    if (!(env.gains(t) > 0.0) || !std::isfinite(env.gains(t))) {
      throw InvariantError("synthesis_filter: frame " + std::to_string(t) + " has a non-positive gain");
    }
  }
  const Index p = env.order();
  dsp::Waveform y{Eigen::VectorXd(e.size()), e.sample_rate};
  for (Index n = 0; n < e.size(); ++n) {
    const Index t = cfg.frame_of_sample(n, env.frames());
    double acc = env.gains(t) * e.samples(n);
    for (Index k = 1; k <= p && k <= n; ++k) acc -= env.coefficients(t, k - 1) * y.samples(n - k);
    y.samples(n) = acc;
  }
  return y;
}

}  // namespace mfccvoc::envelope
