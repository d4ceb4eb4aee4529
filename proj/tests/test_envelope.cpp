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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <random>

#include <Eigen/Cholesky>

#include "mfccvoc/cepstral.hpp"
#include "mfccvoc/envelope.hpp"
#include "test_support.hpp"

using namespace mfccvoc;
using namespace mfccvoc::envelope;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// |1 / A(e^jw)| on the half-spectrum grid of an fft_size transform.
VectorXd allpole_magnitude(const VectorXd& a, Index fft_size) {
  VectorXd mag(fft_size / 2 + 1);
  for (Index k = 0; k < mag.size(); ++k) {
    const double w = 2.0 * M_PI * k / fft_size;
    std::complex<double> acc = 1.0;
    for (Index j = 0; j < a.size(); ++j) acc += a(j) * std::polar(1.0, -w * (j + 1));
    mag(k) = 1.0 / std::abs(acc);
  }
  return mag;
}

ArEnvelope single_frame(const VectorXd& a, double gain) {
  ArEnvelope env;
  env.coefficients = a.transpose();
  env.gains = VectorXd::Constant(1, gain);
  return env;
}

}  // namespace

TEST_CASE("flat spectrum has an impulse autocorrelation") {
  VectorXd r = autocorrelation_from_spectrum(VectorXd::Ones(513), 1024, 30);
  CHECK(r(0) > 0.0);
  CHECK(r.tail(30).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("AR(1) autocorrelation shape") {
  VectorXd a(1);
  a << -0.9;
  VectorXd r = autocorrelation_from_spectrum(allpole_magnitude(a, 1024), 1024, 5);
  for (Index k = 0; k <= 5; ++k) CHECK(std::abs(r(k) / r(0) - std::pow(0.9, k)) < 1e-3);
}

TEST_CASE("autocorrelation input checks") {
  CHECK_THROWS_AS(autocorrelation_from_spectrum(VectorXd::Ones(100), 1024, 3), ContractError);
}

TEST_CASE("first-order Levinson by hand") {
  VectorXd r(3);
  r << 1.0, 0.9, 0.81;
  auto lev = levinson_durbin(r, 1);
  CHECK(lev.a(0) == doctest::Approx(-0.9).epsilon(1e-14));
  CHECK(lev.error == doctest::Approx(0.19).epsilon(1e-14));
  auto two = levinson_durbin(r, 2);
  CHECK(std::abs(two.a(1)) < 1e-14);  // AR(1) sequence: second coefficient vanishes
}

TEST_CASE("AR(2) recovery from its analytic autocorrelation") {
  const double rho = 0.9;
  const double a1 = -2.0 * rho * std::cos(M_PI / 4.0);
  const double a2 = rho * rho;
  // Yule-Walker relations solved for r1, r2 given r0 = 1
  VectorXd r(3);
  r(0) = 1.0;
  r(1) = -a1 / (1.0 + a2);
  r(2) = -a1 * r(1) - a2;
  auto f = fit_allpole(r, 2);
  CHECK(std::abs(f.a(0) - a1) < 1e-3);
  CHECK(std::abs(f.a(1) - a2) < 1e-3);

  // same through the spectrum path
  VectorXd a(2);
  a << a1, a2;
  VectorXd rs = autocorrelation_from_spectrum(allpole_magnitude(a, 1024), 1024, 2);
  auto g = fit_allpole(rs, 2);
  CHECK((g.a - a).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("white autocorrelation and silent fallback") {
  VectorXd r = VectorXd::Zero(31);
  r(0) = 1.0;
  auto f = fit_allpole(r, 30);
  CHECK(f.a.isZero(0.0));
  CHECK(f.gain == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(f.silent);

  auto s = fit_allpole(VectorXd::Zero(31), 30);
  CHECK(s.silent);
  CHECK(s.a.isZero(0.0));
  CHECK(s.gain == kSilentGain);
  CHECK(s.gain > 0.0);
}

TEST_CASE("Levinson agrees with a direct Toeplitz solve at order 30") {
  cepstral::CepstralAnalyzer an({}, {}, 16000);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    cepstral::MfccSequence c;
    c.coefficients.resize(1, 20);
    for (Index k = 0; k < 20; ++k) c.coefficients(0, k) = std::normal_distribution<double>(0.0, 2.0 / (1 + k))(rng);
    VectorXd s = an.reconstruct(c).spectrum.magnitudes.row(0).transpose();
    VectorXd r = autocorrelation_from_spectrum(s, 1024, 30);
    r(0) *= 1.0 + 1e-6;
    MatrixXd toeplitz(30, 30);
    for (Index i = 0; i < 30; ++i)
      for (Index j = 0; j < 30; ++j) toeplitz(i, j) = r(std::abs(i - j));
    VectorXd direct = toeplitz.ldlt().solve(-r.segment(1, 30));
    auto lev = levinson_durbin(r, 30);
    REQUIRE(lev.order_reached == 30);
    CHECK((lev.a - direct).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("levinson is scalar generic") {
  Eigen::VectorXf r(3);
  r << 1.f, 0.5f, 0.25f;
  auto lev = levinson_durbin(r, 2);
  CHECK(lev.a(0) == doctest::Approx(-0.5f));
}

TEST_CASE("envelopes fitted to random smooth spectra are stable") {
  cepstral::CepstralAnalyzer an({}, {}, 16000);
  std::mt19937_64 rng(21);
  cepstral::MfccSequence c;
  c.config = dsp::FrameConfig{};
  c.coefficients.resize(200, 20);
  for (Index t = 0; t < 200; ++t)
    for (Index k = 0; k < 20; ++k) c.coefficients(t, k) = std::normal_distribution<double>(0.0, 3.0 / (1 + k))(rng);
  auto env = fit_envelope(an.reconstruct(c).spectrum, 30);
  for (Index t = 0; t < env.frames(); ++t) {
    VectorXd a = env.coefficients.row(t).transpose();
    CHECK(pole_magnitudes(a).maxCoeff() < 1.0);
    CHECK(is_minimum_phase(a));
    CHECK(env.gains(t) > 0.0);
  }
}

TEST_CASE("stability test agrees with the companion matrix") {
  VectorXd stable(2), unstable(2);
  stable << -1.8 * std::cos(0.3), 0.81;
  unstable << -2.2 * std::cos(0.3), 1.21;
  CHECK(is_minimum_phase(stable));
  CHECK(pole_magnitudes(stable).maxCoeff() == doctest::Approx(0.9));
  CHECK_FALSE(is_minimum_phase(unstable));
  CHECK(pole_magnitudes(unstable).maxCoeff() == doctest::Approx(1.1));
}

TEST_CASE("synthesis filter impulse response is geometric") {
  dsp::FrameConfig cfg;
  VectorXd a(1);
  a << -0.5;
  dsp::Waveform e{VectorXd::Zero(40), 16000};
  e.samples(0) = 1.0;
  auto y = synthesis_filter(e, single_frame(a, 1.0), cfg);
  for (Index n = 0; n < 40; ++n) CHECK(y.samples(n) == doctest::Approx(std::pow(0.5, n)).epsilon(1e-14));
}

TEST_CASE("identity envelope passes signals through") {
  dsp::FrameConfig cfg;
  auto x = testing::white_noise(1000, 1.0, 3);
  auto env = single_frame(VectorXd::Zero(30), 1.0);
  CHECK(inverse_filter(x, env, cfg).samples == x.samples);
  CHECK(synthesis_filter(x, env, cfg).samples == x.samples);
}

TEST_CASE("inverse filter recovers the excitation of an all-pole process") {
  dsp::FrameConfig cfg;
  VectorXd a = testing::formant_polynomial(testing::default_formants(), 16000);
  auto e = testing::white_noise(4000, 1.0, 8);
  dsp::Waveform x{testing::all_pole(e.samples, a), 16000};
  auto back = inverse_filter(x, single_frame(a, 1.0), cfg);
  CHECK((back.samples - e.samples).tail(4000 - a.size()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("time-varying filters invert each other frame by frame") {
  dsp::FrameConfig cfg;
  cepstral::CepstralAnalyzer an({}, cfg, 16000);
  auto vowel = testing::synthetic_vowel(140.0, 0.25);
  auto env = fit_envelope(an.reconstruct(an.analyze(dsp::stft_magnitude(vowel, cfg))).spectrum, 30);
  REQUIRE(env.frames() > 10);
  auto noise = testing::white_noise(vowel.size(), 1.0, 6);
  auto y = synthesis_filter(noise, env, cfg);
  auto back = inverse_filter(y, env, cfg);
  CHECK((back.samples - noise.samples).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("unstable frames are rejected") {
  dsp::FrameConfig cfg;
  VectorXd a(1);
  a << -1.5;
  CHECK_THROWS_AS(synthesis_filter(testing::white_noise(10, 1.0, 1), single_frame(a, 1.0), cfg), InvariantError);
  CHECK_THROWS_AS(synthesis_filter(testing::white_noise(10, 1.0, 1), single_frame(VectorXd::Zero(1), 0.0), cfg),
                  InvariantError);
}
