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

#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "mfccvoc/cepstral.hpp"
#include "test_support.hpp"

using namespace mfccvoc;
using namespace mfccvoc::cepstral;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const MelFilterbank& default_mel() {
  static const MelFilterbank fb = build_mel_filterbank(24, 513, 16000, 0.0, 8000.0);
  return fb;
}

const DctBasis& default_dct() {
  static const DctBasis d = build_dct(20, 24);
  return d;
}

dsp::Spectrogram one_frame(const VectorXd& s) {
  dsp::Spectrogram spec;
  spec.magnitudes = s.transpose();
  return spec;
}

MfccSequence random_cepstra(Index frames, std::uint64_t seed, double spread) {
  std::mt19937_64 rng(seed);
  MfccSequence c;
  c.coefficients.resize(frames, 20);
  for (Index t = 0; t < frames; ++t) {
    for (Index k = 0; k < 20; ++k) {
      std::normal_distribution<double> g(0.0, k == 0 ? 3.0 : spread / (1.0 + k));
      c.coefficients(t, k) = g(rng);
    }
  }
  return c;
}

double total_variation(const VectorXd& s) {
  return (s.tail(s.size() - 1) - s.head(s.size() - 1)).cwiseAbs().sum() / s.sum();
}

}  // namespace

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.1728387480312).epsilon(1e-12));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-12));
}

TEST_CASE("default filterbank geometry") {
  const auto& fb = default_mel();
  CHECK(fb.n_mels() == 24);
  CHECK(fb.n_bins() == 513);
  REQUIRE(fb.vertices_hz.size() == 26);
  CHECK(fb.vertices_hz(0) == 0.0);
  CHECK(fb.vertices_hz(25) == 8000.0);
  // pinned from an independent evaluation of the mel formula
  CHECK(fb.center_freqs(0) == doctest::Approx(74.23872311079278).epsilon(1e-10));
  CHECK(fb.center_freqs(23) == doctest::Approx(7165.7910257073645).epsilon(1e-10));
  const double step = hz_to_mel(8000.0) / 25.0;
  for (Index i = 0; i < 26; ++i) CHECK(hz_to_mel(fb.vertices_hz(i)) == doctest::Approx(i * step).epsilon(1e-9));
  for (Index i = 1; i < 24; ++i) CHECK(fb.center_freqs(i) > fb.center_freqs(i - 1));
}

TEST_CASE("filters are unit-peak unimodal triangles covering the interior") {
  const auto& fb = default_mel();
  CHECK(fb.weights.minCoeff() >= 0.0);
  for (Index i = 0; i < fb.n_mels(); ++i) {
    Index peak = 0;
    const double top = fb.weights.row(i).maxCoeff(&peak);
    CHECK(top > 0.0);
    CHECK(top <= 1.0);
    for (Index k = 1; k <= peak; ++k) CHECK(fb.weights(i, k) >= fb.weights(i, k - 1));
    for (Index k = peak + 1; k < fb.n_bins(); ++k) CHECK(fb.weights(i, k) <= fb.weights(i, k - 1));
  }
  VectorXd cols = fb.weights.colwise().sum();
  for (Index k = 1; k < 512; ++k) CHECK(cols(k) > 0.0);
}

TEST_CASE("filterbank parameter errors") {
  CHECK_THROWS_AS(build_mel_filterbank(24, 513, 16000, 0.0, 8001.0), ParameterError);
  CHECK_THROWS_AS(build_mel_filterbank(1, 513, 16000, 0.0, 8000.0), ParameterError);
  CHECK_THROWS_AS(build_mel_filterbank(24, 513, 16000, 900.0, 800.0), ParameterError);
  CHECK_THROWS_AS(build_dct(25, 24), ParameterError);
}

TEST_CASE("DCT rows are orthonormal and the pseudo-inverse is the transpose") {
  const auto& d = default_dct();
  CHECK((d.forward * d.pseudo_inverse - MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.pseudo_inverse == d.forward.transpose());
  // agrees with the generic SVD pseudo-inverse
  CHECK((pseudo_inverse(d.forward) - d.pseudo_inverse).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mel matrix has full row rank and a right inverse") {
  const auto& fb = default_mel();
  Eigen::JacobiSVD<MatrixXd> svd(fb.weights);
  const auto& sv = svd.singularValues();
  CHECK(sv(23) / sv(0) > 1e-6);
  CHECK((fb.weights * fb.pseudo_inverse - MatrixXd::Identity(24, 24)).cwiseAbs().maxCoeff() < 1e-8);
  // minimum-norm solution: M+ = M^T (M M^T)^-1
  MatrixXd normal = fb.weights.transpose() * (fb.weights * fb.weights.transpose()).inverse();
  CHECK((normal - fb.pseudo_inverse).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pseudo-inverse textbook cases") {
  CHECK(pseudo_inverse(MatrixXd::Identity(5, 5).eval()).isApprox(MatrixXd::Identity(5, 5)));
  Eigen::Matrix2d d;
  d << 2, 0, 0, 0;
  Eigen::Matrix2d expect;
  expect << 0.5, 0, 0, 0;
  CHECK((pseudo_inverse(d) - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(pseudo_inverse(MatrixXd(0, 3)), ContractError);

  // Penrose identities on a rank-deficient rectangle
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  MatrixXd a = MatrixXd::NullaryExpr(6, 3, [&] { return g(rng); }) * MatrixXd::NullaryExpr(3, 9, [&] { return g(rng); });
  MatrixXd p = pseudo_inverse(a);
  CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p * a * p - p).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((a * p).transpose() - a * p).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((p * a).transpose() - p * a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mfcc of a flat spectrum") {
  const auto& fb = default_mel();
  const auto& d = default_dct();
  auto c = mfcc(one_frame(VectorXd::Ones(513)), fb, d, 1e-10);
  VectorXd r = fb.weights.rowwise().sum();
  VectorXd expect = d.forward * r.array().log().matrix();
  CHECK((c.coefficients.row(0).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mfcc of silence sits entirely in c0") {
  auto c = mfcc(one_frame(VectorXd::Zero(513)), default_mel(), default_dct(), 1e-10);
  CHECK(c.coefficients(0, 0) == doctest::Approx(std::sqrt(24.0) * std::log(1e-10)).epsilon(1e-12));
  CHECK(c.coefficients.row(0).tail(19).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scaling the spectrum only moves c0") {
  auto noise = testing::white_noise(513, 1.0, 2).samples.cwiseAbs().eval();
  auto a = mfcc(one_frame(noise), default_mel(), default_dct(), 1e-10);
  auto b = mfcc(one_frame(2.0 * noise), default_mel(), default_dct(), 1e-10);
  MatrixXd diff = b.coefficients - a.coefficients;
  CHECK(diff(0, 0) == doctest::Approx(std::sqrt(24.0) * std::log(2.0)).epsilon(1e-12));
  CHECK(diff.row(0).tail(19).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mfcc dimension checks") {
  CHECK_THROWS_AS(mfcc(one_frame(VectorXd::Ones(257)), default_mel(), default_dct(), 1e-10), ContractError);
  MfccSequence c;
  c.coefficients = MatrixXd::Zero(2, 13);
  CHECK_THROWS_AS(reconstruct_spectrum(c, default_mel(), default_dct()), ContractError);
}

TEST_CASE("reconstruction round trip and nonnegativity") {
  const auto& fb = default_mel();
  const auto& d = default_dct();
  for (double spread : {1.0, 8.0, 40.0}) {
    auto c = random_cepstra(300, 17, spread);
    auto rec = reconstruct_spectrum(c, fb, d);
    CHECK(rec.spectrum.magnitudes.minCoeff() >= 0.0);
    auto back = mfcc(rec.spectrum, fb, d, 1e-300);
    MatrixXd raw = reconstruct_spectrum(c, fb, d, false).spectrum.magnitudes;
    Index clean = 0;
    for (Index t = 0; t < c.frames(); ++t) {
      if (raw.row(t).minCoeff() < 0.0) continue;
      ++clean;
      const double rel = (back.coefficients.row(t) - c.coefficients.row(t)).norm() / c.coefficients.row(t).norm();
      CHECK(rel < 1e-3);
    }
    CHECK(clean + rec.floored_frames == c.frames());
    MESSAGE("spread " << spread << ": floored frames " << rec.floored_frames << "/" << c.frames());
  }
}

TEST_CASE("unfloored reconstruction keeps negative lobes") {
  auto c = random_cepstra(200, 3, 40.0);
  auto raw = reconstruct_spectrum(c, default_mel(), default_dct(), false);
  auto floored = reconstruct_spectrum(c, default_mel(), default_dct(), true);
  CHECK(raw.floored_bins == 0);
  CHECK(floored.floored_bins == (raw.spectrum.magnitudes.array() < 0.0).count());
}

TEST_CASE("reconstructed envelope is smoother than a harmonic spectrum") {
  dsp::FrameConfig cfg;
  auto vowel = testing::synthetic_vowel(120.0, 0.2);
  auto spec = dsp::stft_magnitude(vowel, cfg);
  const auto& fb = default_mel();
  const auto& d = default_dct();
  auto c = mfcc(spec, fb, d, 1e-10);
  auto rec = reconstruct_spectrum(c, fb, d);
  for (Index t = 5; t < 10; ++t) {
    VectorXd s = spec.magnitudes.row(t).transpose();
    VectorXd e = rec.spectrum.magnitudes.row(t).transpose();
    CHECK(total_variation(e) < total_variation(s));
  }
}

TEST_CASE("analyzer bundles the default geometry") {
  CepstralAnalyzer an(CepstralConfig{}, dsp::FrameConfig{}, 16000);
  CHECK(an.mel.n_mels() == 24);
  CHECK(an.dct.n_coef() == 20);
}
