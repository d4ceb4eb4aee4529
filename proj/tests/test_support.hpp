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

// Shared fixtures: synthetic vowels, scratch directories, small oracles.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfccvoc/signal.hpp"

namespace mfccvoc::testing {

struct Formant {
  double freq;
  double bandwidth;
};

inline const std::vector<Formant>& default_formants() {
  static const std::vector<Formant> f{{730, 90}, {1090, 110}, {2440, 160}, {3400, 250}};
  return f;
}

// All-pole coefficients a[1..p] (A(z) = 1 + sum a_k z^-k) of a cascade of
// second-order resonators.
inline Eigen::VectorXd formant_polynomial(const std::vector<Formant>& formants, int sample_rate) {
  Eigen::VectorXd poly = Eigen::VectorXd::Ones(1);
  for (const auto& f : formants) {
    const double r = std::exp(-M_PI * f.bandwidth / sample_rate);
    const double theta = 2.0 * M_PI * f.freq / sample_rate;
    const Eigen::Vector3d sec(1.0, -2.0 * r * std::cos(theta), r * r);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(poly.size() + 2);
    for (Eigen::Index i = 0; i < poly.size(); ++i) next.segment(i, 3) += poly(i) * sec;
    poly = next;
  }
  return poly.tail(poly.size() - 1);
}

inline Eigen::VectorXd all_pole(const Eigen::VectorXd& e, const Eigen::VectorXd& a) {
  Eigen::VectorXd y(e.size());
  for (Eigen::Index n = 0; n < e.size(); ++n) {
    double acc = e(n);
    for (Eigen::Index k = 1; k <= a.size() && k <= n; ++k) acc -= a(k - 1) * y(n - k);
    y(n) = acc;
  }
  return y;
}

// Impulse train following f0(t) (Hz per sample) by phase accumulation,
// filtered by the formant cascade, peak-normalized to `peak`.
inline dsp::Waveform synthetic_vowel(const Eigen::VectorXd& f0_per_sample, int sample_rate = 16000,
                                     double peak = 0.5, const std::vector<Formant>& formants = default_formants(),
                                     double noise = 0.0, unsigned seed = 3) {
  const Eigen::Index n = f0_per_sample.size();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    phase += f0_per_sample(i) / sample_rate;
    if (phase >= 1.0) {
      phase -= 1.0;
      e(i) = 1.0;
    }
  }
  if (noise > 0.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    for (Eigen::Index i = 0; i < n; ++i) e(i) += g(rng);
  }
  Eigen::VectorXd y = all_pole(e, formant_polynomial(formants, sample_rate));
  y *= peak / y.cwiseAbs().maxCoeff();
  return {y, sample_rate};
}

inline dsp::Waveform synthetic_vowel(double f0, double seconds, int sample_rate = 16000, double peak = 0.5) {
  const auto n = static_cast<Eigen::Index>(seconds * sample_rate);
  return synthetic_vowel(Eigen::VectorXd::Constant(n, f0), sample_rate, peak);
}

inline dsp::Waveform white_noise(Eigen::Index n, double sigma, unsigned seed, int sample_rate = 16000) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = g(rng);
  return {x, sample_rate};
}

inline double rms(const Eigen::VectorXd& x) {
  return x.size() ? std::sqrt(x.squaredNorm() / static_cast<double>(x.size())) : 0.0;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mfccvoc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mfccvoc::testing
