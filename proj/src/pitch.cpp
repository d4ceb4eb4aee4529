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

#include "mfccvoc/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfccvoc::pitch {

PitchTrack PitchTrack::from_f0(const Eigen::Ref<const Eigen::VectorXd>& f0, Index hop, int sample_rate) {
  PitchTrack t;
  t.f0_hz = f0.cwiseMax(0.0);
  t.voiced.resize(static_cast<std::size_t>(f0.size()));
  for (Index i = 0; i < f0.size(); ++i) t.voiced[static_cast<std::size_t>(i)] = f0(i) > 0.0;
  t.hop_length = hop;
  t.sample_rate = sample_rate;
  return t;
}

bool PitchTrack::consistent() const {
  if (static_cast<Index>(voiced.size()) != f0_hz.size()) return false;
  for (Index i = 0; i < f0_hz.size(); ++i) {
    if (voiced[static_cast<std::size_t>(i)] != (f0_hz(i) > 0.0)) return false;
  }
  return true;
}

double PitchTrack::voiced_fraction() const {
  if (voiced.empty()) return 0.0;
  return static_cast<double>(std::count(voiced.begin(), voiced.end(), true)) / static_cast<double>(voiced.size());
}

namespace {

double nacf(const Eigen::VectorXd& x, Index start, Index width, Index lag) {
  const auto a = x.segment(start, width);
  const auto b = x.segment(start + lag, width);
  const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

}  // namespace

PitchTrack track_pitch(const dsp::Waveform& x, const dsp::FrameConfig& frames, const TrackerConfig& cfg) {
  const Index n_frames = frames.frame_count(x.size());
  const double fs = x.sample_rate;
  const auto min_lag = static_cast<Index>(std::floor(fs / cfg.f_max));
  const auto max_lag_cfg = static_cast<Index>(std::ceil(fs / cfg.f_min));
  const Index width = frames.frame_length;
  const double gate = std::pow(10.0, cfg.silence_db / 20.0);

  PitchTrack track;
  track.f0_hz = Eigen::VectorXd::Zero(n_frames);
  track.voiced.assign(static_cast<std::size_t>(n_frames), false);
  track.hop_length = frames.hop_length;
  track.sample_rate = x.sample_rate;

  const Index max_lag = std::min(max_lag_cfg, x.size() - width - 1);
  if (max_lag < min_lag + 2) return track;

  Eigen::VectorXd r(max_lag + 2);
  for (Index t = 0; t < n_frames; ++t) {
    const double rms = std::sqrt(x.samples.segment(frames.frame_start(t), width).squaredNorm() /
                                 static_cast<double>(width));
    if (!(rms > gate)) continue;

    const double center = frames.frame_center(t);
    auto start = static_cast<Index>(std::lround(center - 0.5 * static_cast<double>(width + max_lag)));
    start = std::clamp<Index>(start, 0, x.size() - width - max_lag - 1);

    r.setZero();
    for (Index lag = min_lag - 1; lag <= max_lag + 1; ++lag) r(lag) = nacf(x.samples, start, width, lag);

    double global = -1.0;
    for (Index lag = min_lag; lag <= max_lag; ++lag) {
      if (r(lag) >= r(lag - 1) && r(lag) >= r(lag + 1)) global = std::max(global, r(lag));
    }
    if (global <= 0.0) continue;
    Index best = -1;
    for (Index lag = min_lag; lag <= max_lag; ++lag) {
      if (r(lag) >= r(lag - 1) && r(lag) >= r(lag + 1) && r(lag) >= cfg.octave_tolerance * global) {
        best = lag;
        break;
      }
    }
    if (best < 0 || !(r(best) > cfg.voicing_threshold)) continue;

    const double ym = r(best - 1), y0 = r(best), yp = r(best + 1);
    const double curvature = ym - 2.0 * y0 + yp;
    double shift = curvature < 0.0 ? 0.5 * (ym - yp) / curvature : 0.0;
    shift = std::clamp(shift, -0.5, 0.5);
    const double f0 = std::clamp(fs / (static_cast<double>(best) + shift), cfg.f_min, cfg.f_max);
    track.f0_hz(t) = f0;
    track.voiced[static_cast<std::size_t>(t)] = true;
  }

  if (cfg.median_length >= 3) {
    const Index half = cfg.median_length / 2;
    Eigen::VectorXd smoothed = track.f0_hz;
    std::vector<double> window;
    for (Index t = half; t + half < n_frames; ++t) {
      window.clear();
      bool all_voiced = true;
      for (Index j = t - half; j <= t + half; ++j) {
        all_voiced = all_voiced && track.voiced[static_cast<std::size_t>(j)];
        window.push_back(track.f0_hz(j));
      }
      if (!all_voiced) continue;
      std::nth_element(window.begin(), window.begin() + half, window.end());
      smoothed(t) = window[static_cast<std::size_t>(half)];
    }
    track.f0_hz = smoothed;
  }
  return track;
}

Index period_at(const PitchTrack& track, const dsp::FrameConfig& frames, Index n, double min_f0) {
  const Index t = frames.frame_of_sample(n, track.frames());
  if (track.frames() == 0 || !track.voiced[static_cast<std::size_t>(t)]) return 0;
  const double f0 = std::max(track.f0_hz(t), min_f0);
  return static_cast<Index>(std::lround(track.sample_rate / f0));
}

PitchMarks place_pitch_marks(const PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                             const dsp::Waveform* residual, double min_f0) {
  PitchMarks marks;
  const Index n_frames = track.frames();
  if (n_frames == 0 || length <= 0) return marks;
  if (residual != nullptr && residual->size() < length) {
    throw ContractError("place_pitch_marks: residual shorter than requested length");
  }
  auto voiced_at = [&](Index n) {
    return track.voiced[static_cast<std::size_t>(frames.frame_of_sample(n, n_frames))];
  };
  auto period = [&](double pos) {
    const Index t = frames.frame_of_sample(static_cast<Index>(std::lround(pos)), n_frames);
    return track.sample_rate / std::max(track.f0_hz(t), min_f0);
  };

  Index n = 0;
  while (n < length) {
    if (!voiced_at(n)) {
      ++n;
      continue;
    }
    Index end = n;
    while (end < length && voiced_at(end)) ++end;

    if (residual == nullptr) {
      double pos = static_cast<double>(n);
      while (true) {
        const auto mark = static_cast<Index>(std::lround(pos));
        if (mark >= end) break;
        if (marks.empty() || mark > marks.instants.back()) marks.instants.push_back(mark);
        pos += period(pos);
      }
    } else {
      const auto& r = residual->samples;
      double lo = static_cast<double>(n);
      double hi = lo + period(lo);
      while (lo < static_cast<double>(end)) {
        const auto a = std::max<Index>(static_cast<Index>(std::ceil(lo)), n);
        const auto b = std::min<Index>(static_cast<Index>(std::floor(hi)), end - 1);
        if (a > b) break;
        Index best = a;
        for (Index i = a; i <= b; ++i) {
          if (std::abs(r(i)) > std::abs(r(best))) best = i;
        }
        if (marks.empty() || best > marks.instants.back()) marks.instants.push_back(best);
        const double p = period(static_cast<double>(best));
        lo = static_cast<double>(best) + 0.75 * p;
        hi = static_cast<double>(best) + 1.25 * p;
      }
    }
    n = end;
  }
  return marks;
}

int quantize_f0(double f_hz, const F0Quantizer& q) {
  if (!(f_hz > 0.0)) return 0;
  const double f = std::clamp(f_hz, q.f_min, q.f_max);
  const double pos = (f - q.f_min) / (q.f_max - q.f_min) * (F0Quantizer::kVoicedClasses - 1);
  return 1 + static_cast<int>(std::lround(pos));
}

double dequantize_f0(int cls, const F0Quantizer& q) {
  if (cls < 0 || cls >= F0Quantizer::kClasses) {
    throw ContractError("dequantize_f0: class " + std::to_string(cls) + " outside 0..255");
  }
  if (cls == 0) return 0.0;
  return q.f_min + static_cast<double>(cls - 1) * q.bin_width();
}

F0Metrics f0_metrics(const PitchTrack& reference, const PitchTrack& generated) {
  if (reference.frames() != generated.frames()) {
    throw ContractError("f0_metrics: frame counts differ (" + std::to_string(reference.frames()) + " vs " +
                        std::to_string(generated.frames()) + ")");
  }
  const Index n = reference.frames();
  if (n == 0) throw ContractError("f0_metrics: empty tracks");
  F0Metrics m;
  Index mismatches = 0;
  std::vector<double> a, b;
  for (Index t = 0; t < n; ++t) {
    const bool va = reference.voiced[static_cast<std::size_t>(t)];
    const bool vb = generated.voiced[static_cast<std::size_t>(t)];
    if (va != vb) ++mismatches;
    if (va && vb) {
      a.push_back(reference.f0_hz(t));
      b.push_back(generated.f0_hz(t));
    }
  }
  m.vuv_error_pct = 100.0 * static_cast<double>(mismatches) / static_cast<double>(n);
  m.common_voiced = static_cast<Index>(a.size());
  if (a.empty()) return m;

  const Eigen::Map<const Eigen::VectorXd> ra(a.data(), m.common_voiced);
  const Eigen::Map<const Eigen::VectorXd> rb(b.data(), m.common_voiced);
  m.rmse_hz = std::sqrt((ra - rb).squaredNorm() / static_cast<double>(m.common_voiced));
  const Eigen::VectorXd ca = ra.array() - ra.mean();
  const Eigen::VectorXd cb = rb.array() - rb.mean();
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (denom > 0.0) m.correlation = ca.dot(cb) / denom;
  return m;
}

}  // namespace mfccvoc::pitch
