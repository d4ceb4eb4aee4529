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

#include "mfccvoc/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mfccvoc::excitation {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Periodic Hann of length n.
double hann(Index i, Index n) {
  return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
}

constexpr std::uint64_t kNoiseStream = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kLatentStream = 0xbb67ae8584caa73bULL;

}  // namespace

PulseDataset extract_pulses(const dsp::Waveform& residual, const pitch::PitchMarks& marks,
                            const pitch::PitchTrack& track, const dsp::FrameConfig& frames) {
  PulseDataset out;
  const auto& r = residual.samples;
  const Index n = r.size();
  const auto& m = marks.instants;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Index mark = m[k];
    if (mark < 0 || mark >= n) throw ContractError("extract_pulses: mark " + std::to_string(mark) + " out of bounds");
    const Index period = pitch::period_at(track, frames, mark);
    if (period <= 0) continue;
    // Each half of the window reaches the neighbouring mark, so halves of
    // adjacent pulses sum to one even when rounding makes the spacing
    // alternate. Marks further apart than 1.5 periods belong to another
    // voiced run; the local period stands in there, and for spans that would
    // not fit the buffer.
    auto span = [&](Index d) { return d > 0 && 2 * d <= 3 * period && 2 * d <= kPulseLength ? d : period; };
    const Index left = span(k > 0 ? mark - m[k - 1] : 0);
    const Index right = span(k + 1 < m.size() ? m[k + 1] - mark : 0);
    if (2 * period > kPulseLength) {
      ++out.skipped_pulses;
      continue;
    }
    Pulse p;
    p.mark = mark;
    p.period_samples = period;
    for (Index j = -left; j < right; ++j) {
      const Index src = mark + j;
      if (src < 0 || src >= n) continue;
      const double w = j < 0 ? hann(j + left, 2 * left) : hann(j + right, 2 * right);
      p.samples(kPulseCenter + j) = r(src) * w;
    }
    out.pulses.push_back(std::move(p));
  }
  return out;
}

MatrixXd frame_conditioning(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track) {
  if (mfcc.frames() != track.frames()) {
    throw ContractError("frame count mismatch: " + std::to_string(mfcc.frames()) + " MFCC frames vs " +
                        std::to_string(track.frames()) + " F0 frames");
  }
  const Index n_mfcc = kCondDim - 2;
  if (mfcc.n_coef() < n_mfcc) {
    throw ContractError("conditioning needs " + std::to_string(n_mfcc) + " MFCCs per frame, got " +
                        std::to_string(mfcc.n_coef()));
  }
  MatrixXd cond = MatrixXd::Zero(kCondDim, mfcc.frames());
  for (Index t = 0; t < mfcc.frames(); ++t) {
    cond.col(t).head(n_mfcc) = mfcc.coefficients.row(t).head(n_mfcc).transpose();
    if (track.voiced[static_cast<std::size_t>(t)]) {
      cond(n_mfcc, t) = std::log(track.f0_hz(t));
      cond(n_mfcc + 1, t) = 1.0;
    }
  }
  return cond;
}

PulseDataset associate_frames(const PulseDataset& extracted, const pitch::PitchTrack& track,
                              const dsp::FrameConfig& frames, const MatrixXd& conditioning) {
  if (conditioning.rows() != kCondDim || conditioning.cols() != track.frames()) {
    throw ContractError("associate_frames: conditioning must be 22 x frames");
  }
  PulseDataset out;
  out.skipped_pulses = extracted.skipped_pulses;
  std::vector<Index> chosen;
  for (Index t = 0; t < track.frames(); ++t) {
    if (!track.voiced[static_cast<std::size_t>(t)]) continue;
    const double center = frames.frame_center(t);
    const double period = track.sample_rate / track.f0_hz(t);
    // Pulses are in mark order; find the first mark at or after the center.
    const auto& ps = extracted.pulses;
    auto it = std::lower_bound(ps.begin(), ps.end(), center,
                               [](const Pulse& p, double c) { return static_cast<double>(p.mark) < c; });
    Index best = -1;
    double best_dist = 0.0;
    auto consider = [&](std::ptrdiff_t k) {
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(ps.size())) return;
      const double d = std::abs(static_cast<double>(ps[static_cast<std::size_t>(k)].mark) - center);
      // Candidates arrive earlier mark first, so a strict comparison keeps
      // the earlier one on ties.
      if (best < 0 || d < best_dist) {
        best = static_cast<Index>(k);
        best_dist = d;
      }
    };
    const auto pos = it - ps.begin();
    consider(pos - 1);
    consider(pos);
    if (best < 0 || best_dist > period) {
      ++out.dropped_frames;
      continue;
    }
    Pulse p = ps[static_cast<std::size_t>(best)];
    p.frame_index = t;
    out.pulses.push_back(std::move(p));
    chosen.push_back(t);
  }
  out.conditioning.resize(kCondDim, static_cast<Index>(chosen.size()));
  for (std::size_t k = 0; k < chosen.size(); ++k) out.conditioning.col(static_cast<Index>(k)) = conditioning.col(chosen[k]);
  return out;
}

MatrixXd context_window(const MatrixXd& conditioning, Index t, Index context) {
  if (t < 0 || t >= conditioning.cols()) throw ContractError("context_window: frame out of range");
  MatrixXd w = MatrixXd::Zero(conditioning.rows(), context);
  const Index first = t - context + 1;
  for (Index j = 0; j < context; ++j) {
    const Index src = first + j;
    if (src >= 0) w.col(j) = conditioning.col(src);
  }
  return w;
}

dsp::Waveform overlap_add_pulses(const MatrixXd& pulses, const pitch::PitchMarks& marks, Index length,
                                 int sample_rate) {
  if (pulses.cols() != marks.size()) {
    throw ContractError("overlap_add_pulses: " + std::to_string(pulses.cols()) + " pulses for " +
                        std::to_string(marks.size()) + " marks");
  }
  const Index half = pulses.rows() / 2;
  dsp::Waveform out{VectorXd::Zero(length), sample_rate};
  for (Index k = 0; k < pulses.cols(); ++k) {
    const Index start = marks.instants[static_cast<std::size_t>(k)] - half;
    const Index lo = std::max<Index>(0, -start);
    const Index hi = std::min<Index>(pulses.rows(), length - start);
    if (hi > lo) out.samples.segment(start + lo, hi - lo) += pulses.col(k).segment(lo, hi - lo);
  }
  return out;
}

VectorXd unvoiced_noise(const pitch::PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ kNoiseStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd out = VectorXd::Zero(length);
  if (track.frames() == 0) return out;
  for (Index n = 0; n < length; ++n) {
    const double v = normal(rng);  // drawn for every sample so streams do not shift with voicing
    if (!track.voiced[static_cast<std::size_t>(frames.frame_of_sample(n, track.frames()))]) out(n) = v;
  }
  return out;
}

void normalize_frames(VectorXd& x, const pitch::PitchTrack& track, const dsp::FrameConfig& frames) {
  const Index length = x.size();
  const Index n_frames = track.frames();
  if (n_frames == 0 || length == 0) return;
  Index start = 0;
  while (start < length) {
    const Index t = frames.frame_of_sample(start, n_frames);
    Index end = start + 1;
    while (end < length && frames.frame_of_sample(end, n_frames) == t) ++end;

    Index lo = start, hi = end;
    const Index period = pitch::period_at(track, frames, start);
    if (period > end - start) {
      const Index mid = (start + end) / 2;
      lo = std::max<Index>(0, mid - period / 2);
      hi = std::min<Index>(length, lo + period);
      lo = std::max<Index>(0, hi - period);
    }
    const double rms = std::sqrt(x.segment(lo, hi - lo).squaredNorm() / static_cast<double>(hi - lo));
    if (rms > 0.0) x.segment(start, end - start) /= rms;
    start = end;
  }
}

dsp::Waveform assemble_excitation(const dsp::Waveform& voiced, const pitch::PitchTrack& track,
                                  const dsp::FrameConfig& frames, std::uint64_t seed) {
  dsp::Waveform out = voiced;
  out.samples += unvoiced_noise(track, frames, voiced.size(), seed);
  normalize_frames(out.samples, track, frames);
  return out;
}

dsp::Waveform impulse_excitation(const pitch::PitchTrack& track, const dsp::FrameConfig& frames, Index length,
                                 std::uint64_t seed) {
  const pitch::PitchMarks marks = pitch::place_pitch_marks(track, frames, length);
  dsp::Waveform voiced{VectorXd::Zero(length), track.sample_rate};
  for (Index m : marks.instants) voiced.samples(m) = 1.0;
  return assemble_excitation(voiced, track, frames, seed);
}

MatrixXd pulse_model_forward(nn::PulseModel& model, const std::vector<MatrixXd>& contexts) {
  const Index n = static_cast<Index>(contexts.size());
  const Index len = model.config().pulse_length;
  MatrixXd out(len, n);
  constexpr Index kChunk = 32;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (Index first = 0; first < n; first += kChunk) {
    const Index count = std::min(kChunk, n - first);
    const nn::Tensor y = model.forward(nn::context_batch(contexts, order, first, count), nn::Mode::eval);
    for (Index b = 0; b < count; ++b) out.col(first + b) = y.example(b).transpose();
  }
  return out;
}

MatrixXd gan_generator_forward(nn::Generator& generator, const MatrixXd& smooth, const MatrixXd& noise) {
  if (smooth.rows() != noise.rows() || smooth.cols() != noise.cols()) {
    throw ContractError("gan_generator_forward: smooth pulses and noise differ in shape");
  }
  const Index n = smooth.cols();
  const Index len = smooth.rows();
  MatrixXd out(len, n);
  constexpr Index kChunk = 32;
  for (Index first = 0; first < n; first += kChunk) {
    const Index count = std::min(kChunk, n - first);
    nn::Tensor xs(count, 1, len), z(count, 1, len);
    for (Index b = 0; b < count; ++b) {
      xs.example(b) = smooth.col(first + b).transpose();
      z.example(b) = noise.col(first + b).transpose();
    }
    const nn::Tensor y = generator.forward(z, xs, nn::Mode::eval);
    for (Index b = 0; b < count; ++b) out.col(first + b) = y.example(b).transpose();
  }
  return out;
}

dsp::Waveform neural_excitation(const pitch::PitchTrack& track, const dsp::FrameConfig& frames,
                                const MatrixXd& conditioning, Index length, nn::PulseModel& model,
                                nn::Generator* generator, std::uint64_t seed) {
  if (conditioning.cols() != track.frames()) throw ContractError("neural_excitation: conditioning frame mismatch");
  const pitch::PitchMarks marks = pitch::place_pitch_marks(track, frames, length, nullptr, kMinPulseF0);
  std::vector<MatrixXd> contexts;
  contexts.reserve(marks.instants.size());
  for (Index m : marks.instants) {
    contexts.push_back(context_window(conditioning, frames.frame_of_sample(m, track.frames()),
                                      model.config().context));
  }
  MatrixXd pulses = pulse_model_forward(model, contexts);
  if (generator != nullptr) {
    std::mt19937_64 rng(seed ^ kLatentStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd z(pulses.rows(), pulses.cols());
    for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
    pulses = gan_generator_forward(*generator, pulses, z);
  }
  const dsp::Waveform voiced = overlap_add_pulses(pulses, marks, length, track.sample_rate);
  return assemble_excitation(voiced, track, frames, seed);
}

}  // namespace mfccvoc::excitation
