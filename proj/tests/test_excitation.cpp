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

#include "mfccvoc/excitation.hpp"
#include "test_support.hpp"

using namespace mfccvoc;
using namespace mfccvoc::excitation;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const dsp::FrameConfig kFrames{};

pitch::PitchTrack constant_track(double f0, Index frames) {
  return pitch::PitchTrack::from_f0(VectorXd::Constant(frames, f0), 80, 16000);
}

pitch::PitchMarks regular_marks(Index first, Index step, Index last) {
  pitch::PitchMarks m;
  for (Index i = first; i <= last; i += step) m.instants.push_back(i);
  return m;
}

MatrixXd pulse_matrix(const PulseDataset& d) {
  MatrixXd p(kPulseLength, d.size());
  for (Index k = 0; k < d.size(); ++k) p.col(k) = d.pulses[static_cast<std::size_t>(k)].samples;
  return p;
}

}  // namespace

TEST_CASE("a 100 Hz pulse spans 320 samples with 40 zeros each side") {
  const Index n = 4000;
  auto track = constant_track(100.0, kFrames.frame_count(n));
  auto r = testing::white_noise(n, 1.0, 4);
  pitch::PitchMarks m;
  m.instants = {2000};
  auto d = extract_pulses(r, m, track, kFrames);
  REQUIRE(d.size() == 1);
  const auto& p = d.pulses[0];
  CHECK(p.period_samples == 160);
  CHECK(p.mark == 2000);
  CHECK(p.samples.head(40).isZero(0.0));
  CHECK(p.samples.tail(40).isZero(0.0));
  CHECK(p.samples(40) == 0.0);  // Hann starts at zero
  CHECK(p.samples(41) != 0.0);
  CHECK(p.samples(kPulseCenter) == r.samples(2000));  // window peak is exactly 1 at the mark
}

TEST_CASE("impulse residual gives pulses peaked at the center") {
  const Index n = 4000;
  auto track = constant_track(125.0, kFrames.frame_count(n));
  auto marks = regular_marks(600, 128, 3200);
  dsp::Waveform r{VectorXd::Zero(n), 16000};
  for (Index m : marks.instants) r.samples(m) = 1.0;
  auto d = extract_pulses(r, marks, track, kFrames);
  REQUIRE(d.size() == marks.size());
  for (const auto& p : d.pulses) {
    Index peak = 0;
    p.samples.maxCoeff(&peak);
    CHECK(peak == kPulseCenter);
    CHECK(p.samples(kPulseCenter) == 1.0);
    CHECK((p.samples.array() != 0.0).count() == 1);
  }
}

TEST_CASE("pulses longer than the buffer are skipped and counted") {
  const Index n = 6000;
  auto track = constant_track(60.0, kFrames.frame_count(n));
  auto marks = regular_marks(1000, 267, 5000);
  auto d = extract_pulses(testing::white_noise(n, 1.0, 2), marks, track, kFrames);
  CHECK(d.size() == 0);
  CHECK(d.skipped_pulses == marks.size());
}

TEST_CASE("extract then overlap-add reproduces a constant-F0 residual") {
  const Index n = 8000;
  const Index period = 160;
  auto track = constant_track(100.0, kFrames.frame_count(n));
  auto r = testing::white_noise(n, 1.0, 12);
  auto marks = regular_marks(400, period, 7600);
  auto d = extract_pulses(r, marks, track, kFrames);
  REQUIRE(d.size() == marks.size());
  auto y = overlap_add_pulses(pulse_matrix(d), marks, n, 16000);
  const Index lo = marks.instants.front();
  const Index len = marks.instants.back() - lo;
  VectorXd err = y.samples.segment(lo, len) - r.samples.segment(lo, len);
  CHECK(testing::rms(err) / testing::rms(r.samples.segment(lo, len)) < 1e-3);
  CHECK(err.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Hann windows at one-period spacing sum to a constant") {
  const Index n = 6000;
  for (double f0 : {100.0, 123.0, 200.0, 250.0}) {
    auto track = constant_track(f0, kFrames.frame_count(n));
    const Index period = pitch::period_at(track, kFrames, 3000);
    auto marks = regular_marks(500, period, 5500);
    dsp::Waveform ones{VectorXd::Ones(n), 16000};
    auto d = extract_pulses(ones, marks, track, kFrames);
    auto y = overlap_add_pulses(pulse_matrix(d), marks, n, 16000);
    const Index lo = marks.instants.front();
    const Index len = marks.instants.back() - lo;
    CHECK((y.samples.segment(lo, len).array() - 1.0).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("single pulse lands on [mark-200, mark+200)") {
  MatrixXd p = MatrixXd::Zero(kPulseLength, 1);
  p.col(0) = VectorXd::LinSpaced(kPulseLength, 1.0, 400.0);
  pitch::PitchMarks m;
  m.instants = {1000};
  auto y = overlap_add_pulses(p, m, 3000, 16000);
  CHECK(y.samples.segment(800, 400) == p.col(0));
  CHECK(y.samples.head(800).isZero(0.0));
  CHECK(y.samples.tail(1800).isZero(0.0));
}

TEST_CASE("pulses near the edges are truncated") {
  MatrixXd p = MatrixXd::Ones(kPulseLength, 2);
  pitch::PitchMarks m;
  m.instants = {50, 950};
  auto y = overlap_add_pulses(p, m, 1000, 16000);
  CHECK(y.samples.sum() == doctest::Approx(250.0 + 250.0));
  CHECK_THROWS_AS(overlap_add_pulses(p, regular_marks(10, 10, 10), 1000, 16000), ContractError);
}

TEST_CASE("zero pulses leave voiced regions silent and fill unvoiced with noise") {
  const Index frames = 60;
  const Index n = (frames - 1) * 80 + 400;
  VectorXd f0 = VectorXd::Zero(frames);
  f0.segment(20, 20).setConstant(150.0);
  auto track = pitch::PitchTrack::from_f0(f0, 80, 16000);
  auto marks = pitch::place_pitch_marks(track, kFrames, n);
  auto voiced = overlap_add_pulses(MatrixXd::Zero(kPulseLength, marks.size()), marks, n, 16000);
  auto e = assemble_excitation(voiced, track, kFrames, 5);
  for (Index i = 0; i < n; ++i) {
    const bool v = track.voiced[static_cast<std::size_t>(kFrames.frame_of_sample(i, frames))];
    if (v) CHECK(e.samples(i) == 0.0);
  }
  CHECK(e.samples.head(800).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("all-unvoiced excitation is unit-RMS noise per frame") {
  const Index frames = 100;
  const Index n = (frames - 1) * 80 + 400;
  auto track = constant_track(0.0, frames);
  auto e = impulse_excitation(track, kFrames, n, 99);
  Index start = 0;
  while (start < n) {
    const Index t = kFrames.frame_of_sample(start, frames);
    Index end = start;
    while (end < n && kFrames.frame_of_sample(end, frames) == t) ++end;
    CHECK(std::abs(testing::rms(e.samples.segment(start, end - start)) - 1.0) < 1e-6);
    start = end;
  }
}

TEST_CASE("impulse excitation spacing") {
  const Index frames = 196;
  const Index n = 16000;
  for (auto [f0, period] : {std::pair{100.0, Index{160}}, std::pair{200.0, Index{80}}}) {
    auto e = impulse_excitation(constant_track(f0, frames), kFrames, n, 1);
    std::vector<Index> where;
    for (Index i = 0; i < n; ++i)
      if (e.samples(i) != 0.0) where.push_back(i);
    REQUIRE(where.size() > 10);
    for (std::size_t k = 1; k < where.size(); ++k) CHECK(where[k] - where[k - 1] == period);
    CHECK(e.all_finite());
  }
}

TEST_CASE("excitation is a pure function of the seed") {
  VectorXd f0 = VectorXd::Zero(80);
  f0.segment(10, 40).setConstant(130.0);
  auto track = pitch::PitchTrack::from_f0(f0, 80, 16000);
  const Index n = 79 * 80 + 400;
  auto a = impulse_excitation(track, kFrames, n, 42);
  auto b = impulse_excitation(track, kFrames, n, 42);
  auto c = impulse_excitation(track, kFrames, n, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
}

TEST_CASE("frame conditioning carries log F0 and voicing") {
  cepstral::MfccSequence m;
  m.coefficients = MatrixXd::Random(3, 20);
  auto track = pitch::PitchTrack::from_f0(Eigen::Vector3d(0.0, 100.0, 200.0), 80, 16000);
  MatrixXd c = frame_conditioning(m, track);
  REQUIRE(c.rows() == kCondDim);
  REQUIRE(c.cols() == 3);
  CHECK(c.topRows(20) == m.coefficients.transpose());
  CHECK(c(20, 0) == 0.0);
  CHECK(c(21, 0) == 0.0);
  CHECK(c(20, 1) == std::log(100.0));
  CHECK(c(21, 2) == 1.0);
  m.coefficients = MatrixXd::Zero(4, 20);
  CHECK_THROWS_AS(frame_conditioning(m, track), ContractError);
}

TEST_CASE("context windows end at the current frame and pad with zeros") {
  MatrixXd cond = MatrixXd::Zero(kCondDim, 50);
  for (Index t = 0; t < 50; ++t) cond.col(t).setConstant(static_cast<double>(t + 1));
  MatrixXd w = context_window(cond, 5);
  REQUIRE(w.cols() == kContext);
  CHECK(w.leftCols(34).isZero(0.0));
  CHECK(w.col(39) == cond.col(5));
  CHECK(w.col(34) == cond.col(0));
  MatrixXd full = context_window(cond, 45);
  CHECK(full.col(0) == cond.col(6));
  CHECK_THROWS_AS(context_window(cond, 50), ContractError);
}

TEST_CASE("frames pair with marks at their centers") {
  const Index frames = 20;
  const Index n = (frames - 1) * 80 + 400;
  auto track = constant_track(200.0, frames);
  pitch::PitchMarks marks;
  for (Index t = 0; t < frames; ++t) marks.instants.push_back(static_cast<Index>(kFrames.frame_center(t)));
  auto d = extract_pulses(testing::white_noise(n, 1.0, 1), marks, track, kFrames);
  MatrixXd cond = MatrixXd::Random(kCondDim, frames);
  auto a = associate_frames(d, track, kFrames, cond);
  REQUIRE(a.size() == frames);
  for (Index t = 0; t < frames; ++t) {
    CHECK(a.pulses[static_cast<std::size_t>(t)].frame_index == t);
    CHECK(a.pulses[static_cast<std::size_t>(t)].mark == marks.instants[static_cast<std::size_t>(t)]);
    CHECK(a.conditioning.col(t) == cond.col(t));
  }
  CHECK(a.dropped_frames == 0);
}

TEST_CASE("equidistant marks resolve to the earlier one") {
  const Index frames = 3;
  auto track = constant_track(160.0, frames);  // period 100
  pitch::PitchMarks marks;
  marks.instants = {150, 250};  // frame 0 center is 200
  dsp::Waveform r{VectorXd::Zero(800), 16000};
  r.samples(150) = 1.0;
  r.samples(250) = 2.0;
  auto d = extract_pulses(r, marks, track, kFrames);
  auto a = associate_frames(d, track, kFrames, MatrixXd::Zero(kCondDim, frames));
  REQUIRE(a.size() >= 1);
  CHECK(a.pulses[0].frame_index == 0);
  CHECK(a.pulses[0].mark == 150);
}

TEST_CASE("voiced frames without a nearby mark are dropped") {
  const Index frames = 30;
  auto track = constant_track(200.0, frames);
  pitch::PitchMarks marks;
  marks.instants = {200};
  dsp::Waveform r{VectorXd::Ones(3000), 16000};
  auto d = extract_pulses(r, marks, track, kFrames);
  auto a = associate_frames(d, track, kFrames, MatrixXd::Zero(kCondDim, frames));
  CHECK(a.size() == 2);  // frames 0 and 1; frame 1 sits exactly one period (80) away
  CHECK(a.size() + a.dropped_frames == frames);
  CHECK(a.conditioning.cols() == a.size());
}

TEST_CASE("zero pulse model emits zero pulses") {
  nn::PulseModel model;
  for (auto* p : model.stack().all_parameters()) {
    if (p->name == "running_var" || p->name == "gamma") continue;
    p->value.setZero();
  }
  std::vector<MatrixXd> ctx(3, MatrixXd::Random(kCondDim, kContext));
  MatrixXd out = pulse_model_forward(model, ctx);
  CHECK(out.rows() == kPulseLength);
  CHECK(out.cols() == 3);
  CHECK(out.isZero(0.0));
}

TEST_CASE("fixed random pulse model is reproducible") {
  nn::PulseModel a, b;
  a.stack().initialize(31);
  b.stack().initialize(31);
  std::vector<MatrixXd> ctx;
  for (int i = 0; i < 5; ++i) ctx.push_back(MatrixXd::Random(kCondDim, kContext));
  CHECK(pulse_model_forward(a, ctx) == pulse_model_forward(b, ctx));
}

TEST_CASE("neural excitation runs end to end") {
  const Index frames = 60;
  const Index n = (frames - 1) * 80 + 400;
  VectorXd f0 = VectorXd::Zero(frames);
  f0.segment(10, 40).setConstant(140.0);
  auto track = pitch::PitchTrack::from_f0(f0, 80, 16000);
  MatrixXd cond = MatrixXd::Zero(kCondDim, frames);
  nn::PulseModel model;
  model.stack().initialize(3);
  nn::Generator gen;
  gen.stack().initialize(4);
  auto a = neural_excitation(track, kFrames, cond, n, model, &gen, 8);
  auto b = neural_excitation(track, kFrames, cond, n, model, &gen, 8);
  auto c = neural_excitation(track, kFrames, cond, n, model, nullptr, 8);
  CHECK(a.size() == n);
  CHECK(a.all_finite());
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
}

TEST_CASE("window halves follow uneven mark spacing") {
  const Index n = 6000;
  auto track = constant_track(123.0, kFrames.frame_count(n));
  pitch::PitchMarks marks;
  for (Index m = 500, k = 0; m < 5500; m += (k++ % 2 ? 131 : 130)) marks.instants.push_back(m);
  dsp::Waveform ones{VectorXd::Ones(n), 16000};
  auto d = extract_pulses(ones, marks, track, kFrames);
  auto y = overlap_add_pulses(pulse_matrix(d), marks, n, 16000);
  const Index lo = marks.instants.front();
  const Index len = marks.instants.back() - lo;
  CHECK((y.samples.segment(lo, len).array() - 1.0).abs().maxCoeff() < 1e-12);
  // a 130 sample rise and a 131 sample fall around the second mark
  const VectorXd& p = d.pulses[1].samples;
  CHECK(p(kPulseCenter - 130) == 0.0);
  CHECK(p(kPulseCenter - 129) > 0.0);
  CHECK(p(kPulseCenter + 130) > 0.0);
  CHECK(p(kPulseCenter + 131) == 0.0);
}

TEST_CASE("marks in separate voiced runs keep the local period") {
  const Index n = 4000;
  auto track = constant_track(100.0, kFrames.frame_count(n));
  pitch::PitchMarks marks;
  marks.instants = {1000, 2000};
  dsp::Waveform ones{VectorXd::Ones(n), 16000};
  auto d = extract_pulses(ones, marks, track, kFrames);
  REQUIRE(d.size() == 2);
  for (const auto& p : d.pulses) {
    CHECK(p.samples(kPulseCenter - 160) == 0.0);
    CHECK(p.samples(kPulseCenter - 159) > 0.0);
    CHECK(p.samples(kPulseCenter + 159) > 0.0);
    CHECK(p.samples(kPulseCenter + 160) == 0.0);
  }
}
