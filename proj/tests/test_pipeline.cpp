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

#include <cstring>
#include <sstream>

#include "mfccvoc/formats.hpp"
#include "mfccvoc/pipeline.hpp"
#include "test_support.hpp"

using namespace mfccvoc;
using Eigen::VectorXd;

namespace {

double db(double ratio) { return 20.0 * std::log10(ratio); }

bool same_samples(const dsp::Waveform& a, const dsp::Waveform& b) {
  return a.size() == b.size() &&
         std::memcmp(a.samples.data(), b.samples.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

dsp::Waveform copy_synth(const dsp::Waveform& x, const PipelineConfig& cfg, std::uint64_t seed = 1) {
  const Analysis a = analyze_waveform(x, cfg);
  ExcitationModels none;
  return synthesize(a.mfcc, a.track, cfg, none, seed);
}

}  // namespace

TEST_CASE("one second gives 196 frames") {
  PipelineConfig cfg;
  const auto x = testing::synthetic_vowel(120.0, 1.0);
  REQUIRE(x.size() == 16000);
  const Analysis a = analyze_waveform(x, cfg);
  CHECK(a.mfcc.frames() == 196);
  CHECK(a.track.frames() == 196);
  CHECK(a.mfcc.n_coef() == 20);
  CHECK(a.track.consistent());
}

TEST_CASE("silence is unvoiced") {
  PipelineConfig cfg;
  dsp::Waveform x;
  x.samples = VectorXd::Zero(8000);
  const Analysis a = analyze_waveform(x, cfg);
  CHECK(a.track.voiced_fraction() == 0.0);
  CHECK(a.mfcc.coefficients.allFinite());
}

TEST_CASE("analysis and synthesis agree on frame counts") {
  PipelineConfig cfg;
  for (double seconds : {0.3, 0.5123, 1.0}) {
    const auto x = testing::synthetic_vowel(140.0, seconds);
    const Analysis a = analyze_waveform(x, cfg);
    const auto y = copy_synth(x, cfg);
    CHECK(y.size() == synthesis_length(a.mfcc.frames(), cfg.frames));
    CHECK(analyze_waveform(y, cfg).mfcc.frames() == a.mfcc.frames());
  }
}

TEST_CASE("copy synthesis keeps F0 and level") {
  PipelineConfig cfg;
  for (double f0 : {95.0, 150.0, 220.0}) {
    const auto x = testing::synthetic_vowel(f0, 1.0);
    const auto y = copy_synth(x, cfg);
    REQUIRE(y.all_finite());
    const auto t = pitch::track_pitch(y, cfg.frames, cfg.tracker);
    Index voiced = 0, close = 0;
    for (Index i = 0; i < t.frames(); ++i) {
      if (!t.voiced[static_cast<std::size_t>(i)]) continue;
      ++voiced;
      if (std::abs(t.f0_hz(i) - f0) <= 3.0) ++close;
    }
    INFO("f0 " << f0 << " voiced " << voiced << " close " << close);
    CHECK(voiced > t.frames() / 2);
    CHECK(close >= 0.95 * voiced);
    CHECK(std::abs(db(testing::rms(y.samples) / testing::rms(x.samples))) < 12.0);
  }
}

TEST_CASE("all-unvoiced F0 gives filtered noise at a sensible level") {
  PipelineConfig cfg;
  const auto x = testing::synthetic_vowel(130.0, 1.0);
  const Analysis a = analyze_waveform(x, cfg);
  const auto unvoiced = pitch::PitchTrack::from_f0(VectorXd::Zero(a.track.frames()), cfg.frames.hop_length, 16000);
  ExcitationModels none;
  const auto y = synthesize(a.mfcc, unvoiced, cfg, none, 5);
  REQUIRE(y.all_finite());
  CHECK(std::abs(db(testing::rms(y.samples) / testing::rms(x.samples))) < 12.0);
}

TEST_CASE("noise stays unvoiced through copy synthesis") {
  PipelineConfig cfg;
  const auto x = testing::white_noise(16000, 0.1, 9);
  const auto y = copy_synth(x, cfg);
  const auto t = pitch::track_pitch(y, cfg.frames, cfg.tracker);
  CHECK(t.voiced_fraction() <= 0.1);
}

TEST_CASE("synthesis is a function of the seed") {
  PipelineConfig cfg;
  auto x = testing::synthetic_vowel(110.0, 0.5);
  const auto tail = testing::white_noise(4000, 0.05, 2);
  x.samples.conservativeResize(x.size() + tail.size());
  x.samples.tail(tail.size()) = tail.samples;
  CHECK(same_samples(copy_synth(x, cfg, 3), copy_synth(x, cfg, 3)));
  // the unvoiced tail carries seeded noise
  CHECK_FALSE(same_samples(copy_synth(x, cfg, 3), copy_synth(x, cfg, 4)));
}

TEST_CASE("synthesis rejects inconsistent inputs") {
  PipelineConfig cfg;
  const auto x = testing::synthetic_vowel(110.0, 0.5);
  Analysis a = analyze_waveform(x, cfg);
  ExcitationModels none;
  auto short_track = pitch::PitchTrack::from_f0(a.track.f0_hz.head(a.track.frames() - 1), 80, 16000);
  CHECK_THROWS_AS(synthesize(a.mfcc, short_track, cfg, none, 1), ContractError);
  auto other_hop = a.track;
  other_hop.hop_length = 160;
  CHECK_THROWS_AS(synthesize(a.mfcc, other_hop, cfg, none, 1), ContractError);
  PipelineConfig dnn = cfg;
  dnn.excitation = ExcitationMode::dnn;
  CHECK_THROWS_AS(load_excitation_models(dnn), ParameterError);
  dnn.pulse_model_path = "/nonexistent/pulse.nnw";
  CHECK_THROWS_AS(load_excitation_models(dnn), Error);
}

TEST_CASE("pulse extraction bookkeeping") {
  PipelineConfig cfg;
  const auto x = testing::synthetic_vowel(125.0, 1.0);
  const PulseExtraction p = pulses_from_waveform(x, cfg);
  CHECK(p.marks > 100);
  CHECK(p.extracted.size() == p.marks - p.extracted.skipped_pulses);
  CHECK(p.extracted.skipped_pulses == 0);
  CHECK(p.conditioning.rows() == 22);
  CHECK(p.associated.conditioning.rows() == 22);
  CHECK(p.associated.conditioning.cols() == p.associated.size());
  // constant F0: one period everywhere
  for (const auto& pulse : p.extracted.pulses) CHECK(pulse.period_samples == 128);
}

TEST_CASE("the residual of a vowel is flatter than the vowel") {
  PipelineConfig cfg;
  const auto x = testing::synthetic_vowel(125.0, 1.0);
  const Analysis a = analyze_waveform(x, cfg);
  const auto e = mfcc_residual(x, a.mfcc, cfg);
  REQUIRE(e.size() == x.size());
  // spectral flatness of the middle frame before and after inverse filtering
  auto flatness = [&](const dsp::Waveform& w) {
    const auto s = dsp::stft_magnitude(w, cfg.frames);
    const VectorXd m = s.magnitudes.row(s.frames() / 2).transpose().segment(2, 250).array().square() + 1e-20;
    return std::exp(m.array().log().mean()) / m.mean();
  };
  const auto pre = dsp::preemphasize(x, cfg.frames.preemphasis);
  CHECK(flatness(e) > 2.0 * flatness(pre));
}

TEST_CASE("low-passing pulses removes the upper band") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(400, 2);
  for (Index i = 0; i < 400; ++i) {
    p(i, 0) = std::sin(2 * M_PI * 1000.0 * i / 16000.0) + std::sin(2 * M_PI * 6000.0 * i / 16000.0);
    p(i, 1) = std::sin(2 * M_PI * 1000.0 * i / 16000.0);
  }
  const Eigen::MatrixXd lp = lowpass_pulses(p, 16000);
  CHECK((lp.col(0) - p.col(1)).norm() < 1e-9 * p.col(1).norm() + 1e-9);
  CHECK((lp.col(1) - p.col(1)).norm() < 1e-9 * p.col(1).norm() + 1e-9);
}

TEST_CASE("neural excitation modes run with saved weights") {
  testing::ScratchDir dir("pipe");
  nn::PulseModelConfig pc;
  pc.gru_units = 8;
  pc.conv_channels = 4;
  pc.conv_layers = 1;
  pc.width = 5;
  nn::PulseModel pm(pc);
  pm.stack().initialize(1);
  pm.save(dir.file("pulse.nnw"));
  nn::GanPair pair(nn::GeneratorConfig{4, 5, 1, 400, true, false}, nn::DiscriminatorConfig{{4, 4, 1}, {5, 5, 3}, {3, 3, 2}, 1, 400});
  pair.initialize(2);
  pair.save(dir.file("gan.nnw"));

  const auto x = testing::synthetic_vowel(150.0, 0.4);
  for (auto mode : {ExcitationMode::dnn, ExcitationMode::gan}) {
    PipelineConfig cfg;
    cfg.excitation = mode;
    cfg.pulse_model_path = dir.file("pulse.nnw");
    cfg.gan_weights_path = dir.file("gan.nnw");
    const Analysis a = analyze_waveform(x, cfg);
    auto models = load_excitation_models(cfg);
    const auto y1 = synthesize(a.mfcc, a.track, cfg, models, 7);
    const auto y2 = synthesize(a.mfcc, a.track, cfg, models, 7);
    CHECK(y1.all_finite());
    CHECK(y1.size() == x.size());
    CHECK(same_samples(y1, y2));
  }

  nn::PulseModelConfig wrong = pc;
  wrong.cond_dim = 5;
  nn::PulseModel(wrong).save(dir.file("wrong.nnw"));
  PipelineConfig cfg;
  cfg.excitation = ExcitationMode::dnn;
  cfg.pulse_model_path = dir.file("wrong.nnw");
  CHECK_THROWS_AS(load_excitation_models(cfg), LoadError);
}

TEST_CASE("F0 prediction yields one class per frame") {
  nn::F0NetConfig fc;
  fc.dense_units = 8;
  fc.blstm_units = 4;
  fc.lstm_units = 4;
  nn::F0Net net(fc);
  net.stack().initialize(3);
  PipelineConfig cfg;
  const Analysis a = analyze_waveform(testing::synthetic_vowel(150.0, 0.3), cfg);
  const auto t = predict_f0(a.mfcc, net, cfg.quantizer);
  CHECK(t.frames() == a.mfcc.frames());
  CHECK(t.consistent());
  for (Index i = 0; i < t.frames(); ++i)
    if (t.voiced[static_cast<std::size_t>(i)]) CHECK((t.f0_hz(i) >= 50.0 && t.f0_hz(i) <= 500.0));
}

TEST_CASE("file-level commands") {
  testing::ScratchDir dir("cmd");
  PipelineConfig cfg;
  dsp::write_wav(dir.file("in.wav"), testing::synthetic_vowel(140.0, 1.0));
  std::ostringstream log;
  cmd_analyze(dir.file("in.wav"), dir.file("a.mfc"), dir.file("a.f0"), cfg, log, dir.file("a.csv"));
  CHECK(log.str().find("frames: 196") != std::string::npos);
  CHECK(formats::read_mfcc(dir.file("a.mfc")).frames() == 196);
  CHECK(formats::read_f0(dir.file("a.f0")).frames() == 196);

  SynthOptions so;
  so.mfcc_in = dir.file("a.mfc");
  so.f0_in = dir.file("a.f0");
  so.wav_out = dir.file("out.wav");
  cmd_synth(so, cfg, log);
  CHECK(dsp::read_wav(dir.file("out.wav")).size() == 16000);

  std::ostringstream m;
  cmd_f0_metrics(dir.file("a.f0"), dir.file("a.f0"), m);
  CHECK(m.str().find("\n0.0, 0.0, 1.0\n") != std::string::npos);

  cmd_invert_envelope(dir.file("a.mfc"), dir.file("a.are"), cfg, log);
  CHECK(formats::read_envelope(dir.file("a.are")).order() == 30);

  cmd_f0_quantize(dir.file("a.f0"), dir.file("q.f0"), cfg, log);
  const auto q = formats::read_f0(dir.file("q.f0"));
  const auto f = formats::read_f0(dir.file("a.f0"));
  CHECK(q.voiced == f.voiced);
  CHECK((q.f0_hz - f.f0_hz).cwiseAbs().maxCoeff() <= (500.0 - 50.0) / 508.0 + 1e-4);

  CHECK_THROWS_WITH_AS(cmd_analyze(dir.file("nope.wav"), dir.file("b.mfc"), dir.file("b.f0"), cfg, log),
                       doctest::Contains("nope.wav"), Error);
}

TEST_CASE("wrong sample rate is rejected") {
  testing::ScratchDir dir("sr");
  auto x = testing::synthetic_vowel(140.0, 0.3);
  x.sample_rate = 22050;
  dsp::write_wav(dir.file("x.wav"), x);
  PipelineConfig cfg;
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_analyze(dir.file("x.wav"), dir.file("a.mfc"), dir.file("a.f0"), cfg, log), ParameterError);
}
