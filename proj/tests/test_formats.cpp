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

#include <cstdlib>
#include <cstring>

#include "mfccvoc/binary_io.hpp"
#include "mfccvoc/config.hpp"
#include "mfccvoc/formats.hpp"
#include "test_support.hpp"

using namespace mfccvoc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd float_valued(Index r, Index c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> g(0.f, 3.f);
  MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(g(rng));
  return m;
}

bool bit_equal(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST_CASE("MFC1 round trip") {
  cepstral::MfccSequence m;
  m.coefficients = float_valued(37, 20, 1);
  m.config.hop_length = 80;
  m.sample_rate = 16000;
  const std::string bytes = formats::encode_mfcc(m);
  CHECK(bytes.substr(0, 4) == "MFC1");
  CHECK(bytes.size() == 4 + 16 + 37 * 20 * 4);
  auto back = formats::decode_mfcc(bytes);
  CHECK(bit_equal(back.coefficients, m.coefficients));
  CHECK(back.config.hop_length == 80);
  CHECK(back.sample_rate == 16000);
  CHECK(formats::encode_mfcc(back) == bytes);
}

TEST_CASE("F0T1 round trip") {
  VectorXd f0(6);
  f0 << 0, 101.5, 230.25, 0, 0, 77.125;
  auto t = pitch::PitchTrack::from_f0(f0, 80, 16000);
  auto back = formats::decode_f0(formats::encode_f0(t));
  CHECK(back.f0_hz == t.f0_hz);
  CHECK(back.voiced == t.voiced);
  CHECK(back.hop_length == 80);
  CHECK(formats::f0_csv(t).rfind("frame,f0_hz,voiced\n0,0,0\n1,101.5,1\n", 0) == 0);
}

TEST_CASE("ARE1 round trip") {
  envelope::ArEnvelope e;
  e.coefficients = float_valued(9, 30, 2);
  e.gains = float_valued(9, 1, 3).cwiseAbs();
  auto back = formats::decode_envelope(formats::encode_envelope(e));
  CHECK(bit_equal(back.coefficients, e.coefficients));
  CHECK(bit_equal(back.gains, e.gains));
  CHECK(formats::encode_envelope(e).size() == 4 + 8 + 9 * 31 * 4);
  const std::string csv = formats::envelope_csv(e);
  CHECK(csv.rfind("frame,gain,a1,", 0) == 0);
}

TEST_CASE("PLS1 round trip") {
  excitation::PulseDataset d;
  MatrixXd samples = float_valued(400, 5, 4);
  for (Index k = 0; k < 5; ++k) {
    excitation::Pulse p;
    p.samples = samples.col(k);
    d.pulses.push_back(p);
  }
  d.conditioning = float_valued(22, 5, 5);
  const std::string bytes = formats::encode_pulses(d);
  auto back = formats::decode_pulses(bytes);
  REQUIRE(back.size() == 5);
  for (Index k = 0; k < 5; ++k) CHECK(bit_equal(back.pulses[static_cast<std::size_t>(k)].samples, samples.col(k)));
  CHECK(bit_equal(back.conditioning, d.conditioning));
  CHECK(formats::encode_pulses(back) == bytes);

  excitation::PulseDataset empty;
  empty.conditioning.resize(22, 0);
  CHECK(formats::decode_pulses(formats::encode_pulses(empty)).size() == 0);
}

TEST_CASE("MFCC CSV has one line of coefficients per frame") {
  cepstral::MfccSequence m;
  m.coefficients = MatrixXd::Zero(2, 20);
  m.coefficients(1, 19) = 0.5;
  const std::string csv = formats::mfcc_csv(m);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.substr(0, csv.find('\n')) == "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0");
  CHECK(csv.find(",0.5\n") != std::string::npos);
}

TEST_CASE("feature file errors") {
  cepstral::MfccSequence m;
  m.coefficients = MatrixXd::Zero(3, 20);
  const std::string good = formats::encode_mfcc(m);
  CHECK(error_of([&] { formats::decode_mfcc("XXXX" + good.substr(4)); }).find("magic") != std::string::npos);
  CHECK_THROWS_AS(formats::decode_mfcc(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(formats::decode_mfcc(good + "z"), FormatError);
  CHECK_THROWS_AS(formats::decode_f0(good), FormatError);

  testing::ScratchDir dir("fmt");
  io::write_file_atomic(dir.file("bad.mfc"), good.substr(0, 10));
  const std::string msg = error_of([&] { formats::read_mfcc(dir.file("bad.mfc")); });
  CHECK(msg.find(dir.file("bad.mfc")) != std::string::npos);
  CHECK(error_of([&] { formats::read_f0(dir.file("missing.f0")); }).find("missing.f0") != std::string::npos);
}

TEST_CASE("files are written whole") {
  testing::ScratchDir dir("atomic");
  io::write_file_atomic(dir.file("a.bin"), "hello");
  io::write_file_atomic(dir.file("a.bin"), "bye");
  CHECK(io::read_file(dir.file("a.bin")) == "bye");
  // no temp files left behind
  Index n = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++n;
  CHECK(n == 1);
}

TEST_CASE("config defaults") {
  PipelineConfig cfg;
  CHECK(cfg.cepstral.n_mels == 24);
  CHECK(cfg.cepstral.n_coef == 20);
  CHECK(cfg.ar_order == 30);
  CHECK(cfg.sample_rate == 16000);
  CHECK(cfg.excitation == ExcitationMode::impulse);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text parsing") {
  PipelineConfig cfg;
  cfg.apply_text("# comment\n\ncepstral.n_mels = 26   # trailing\nexcitation.mode=gan\ngan.epochs = 3\n");
  CHECK(cfg.cepstral.n_mels == 26);
  CHECK(cfg.excitation == ExcitationMode::gan);
  CHECK(cfg.gan_train.epochs == 3);
  const std::string unknown = error_of([] { PipelineConfig c; c.apply_text("gan.epochs = 1\nno.such.key = 2\n"); });
  CHECK(unknown.find("2") != std::string::npos);
  CHECK(unknown.find("no.such.key") != std::string::npos);
  CHECK_THROWS_AS(cfg.set("envelope.order", "thirty"), ParameterError);
  CHECK_THROWS_AS(cfg.set("excitation.mode", "sine"), ParameterError);
}

TEST_CASE("config dump reloads to the same hash") {
  PipelineConfig a;
  a.set("pitch.f_min", "60.5");
  a.set("signal.preemphasis", "0.9123456789012345");
  a.set("gan.discriminator_channels", "8,16,1");
  a.set("gan.discriminator_widths", "5,5,3");
  a.set("gan.discriminator_strides", "3,2,2");
  a.set("pipeline.seed", "123456789012");
  PipelineConfig b;
  b.apply_text(a.dump());
  CHECK(a.hash() == b.hash());
  CHECK(a.dump() == b.dump());
  CHECK(b.frames.preemphasis == a.frames.preemphasis);
  PipelineConfig c;
  CHECK(c.hash() != a.hash());
  testing::ScratchDir dir("cfg");
  io::write_file_atomic(dir.file("x.cfg"), a.dump());
  PipelineConfig d;
  d.load_file(dir.file("x.cfg"));
  CHECK(d.hash() == a.hash());
}

TEST_CASE("config validation") {
  PipelineConfig cfg;
  cfg.set("cepstral.f_max", "9000");
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  PipelineConfig g;
  g.set("pitch.f_min", "600");
  CHECK_THROWS_AS(g.validate(), ParameterError);
}

TEST_CASE("seeds") {
  PipelineConfig cfg;
  cfg.seed = 77;
  unsetenv("VOCODER_SEED");
  CHECK(effective_seed(cfg) == 77);
  setenv("VOCODER_SEED", "5", 1);
  CHECK(effective_seed(cfg) == 5);
  unsetenv("VOCODER_SEED");
  CHECK(utterance_seed(1, "a") == utterance_seed(1, "a"));
  CHECK(utterance_seed(1, "a") != utterance_seed(1, "b"));
  CHECK(utterance_seed(1, "a") != utterance_seed(2, "a"));
  CHECK(utterance_name("/x/y/vowel_a.wav") == "vowel_a");
}
