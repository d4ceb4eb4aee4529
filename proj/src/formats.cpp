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

#include "mfccvoc/formats.hpp"

#include <cmath>
#include <cstdio>

#include "mfccvoc/binary_io.hpp"

namespace mfccvoc::formats {

using Eigen::Index;

namespace {

void expect_magic(io::ByteReader& r, std::string_view magic) {
  if (r.remaining() < magic.size() || r.get_bytes(magic.size(), "magic") != magic) {
    throw FormatError("bad magic, expected " + std::string(magic));
  }
}

void expect_end(const io::ByteReader& r, std::string_view magic) {
  if (!r.at_end()) throw FormatError(std::string(magic) + ": " + std::to_string(r.remaining()) + " trailing bytes");
}

std::uint32_t u32(Index v, const char* what) {
  if (v < 0 || v > static_cast<Index>(UINT32_MAX)) throw ContractError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

// Re-raises decode errors with the file name in front.
template <typename F>
auto with_path(const std::string& path, F&& decode) {
  const std::string bytes = io::read_file(path);
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void require_payload(const io::ByteReader& r, std::uint64_t floats, const char* what) {
  if (floats * 4 > r.remaining()) {
    throw FormatError(std::string("truncated input while reading ") + what + " (need " + std::to_string(floats * 4) +
                      " bytes, have " + std::to_string(r.remaining()) + ")");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string encode_mfcc(const cepstral::MfccSequence& m) {
  io::ByteWriter w;
  w.put_bytes("MFC1");
  w.put_u32(u32(m.frames(), "frame count"));
  w.put_u32(u32(m.n_coef(), "coefficient count"));
  w.put_u32(u32(m.sample_rate, "sample rate"));
  w.put_u32(u32(m.config.hop_length, "hop"));
  for (Index t = 0; t < m.frames(); ++t)
    for (Index k = 0; k < m.n_coef(); ++k) w.put_f32(static_cast<float>(m.coefficients(t, k)));
  return w.take();
}

cepstral::MfccSequence decode_mfcc(std::string_view bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "MFC1");
  const std::uint32_t frames = r.get_u32("MFC1 frame count");
  const std::uint32_t n_coef = r.get_u32("MFC1 coefficient count");
  cepstral::MfccSequence m;
  m.sample_rate = static_cast<int>(r.get_u32("MFC1 sample rate"));
  m.config.hop_length = r.get_u32("MFC1 hop");
  if (m.config.hop_length == 0 || m.sample_rate <= 0) throw FormatError("MFC1: zero hop or sample rate");
  require_payload(r, std::uint64_t{frames} * n_coef, "MFC1 coefficients");
  m.coefficients.resize(frames, n_coef);
  for (Index t = 0; t < frames; ++t)
    for (Index k = 0; k < n_coef; ++k) m.coefficients(t, k) = r.get_f32("MFC1 coefficients");
  expect_end(r, "MFC1");
  return m;
}

void write_mfcc(const std::string& path, const cepstral::MfccSequence& m) {
  io::write_file_atomic(path, encode_mfcc(m));
}

cepstral::MfccSequence read_mfcc(const std::string& path) {
  return with_path(path, [](std::string_view b) { return decode_mfcc(b); });
}

// ---------------------------------------------------------------------------

std::string encode_f0(const pitch::PitchTrack& t) {
  io::ByteWriter w;
  w.put_bytes("F0T1");
  w.put_u32(u32(t.frames(), "frame count"));
  w.put_u32(u32(t.hop_length, "hop"));
  w.put_u32(u32(t.sample_rate, "sample rate"));
  for (Index i = 0; i < t.frames(); ++i) {
    w.put_f32(t.voiced[static_cast<std::size_t>(i)] ? static_cast<float>(t.f0_hz(i)) : 0.0f);
  }
  return w.take();
}

pitch::PitchTrack decode_f0(std::string_view bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "F0T1");
  const std::uint32_t frames = r.get_u32("F0T1 frame count");
  const std::uint32_t hop = r.get_u32("F0T1 hop");
  const std::uint32_t sr = r.get_u32("F0T1 sample rate");
  if (hop == 0 || sr == 0) throw FormatError("F0T1: zero hop or sample rate");
  require_payload(r, frames, "F0T1 values");
  Eigen::VectorXd f0(frames);
  for (Index i = 0; i < frames; ++i) {
    f0(i) = r.get_f32("F0T1 values");
    if (!std::isfinite(f0(i)) || f0(i) < 0.0) throw FormatError("F0T1: invalid f0 at frame " + std::to_string(i));
  }
  expect_end(r, "F0T1");
  return pitch::PitchTrack::from_f0(f0, hop, static_cast<int>(sr));
}

void write_f0(const std::string& path, const pitch::PitchTrack& t) { io::write_file_atomic(path, encode_f0(t)); }

pitch::PitchTrack read_f0(const std::string& path) {
  return with_path(path, [](std::string_view b) { return decode_f0(b); });
}

// ---------------------------------------------------------------------------

std::string encode_envelope(const envelope::ArEnvelope& e) {
  io::ByteWriter w;
  w.put_bytes("ARE1");
  w.put_u32(u32(e.frames(), "frame count"));
  w.put_u32(u32(e.order(), "order"));
  for (Index t = 0; t < e.frames(); ++t) {
    w.put_f32(static_cast<float>(e.gains(t)));
    for (Index k = 0; k < e.order(); ++k) w.put_f32(static_cast<float>(e.coefficients(t, k)));
  }
  return w.take();
}

envelope::ArEnvelope decode_envelope(std::string_view bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "ARE1");
  const std::uint32_t frames = r.get_u32("ARE1 frame count");
  const std::uint32_t order = r.get_u32("ARE1 order");
  require_payload(r, std::uint64_t{frames} * (order + 1), "ARE1 frames");
  envelope::ArEnvelope e;
  e.coefficients.resize(frames, order);
  e.gains.resize(frames);
  for (Index t = 0; t < frames; ++t) {
    e.gains(t) = r.get_f32("ARE1 gain");
    for (Index k = 0; k < order; ++k) e.coefficients(t, k) = r.get_f32("ARE1 coefficients");
  }
  expect_end(r, "ARE1");
  return e;
}

void write_envelope(const std::string& path, const envelope::ArEnvelope& e) {
  io::write_file_atomic(path, encode_envelope(e));
}

envelope::ArEnvelope read_envelope(const std::string& path) {
  return with_path(path, [](std::string_view b) { return decode_envelope(b); });
}

// ---------------------------------------------------------------------------

std::string encode_pulses(const excitation::PulseDataset& d) {
  const Index count = d.size();
  if (d.conditioning.cols() != count) throw ContractError("PLS1: one conditioning vector per pulse required");
  const Index len = count > 0 ? d.pulses.front().samples.size() : excitation::kPulseLength;
  const Index cond = count > 0 ? d.conditioning.rows() : excitation::kCondDim;
  io::ByteWriter w;
  w.put_bytes("PLS1");
  w.put_u32(u32(count, "pulse count"));
  w.put_u32(u32(len, "pulse length"));
  w.put_u32(u32(cond, "conditioning size"));
  for (Index k = 0; k < count; ++k) {
    const auto& s = d.pulses[static_cast<std::size_t>(k)].samples;
    if (s.size() != len) throw ContractError("PLS1: pulses differ in length");
    for (Index i = 0; i < len; ++i) w.put_f32(static_cast<float>(s(i)));
    for (Index i = 0; i < cond; ++i) w.put_f32(static_cast<float>(d.conditioning(i, k)));
  }
  return w.take();
}

excitation::PulseDataset decode_pulses(std::string_view bytes) {
  io::ByteReader r(bytes);
  expect_magic(r, "PLS1");
  const std::uint32_t count = r.get_u32("PLS1 count");
  const std::uint32_t len = r.get_u32("PLS1 pulse length");
  const std::uint32_t cond = r.get_u32("PLS1 conditioning size");
  require_payload(r, std::uint64_t{count} * (len + cond), "PLS1 records");
  excitation::PulseDataset d;
  d.pulses.resize(count);
  d.conditioning.resize(cond, count);
  for (Index k = 0; k < count; ++k) {
    auto& p = d.pulses[static_cast<std::size_t>(k)];
    p.samples.resize(len);
    for (Index i = 0; i < len; ++i) p.samples(i) = r.get_f32("PLS1 samples");
    for (Index i = 0; i < cond; ++i) d.conditioning(i, k) = r.get_f32("PLS1 conditioning");
  }
  expect_end(r, "PLS1");
  return d;
}

void write_pulses(const std::string& path, const excitation::PulseDataset& d) {
  io::write_file_atomic(path, encode_pulses(d));
}

excitation::PulseDataset read_pulses(const std::string& path) {
  return with_path(path, [](std::string_view b) { return decode_pulses(b); });
}

// ---------------------------------------------------------------------------

// One frame per line, coefficients only.
std::string mfcc_csv(const cepstral::MfccSequence& m) {
  std::string out;
  for (Index t = 0; t < m.frames(); ++t) {
    for (Index k = 0; k < m.n_coef(); ++k) {
      if (k) out += ',';
      out += fmt(m.coefficients(t, k));
    }
    out += '\n';
  }
  return out;
}

std::string f0_csv(const pitch::PitchTrack& t) {
  std::string out = "frame,f0_hz,voiced\n";
  for (Index i = 0; i < t.frames(); ++i) {
    const bool v = t.voiced[static_cast<std::size_t>(i)];
    out += std::to_string(i) + "," + fmt(v ? t.f0_hz(i) : 0.0) + "," + (v ? "1" : "0") + "\n";
  }
  return out;
}

std::string envelope_csv(const envelope::ArEnvelope& e) {
  std::string out = "frame,gain";
  for (Index k = 1; k <= e.order(); ++k) out += ",a" + std::to_string(k);
  out += '\n';
  for (Index t = 0; t < e.frames(); ++t) {
    out += std::to_string(t) + "," + fmt(e.gains(t));
    for (Index k = 0; k < e.order(); ++k) out += "," + fmt(e.coefficients(t, k));
    out += '\n';
  }
  return out;
}

}  // namespace mfccvoc::formats
