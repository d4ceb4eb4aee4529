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

#include "mfccvoc/wav.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "mfccvoc/binary_io.hpp"

namespace mfccvoc::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(std::string_view body) {
  io::ByteReader r(body);
  FmtChunk f;
  f.format = r.get_u16("chunk 'fmt ' format tag");
  f.channels = r.get_u16("chunk 'fmt ' channel count");
  f.sample_rate = r.get_u32("chunk 'fmt ' sample rate");
  r.skip(4, "chunk 'fmt ' byte rate");
  r.skip(2, "chunk 'fmt ' block align");
  f.bits = r.get_u16("chunk 'fmt ' bits per sample");
  if (f.format == kFormatExtensible) {
    r.skip(2, "chunk 'fmt ' extension size");
    r.skip(2, "chunk 'fmt ' valid bits");
    r.skip(4, "chunk 'fmt ' channel mask");
    f.format = r.get_u16("chunk 'fmt ' sub-format");
  }
  return f;
}

}  // namespace

Waveform parse_wav(const std::string& bytes) {
  io::ByteReader r(bytes);
  if (r.get_bytes(4, "chunk 'RIFF' header") != "RIFF") throw FormatError("chunk 'RIFF': bad magic");
  r.skip(4, "chunk 'RIFF' size");
  if (r.get_bytes(4, "chunk 'RIFF' form type") != "WAVE") {
    throw FormatError("chunk 'RIFF': form type is not WAVE");
  }

  std::optional<FmtChunk> fmt;
  std::optional<std::string_view> data;
  while (!r.at_end() && !(fmt && data)) {
    if (r.remaining() < 8) throw FormatError("truncated chunk header after offset " + std::to_string(r.position()));
    const std::string id(r.get_bytes(4, "chunk id"));
    const std::uint32_t size = r.get_u32("chunk '" + id + "' size");
    if (r.remaining() < size) {
      throw FormatError("truncated chunk '" + id + "': declares " + std::to_string(size) +
                        " bytes, " + std::to_string(r.remaining()) + " available");
    }
    const std::string_view body = r.get_bytes(size, "chunk '" + id + "' body");
    if (size % 2 == 1 && !r.at_end()) r.skip(1, "chunk pad byte");
    if (id == "fmt ") {
      fmt = parse_fmt(body);
    } else if (id == "data") {
      data = body;
    }
  }
  if (!fmt) throw FormatError("missing chunk 'fmt '");
  if (!data) throw FormatError("missing chunk 'data'");
  if (fmt->channels != 1) {
    throw FormatError("unsupported channel count: " + std::to_string(fmt->channels));
  }
  if (fmt->sample_rate == 0) throw FormatError("chunk 'fmt ': sample rate is zero");

  Waveform w;
  w.sample_rate = static_cast<int>(fmt->sample_rate);
  io::ByteReader d(*data);
  if (fmt->format == kFormatPcm && fmt->bits == 16) {
    w.samples.resize(static_cast<Index>(data->size() / 2));
    for (Index i = 0; i < w.samples.size(); ++i) {
      w.samples(i) = static_cast<double>(d.get_i16("chunk 'data' sample")) / 32768.0;
    }
  } else if (fmt->format == kFormatFloat && fmt->bits == 32) {
    w.samples.resize(static_cast<Index>(data->size() / 4));
    for (Index i = 0; i < w.samples.size(); ++i) {
      w.samples(i) = static_cast<double>(d.get_f32("chunk 'data' sample"));
    }
    if (!w.all_finite()) throw FormatError("chunk 'data': non-finite float sample");
  } else {
    throw FormatError("chunk 'fmt ': unsupported sample format (tag " + std::to_string(fmt->format) +
                      ", " + std::to_string(fmt->bits) + " bits)");
  }
  return w;
}

Waveform read_wav(const std::string& path) {
  try {
    return parse_wav(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string encode_wav(const Waveform& w, WavSampleFormat format) {
  const bool pcm = format == WavSampleFormat::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(w.samples.size()) * bytes_per_sample;

  io::ByteWriter out;
  out.put_bytes("RIFF");
  out.put_u32(36 + data_size);
  out.put_bytes("WAVE");
  out.put_bytes("fmt ");
  out.put_u32(16);
  out.put_u16(pcm ? kFormatPcm : kFormatFloat);
  out.put_u16(1);
  out.put_u32(static_cast<std::uint32_t>(w.sample_rate));
  out.put_u32(static_cast<std::uint32_t>(w.sample_rate) * bytes_per_sample);
  out.put_u16(static_cast<std::uint16_t>(bytes_per_sample));
  out.put_u16(bits);
  out.put_bytes("data");
  out.put_u32(data_size);
  for (Index i = 0; i < w.samples.size(); ++i) {
    if (pcm) {
      const double v = std::round(w.samples(i) * 32768.0);
      out.put_i16(static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0)));
    } else {
      out.put_f32(static_cast<float>(w.samples(i)));
    }
  }
  return out.take();
}

void write_wav(const std::string& path, const Waveform& w, WavSampleFormat format) {
  io::write_file_atomic(path, encode_wav(w, format));
}

}  // namespace mfccvoc::dsp
