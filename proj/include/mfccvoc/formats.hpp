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

// Feature file formats. Every format starts with a 4-byte magic followed by
// little-endian u32 header fields and float32 payload.
//   MFC1: frames, n_coef, sample_rate, hop, then frames x n_coef row-major
//   F0T1: frames, hop, sample_rate, then per frame f0_hz (0 = unvoiced)
//   ARE1: frames, order, then per frame gain and a[1..order]
//   PLS1: count, pulse_length, cond_dim, then per record samples and conditioning

#include <string>
#include <string_view>

#include "mfccvoc/cepstral.hpp"
#include "mfccvoc/envelope.hpp"
#include "mfccvoc/excitation.hpp"
#include "mfccvoc/pitch.hpp"

namespace mfccvoc::formats {

std::string encode_mfcc(const cepstral::MfccSequence& m);
cepstral::MfccSequence decode_mfcc(std::string_view bytes);
void write_mfcc(const std::string& path, const cepstral::MfccSequence& m);
cepstral::MfccSequence read_mfcc(const std::string& path);

std::string encode_f0(const pitch::PitchTrack& t);
pitch::PitchTrack decode_f0(std::string_view bytes);
void write_f0(const std::string& path, const pitch::PitchTrack& t);
pitch::PitchTrack read_f0(const std::string& path);

std::string encode_envelope(const envelope::ArEnvelope& e);
envelope::ArEnvelope decode_envelope(std::string_view bytes);
void write_envelope(const std::string& path, const envelope::ArEnvelope& e);
envelope::ArEnvelope read_envelope(const std::string& path);

// Records are (pulse, conditioning column) pairs; marks and periods are not
// stored.
std::string encode_pulses(const excitation::PulseDataset& d);
excitation::PulseDataset decode_pulses(std::string_view bytes);
void write_pulses(const std::string& path, const excitation::PulseDataset& d);
excitation::PulseDataset read_pulses(const std::string& path);

std::string mfcc_csv(const cepstral::MfccSequence& m);
std::string f0_csv(const pitch::PitchTrack& t);  // frame,f0_hz,voiced
std::string envelope_csv(const envelope::ArEnvelope& e);

}  // namespace mfccvoc::formats
