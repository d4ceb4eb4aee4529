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

// RIFF/WAVE reading and writing for mono PCM16 and IEEE float32 files.

#include <string>

#include "mfccvoc/signal.hpp"

namespace mfccvoc::dsp {

enum class WavSampleFormat { float32, pcm16 };

// PCM16 samples are mapped to [-1, 1) by dividing by 32768. Throws
// FormatError naming the offending chunk on anything unsupported.
Waveform read_wav(const std::string& path);
Waveform parse_wav(const std::string& bytes);

std::string encode_wav(const Waveform& w, WavSampleFormat format = WavSampleFormat::float32);
void write_wav(const std::string& path, const Waveform& w,
               WavSampleFormat format = WavSampleFormat::float32);

}  // namespace mfccvoc::dsp
