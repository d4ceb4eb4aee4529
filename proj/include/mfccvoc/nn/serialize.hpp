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

// NNW1 weight files:
//   "NNW1", u32 layer count, then per layer
//   u32 kind tag, u32 hyperparameter count, (u32 name length, name, f64 value)*,
//   u32 blob count, (u32 name length, name, u32 rows, u32 cols, f32 row-major)*.
// All integers and floats are little-endian.

#include <string>
#include <utility>
#include <vector>

#include "mfccvoc/nn/layers.hpp"

namespace mfccvoc::nn {

struct LayerRecord {
  LayerSpec spec;
  std::vector<std::pair<std::string, Matrix>> blobs;
};

std::string encode_weights(const std::vector<const Layer*>& layers);
void save_weights(const std::string& path, const std::vector<const Layer*>& layers);

// FormatError on a bad magic; LoadError naming the layer on truncation.
std::vector<LayerRecord> decode_weights(std::string_view bytes);
std::vector<LayerRecord> read_weights(const std::string& path);

// Copies records into layers after checking count, specs, blob names and
// shapes. LoadError names the first mismatching layer with expected vs found.
void assign_weights(const std::vector<LayerRecord>& records, const std::vector<Layer*>& layers);

}  // namespace mfccvoc::nn
