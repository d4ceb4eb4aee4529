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

#include "mfccvoc/nn/serialize.hpp"

#include "mfccvoc/binary_io.hpp"

namespace mfccvoc::nn {

namespace {

constexpr std::string_view kMagic = "NNW1";

void put_name(io::ByteWriter& w, const std::string& s) {
  w.put_u32(static_cast<std::uint32_t>(s.size()));
  w.put_bytes(s);
}

std::string get_name(io::ByteReader& r, const std::string& what) {
  const std::uint32_t n = r.get_u32(what);
  return std::string(r.get_bytes(n, what));
}

std::string label(std::size_t i, LayerKind kind) {
  return "layer " + std::to_string(i) + " (" + std::string(kind_name(kind)) + ")";
}

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

std::string encode_weights(const std::vector<const Layer*>& layers) {
  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(static_cast<std::uint32_t>(layers.size()));
  for (const Layer* layer : layers) {
    w.put_u32(static_cast<std::uint32_t>(layer->kind()));
    const auto hp = layer->spec().hyperparameters();
    w.put_u32(static_cast<std::uint32_t>(hp.size()));
    for (const auto& [name, value] : hp) {
      put_name(w, name);
      w.put_f64(value);
    }
    const auto& params = layer->parameters();
    w.put_u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
      put_name(w, p.name);
      w.put_u32(static_cast<std::uint32_t>(p.value.rows()));
      w.put_u32(static_cast<std::uint32_t>(p.value.cols()));
      for (Index i = 0; i < p.value.rows(); ++i)
        for (Index j = 0; j < p.value.cols(); ++j) w.put_f32(static_cast<float>(p.value(i, j)));
    }
  }
  return w.take();
}

void save_weights(const std::string& path, const std::vector<const Layer*>& layers) {
  io::write_file_atomic(path, encode_weights(layers));
}

std::vector<LayerRecord> decode_weights(std::string_view bytes) {
  io::ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.get_bytes(kMagic.size(), "magic") != kMagic) {
    throw FormatError("not an NNW1 weight file (bad magic)");
  }
  const std::uint32_t count = r.get_u32("layer count");
  std::vector<LayerRecord> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "layer " + std::to_string(i);
    try {
      const std::uint32_t tag = r.get_u32(where + " kind");
      if (tag < 1 || tag > static_cast<std::uint32_t>(LayerKind::standardize)) {
        throw LoadError(where + ": unknown layer kind tag " + std::to_string(tag));
      }
      const auto kind = static_cast<LayerKind>(tag);
      const std::uint32_t n_hp = r.get_u32(where + " hyperparameter count");
      std::vector<std::pair<std::string, double>> hp;
      for (std::uint32_t h = 0; h < n_hp; ++h) {
        std::string name = get_name(r, where + " hyperparameter name");
        hp.emplace_back(std::move(name), r.get_f64(where + " hyperparameter value"));
      }
      LayerRecord rec;
      rec.spec = LayerSpec::from_hyperparameters(kind, hp);
      const std::uint32_t n_blobs = r.get_u32(where + " blob count");
      for (std::uint32_t b = 0; b < n_blobs; ++b) {
        std::string name = get_name(r, where + " blob name");
        const std::uint32_t rows = r.get_u32(where + " blob rows");
        const std::uint32_t cols = r.get_u32(where + " blob cols");
        if (static_cast<std::uint64_t>(rows) * cols * 4 > r.remaining()) {
          throw FormatError("truncated input while reading " + where + " blob '" + name + "'");
        }
        const std::string data_what = where + " blob data";
        Matrix m(rows, cols);
        for (Index ii = 0; ii < rows; ++ii)
          for (Index jj = 0; jj < cols; ++jj) m(ii, jj) = r.get_f32(data_what);
        rec.blobs.emplace_back(std::move(name), std::move(m));
      }
      out.push_back(std::move(rec));
    } catch (const FormatError& e) {
      throw LoadError("weight file truncated at " + where + ": " + e.what());
    }
  }
  if (!r.at_end()) throw FormatError("trailing bytes after " + std::to_string(count) + " layers in weight file");
  return out;
}

std::vector<LayerRecord> read_weights(const std::string& path) {
  try {
    return decode_weights(io::read_file(path));
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void assign_weights(const std::vector<LayerRecord>& records, const std::vector<Layer*>& layers) {
  if (records.size() != layers.size()) {
    throw LoadError("weight file has " + std::to_string(records.size()) + " layers, model expects " +
                    std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerRecord& rec = records[i];
    Layer& layer = *layers[i];
    if (!layer.spec().matches(rec.spec)) {
      throw LoadError(label(i, layer.kind()) + ": expected " + layer.spec().describe() + ", found " +
                      rec.spec.describe());
    }
    auto& params = layer.parameters();
    if (params.size() != rec.blobs.size()) {
      throw LoadError(label(i, layer.kind()) + ": expected " + std::to_string(params.size()) + " blobs, found " +
                      std::to_string(rec.blobs.size()));
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
      const auto& [name, value] = rec.blobs[b];
      const Parameter& p = params[b];
      if (name != p.name || value.rows() != p.value.rows() || value.cols() != p.value.cols()) {
        throw LoadError(label(i, layer.kind()) + ": expected blob '" + p.name + "' " +
                        dims(p.value.rows(), p.value.cols()) + ", found '" + name + "' " +
                        dims(value.rows(), value.cols()));
      }
    }
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& params = layers[i]->parameters();
    for (std::size_t b = 0; b < params.size(); ++b) params[b].value = records[i].blobs[b].second;
  }
}

}  // namespace mfccvoc::nn
