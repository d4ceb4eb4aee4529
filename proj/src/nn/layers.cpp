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

#include "mfccvoc/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mfccvoc::nn {

using StepMap = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;
using ConstStepMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

namespace {

// Columns of time step t for every example of a (rows x batch*time) matrix.
StepMap step_cols(Matrix& m, Index batch, Index time, Index t) {
  return StepMap(m.data() + t * m.rows(), m.rows(), batch, Eigen::OuterStride<>(time * m.rows()));
}
ConstStepMap step_cols(const Matrix& m, Index batch, Index time, Index t) {
  return ConstStepMap(m.data() + t * m.rows(), m.rows(), batch, Eigen::OuterStride<>(time * m.rows()));
}

std::uint64_t sign_hash(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index i = 0; i < m.size(); ++i) {
    h ^= m.data()[i] > 0.0 ? 1u : 0u;
    h *= 1099511628211ULL;
  }
  return h;
}

Matrix sigmoid(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

void glorot(Matrix& w, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// LayerSpec

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::gru: return "gru";
    case LayerKind::lstm: return "lstm";
    case LayerKind::blstm: return "blstm";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::lrelu: return "lrelu";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::softmax: return "softmax";
    case LayerKind::fft_magnitude: return "fft_magnitude";
    case LayerKind::standardize: return "standardize";
  }
  return "unknown";
}

LayerSpec LayerSpec::dense(Index in, Index out) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in_channels = in;
  s.out_channels = out;
  return s;
}

LayerSpec LayerSpec::conv1d(Index in, Index out, Index width, Index stride, Padding padding) {
  if (stride < 1) throw ParameterError("conv1d stride must be >= 1");
  if (padding == Padding::same && width % 2 == 0) throw ParameterError("same-padded conv1d needs an odd width");
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.in_channels = in;
  s.out_channels = out;
  s.width = width;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::gru(Index in, Index hidden, Activation activation, bool return_sequences) {
  LayerSpec s;
  s.kind = LayerKind::gru;
  s.in_channels = in;
  s.out_channels = hidden;
  s.activation = activation;
  s.return_sequences = return_sequences;
  return s;
}

LayerSpec LayerSpec::lstm(Index in, Index hidden) {
  LayerSpec s;
  s.kind = LayerKind::lstm;
  s.in_channels = in;
  s.out_channels = hidden;
  return s;
}

LayerSpec LayerSpec::blstm(Index in, Index hidden) {
  LayerSpec s = lstm(in, hidden);
  s.kind = LayerKind::blstm;
  return s;
}

LayerSpec LayerSpec::batch_norm(Index channels, double epsilon, double momentum) {
  LayerSpec s;
  s.kind = LayerKind::batch_norm;
  s.in_channels = channels;
  s.out_channels = channels;
  s.epsilon = epsilon;
  s.momentum = momentum;
  return s;
}

LayerSpec LayerSpec::lrelu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::lrelu;
  s.slope = slope;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::relu;
  return s;
}

LayerSpec LayerSpec::tanh() {
  LayerSpec s;
  s.kind = LayerKind::tanh;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::softmax;
  return s;
}

LayerSpec LayerSpec::fft_magnitude(Index length, double epsilon, double scale) {
  LayerSpec s;
  s.kind = LayerKind::fft_magnitude;
  s.length = length;
  s.epsilon = epsilon;
  s.scale = scale;
  return s;
}

LayerSpec LayerSpec::standardize(Index channels) {
  LayerSpec s;
  s.kind = LayerKind::standardize;
  s.in_channels = channels;
  s.out_channels = channels;
  return s;
}

std::vector<std::pair<std::string, double>> LayerSpec::hyperparameters() const {
  auto d = [](Index v) { return static_cast<double>(v); };
  switch (kind) {
    case LayerKind::dense:
      return {{"in", d(in_channels)}, {"out", d(out_channels)}};
    case LayerKind::conv1d:
      return {{"in", d(in_channels)}, {"out", d(out_channels)}, {"width", d(width)},
              {"stride", d(stride)}, {"padding", static_cast<double>(padding)}};
    case LayerKind::gru:
      return {{"in", d(in_channels)}, {"hidden", d(out_channels)},
              {"activation", static_cast<double>(activation)}, {"return_sequences", return_sequences ? 1.0 : 0.0}};
    case LayerKind::lstm:
    case LayerKind::blstm:
      return {{"in", d(in_channels)}, {"hidden", d(out_channels)}};
    case LayerKind::batch_norm:
      return {{"channels", d(in_channels)}, {"epsilon", epsilon}, {"momentum", momentum}};
    case LayerKind::lrelu:
      return {{"slope", slope}};
    case LayerKind::relu:
    case LayerKind::tanh:
    case LayerKind::softmax:
      return {};
    case LayerKind::fft_magnitude:
      return {{"length", d(length)}, {"epsilon", epsilon}, {"scale", scale}};
    case LayerKind::standardize:
      return {{"channels", d(in_channels)}};
  }
  return {};
}

LayerSpec LayerSpec::from_hyperparameters(LayerKind kind, const std::vector<std::pair<std::string, double>>& hp) {
  std::map<std::string, double> m(hp.begin(), hp.end());
  auto get = [&](const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) {
      throw LoadError("layer kind " + std::string(kind_name(kind)) + " is missing hyperparameter '" + key + "'");
    }
    return it->second;
  };
  auto idx = [&](const std::string& key) { return static_cast<Index>(std::llround(get(key))); };
  switch (kind) {
    case LayerKind::dense: return dense(idx("in"), idx("out"));
    case LayerKind::conv1d:
      return conv1d(idx("in"), idx("out"), idx("width"), idx("stride"), static_cast<Padding>(idx("padding")));
    case LayerKind::gru:
      return gru(idx("in"), idx("hidden"), static_cast<Activation>(idx("activation")), get("return_sequences") != 0.0);
    case LayerKind::lstm: return lstm(idx("in"), idx("hidden"));
    case LayerKind::blstm: return blstm(idx("in"), idx("hidden"));
    case LayerKind::batch_norm: return batch_norm(idx("channels"), get("epsilon"), get("momentum"));
    case LayerKind::lrelu: return lrelu(get("slope"));
    case LayerKind::relu: return relu();
    case LayerKind::tanh: return tanh();
    case LayerKind::softmax: return softmax();
    case LayerKind::fft_magnitude: return fft_magnitude(idx("length"), get("epsilon"), get("scale"));
    case LayerKind::standardize: return standardize(idx("channels"));
  }
  throw LoadError("unknown layer kind tag " + std::to_string(static_cast<std::uint32_t>(kind)));
}

Index LayerSpec::output_channels(Index input_channels) const {
  switch (kind) {
    case LayerKind::dense:
    case LayerKind::conv1d:
    case LayerKind::gru:
    case LayerKind::lstm:
      return out_channels;
    case LayerKind::blstm:
      return 2 * out_channels;
    default:
      return input_channels;
  }
}

std::string LayerSpec::describe() const {
  std::ostringstream ss;
  ss << kind_name(kind) << "(";
  bool first = true;
  for (const auto& [k, v] : hyperparameters()) {
    ss << (first ? "" : ", ") << k << "=" << v;
    first = false;
  }
  ss << ")";
  return ss.str();
}

// ---------------------------------------------------------------------------
// Layer base

Parameter& Layer::parameter(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ContractError(std::string(kind_name(kind())) + " has no parameter '" + std::string(name) + "'");
}

const Parameter& Layer::parameter(std::string_view name) const {
  return const_cast<Layer*>(this)->parameter(name);
}

void Layer::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

Parameter& Layer::add_parameter(std::string name, Index rows, Index cols, bool trainable) {
  params_.push_back({std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), trainable});
  return params_.back();
}

void Layer::require_forward(std::string_view who) const {
  if (!has_forward_) throw ContractError(std::string(who) + ": backward called before forward");
}

void Layer::check_channels(const Tensor& x, Index expected) const {
  if (x.channels() != expected) {
    throw ContractError(std::string(kind_name(kind())) + " expects " + std::to_string(expected) +
                        " input channels, got tensor " + x.shape());
  }
}

void Layer::initialize(std::mt19937_64&) {}

namespace {

// ---------------------------------------------------------------------------
// Dense (applied independently at every time step)

class DenseLayer : public Layer {
 public:
  explicit DenseLayer(const LayerSpec& s) : Layer(s) {
    add_parameter("weight", s.out_channels, s.in_channels);
    add_parameter("bias", s.out_channels, 1);
  }

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, spec_.in_channels);
    input_ = x;
    has_forward_ = true;
    Matrix y = params_[0].value * x.data();
    y.colwise() += params_[1].value.col(0);
    return {x.batch(), spec_.out_channels, x.time(), std::move(y)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("dense");
    params_[0].grad.noalias() += g.data() * input_.data().transpose();
    params_[1].grad.col(0) += g.data().rowwise().sum();
    return {g.batch(), spec_.in_channels, g.time(), params_[0].value.transpose() * g.data()};
  }

  void initialize(std::mt19937_64& rng) override {
    glorot(params_[0].value, spec_.in_channels, spec_.out_channels, rng);
    params_[1].value.setZero();
  }

 private:
  Tensor input_;
};

// ---------------------------------------------------------------------------
// Conv1d: cross-correlation, im2col + GEMM in example chunks.

class Conv1dLayer : public Layer {
 public:
  explicit Conv1dLayer(const LayerSpec& s) : Layer(s) {
    add_parameter("weight", s.out_channels, s.in_channels * s.width);
    add_parameter("bias", s.out_channels, 1);
  }

  Index output_length(Index in_len) const {
    if (spec_.padding == Padding::same) return (in_len + spec_.stride - 1) / spec_.stride;
    if (in_len < spec_.width) {
      throw ContractError("conv1d: input length " + std::to_string(in_len) + " shorter than kernel width " +
                          std::to_string(spec_.width));
    }
    return (in_len - spec_.width) / spec_.stride + 1;
  }

  Index pad_left(Index in_len) const {
    if (spec_.padding == Padding::valid) return 0;
    const Index out = output_length(in_len);
    const Index total = std::max<Index>((out - 1) * spec_.stride + spec_.width - in_len, 0);
    return total / 2;
  }

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, spec_.in_channels);
    input_ = x;
    has_forward_ = true;
    const Index t_in = x.time(), t_out = output_length(t_in);
    Matrix y(spec_.out_channels, x.batch() * t_out);
    const Index chunk = chunk_size(t_out);
    Matrix cols;
    for (Index b0 = 0; b0 < x.batch(); b0 += chunk) {
      const Index nb = std::min(chunk, x.batch() - b0);
      im2col(x, b0, nb, t_out, cols);
      y.middleCols(b0 * t_out, nb * t_out).noalias() = params_[0].value * cols;
    }
    y.colwise() += params_[1].value.col(0);
    return {x.batch(), spec_.out_channels, t_out, std::move(y)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("conv1d");
    const Index t_in = input_.time(), t_out = output_length(t_in);
    if (g.time() != t_out || g.batch() != input_.batch() || g.channels() != spec_.out_channels) {
      throw ContractError("conv1d backward: gradient " + g.shape() + " does not match output");
    }
    Tensor dx(input_.batch(), spec_.in_channels, t_in);
    const Index chunk = chunk_size(t_out);
    Matrix cols, dcols;
    for (Index b0 = 0; b0 < input_.batch(); b0 += chunk) {
      const Index nb = std::min(chunk, input_.batch() - b0);
      im2col(input_, b0, nb, t_out, cols);
      const auto gc = g.data().middleCols(b0 * t_out, nb * t_out);
      params_[0].grad.noalias() += gc * cols.transpose();
      dcols.noalias() = params_[0].value.transpose() * gc;
      col2im(dcols, b0, nb, t_out, dx);
    }
    params_[1].grad.col(0) += g.data().rowwise().sum();
    return dx;
  }

  void initialize(std::mt19937_64& rng) override {
    glorot(params_[0].value, spec_.in_channels * spec_.width, spec_.out_channels * spec_.width, rng);
    params_[1].value.setZero();
  }

 private:
  Index chunk_size(Index t_out) const {
    const Index per_example = spec_.in_channels * spec_.width * t_out;
    return std::max<Index>(1, (Index{1} << 21) / std::max<Index>(per_example, 1));
  }

  void im2col(const Tensor& x, Index b0, Index nb, Index t_out, Matrix& cols) const {
    const Index t_in = x.time(), width = spec_.width, stride = spec_.stride, pad = pad_left(t_in);
    cols.setZero(spec_.in_channels * width, nb * t_out);
    for (Index b = 0; b < nb; ++b) {
      const auto ex = x.example(b0 + b);
      for (Index j = 0; j < t_out; ++j) {
        const Index col = b * t_out + j;
        const Index base = j * stride - pad;
        for (Index k = 0; k < width; ++k) {
          const Index src = base + k;
          if (src < 0 || src >= t_in) continue;
          for (Index c = 0; c < spec_.in_channels; ++c) cols(c * width + k, col) = ex(c, src);
        }
      }
    }
  }

  void col2im(const Matrix& dcols, Index b0, Index nb, Index t_out, Tensor& dx) const {
    const Index t_in = dx.time(), width = spec_.width, stride = spec_.stride, pad = pad_left(t_in);
    for (Index b = 0; b < nb; ++b) {
      auto ex = dx.example(b0 + b);
      for (Index j = 0; j < t_out; ++j) {
        const Index col = b * t_out + j;
        const Index base = j * stride - pad;
        for (Index k = 0; k < width; ++k) {
          const Index src = base + k;
          if (src < 0 || src >= t_in) continue;
          for (Index c = 0; c < spec_.in_channels; ++c) ex(c, src) += dcols(c * width + k, col);
        }
      }
    }
  }

  Tensor input_;
};

// ---------------------------------------------------------------------------
// GRU: z, r, candidate blocks; h = (1 - z) h_prev + z h~.

class GruLayer : public Layer {
 public:
  explicit GruLayer(const LayerSpec& s) : Layer(s) {
    add_parameter("kernel", 3 * s.out_channels, s.in_channels);
    add_parameter("recurrent", 3 * s.out_channels, s.out_channels);
    add_parameter("bias", 3 * s.out_channels, 1);
  }

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, spec_.in_channels);
    input_ = x;
    has_forward_ = true;
    const Index H = spec_.out_channels, B = x.batch(), T = x.time();
    const Matrix& U = params_[1].value;
    Matrix wx = params_[0].value * x.data();
    wx.colwise() += params_[2].value.col(0);

    steps_.assign(static_cast<std::size_t>(T), {});
    Matrix h = Matrix::Zero(H, B);
    Matrix out = spec_.return_sequences ? Matrix(H, B * T) : Matrix(H, B);
    for (Index t = 0; t < T; ++t) {
      auto& s = steps_[static_cast<std::size_t>(t)];
      const auto a = step_cols(wx, B, T, t);
      s.h_prev = h;
      s.z = sigmoid(a.topRows(H) + U.topRows(H) * h);
      s.r = sigmoid(a.middleRows(H, H) + U.middleRows(H, H) * h);
      s.rh = s.r.cwiseProduct(h);
      s.a_cand = a.bottomRows(H) + U.bottomRows(H) * s.rh;
      s.cand = activate(s.a_cand);
      h = (1.0 - s.z.array()).matrix().cwiseProduct(h) + s.z.cwiseProduct(s.cand);
      if (spec_.return_sequences) step_cols(out, B, T, t) = h;
    }
    if (!spec_.return_sequences) {
      out = h;
      return {B, H, 1, std::move(out)};
    }
    return {B, H, T, std::move(out)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("gru");
    const Index H = spec_.out_channels, B = input_.batch(), T = input_.time();
    const Matrix& U = params_[1].value;
    Matrix& dU = params_[1].grad;
    Matrix da(3 * H, B * T);
    Matrix dh_next = Matrix::Zero(H, B);
    for (Index t = T - 1; t >= 0; --t) {
      const auto& s = steps_[static_cast<std::size_t>(t)];
      Matrix dh = dh_next;
      if (spec_.return_sequences) {
        dh += step_cols(g.data(), B, T, t);
      } else if (t == T - 1) {
        dh += g.data();
      }
      const Matrix dz = dh.cwiseProduct(s.cand - s.h_prev);
      const Matrix dcand = dh.cwiseProduct(s.z);
      Matrix dh_prev = dh.cwiseProduct((1.0 - s.z.array()).matrix());
      const Matrix da_cand = dcand.cwiseProduct(activation_grad(s.a_cand, s.cand));
      dU.bottomRows(H).noalias() += da_cand * s.rh.transpose();
      const Matrix drh = U.bottomRows(H).transpose() * da_cand;
      const Matrix dr = drh.cwiseProduct(s.h_prev);
      dh_prev += drh.cwiseProduct(s.r);
      const Matrix da_z = dz.array() * s.z.array() * (1.0 - s.z.array());
      const Matrix da_r = dr.array() * s.r.array() * (1.0 - s.r.array());
      dU.topRows(H).noalias() += da_z * s.h_prev.transpose();
      dU.middleRows(H, H).noalias() += da_r * s.h_prev.transpose();
      dh_prev.noalias() += U.topRows(H).transpose() * da_z;
      dh_prev.noalias() += U.middleRows(H, H).transpose() * da_r;
      auto dst = step_cols(da, B, T, t);
      dst.topRows(H) = da_z;
      dst.middleRows(H, H) = da_r;
      dst.bottomRows(H) = da_cand;
      dh_next = dh_prev;
    }
    params_[0].grad.noalias() += da * input_.data().transpose();
    params_[2].grad.col(0) += da.rowwise().sum();
    return {B, spec_.in_channels, T, params_[0].value.transpose() * da};
  }

  std::uint64_t kink_signature() const override {
    if (spec_.activation != Activation::relu) return 0;
    std::uint64_t h = 0;
    for (const auto& s : steps_) h = h * 31 + sign_hash(s.a_cand);
    return h;
  }

  void initialize(std::mt19937_64& rng) override {
    const Index H = spec_.out_channels;
    glorot(params_[0].value, spec_.in_channels, 3 * H, rng);
    glorot(params_[1].value, H, 3 * H, rng);
    params_[2].value.setZero();
  }

 private:
  Matrix activate(const Matrix& a) const {
    if (spec_.activation == Activation::relu) return a.cwiseMax(0.0);
    return a.array().tanh().matrix();
  }
  Matrix activation_grad(const Matrix& a, const Matrix& y) const {
    if (spec_.activation == Activation::relu) return (a.array() > 0.0).cast<double>().matrix();
    return (1.0 - y.array().square()).matrix();
  }

  struct Step {
    Matrix h_prev, z, r, rh, a_cand, cand;
  };
  Tensor input_;
  std::vector<Step> steps_;
};

// ---------------------------------------------------------------------------
// LSTM core shared by the unidirectional and bidirectional layers.
// Gate order i, f, g, o.

struct LstmCore {
  struct Step {
    Matrix h_prev, c_prev, i, f, g, o, tanh_c;
  };
  std::vector<Step> steps;

  static void cell(const Eigen::Ref<const Matrix>& a, Index H, const Matrix& c_prev, Step& s) {
    s.i = sigmoid(a.topRows(H));
    s.f = sigmoid(a.middleRows(H, H));
    s.g = a.middleRows(2 * H, H).array().tanh().matrix();
    s.o = sigmoid(a.bottomRows(H));
    s.c_prev = c_prev;
    const Matrix c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
    s.tanh_c = c.array().tanh().matrix();
  }

  // Returns hidden x (batch * time); `reverse` runs from the last step.
  Matrix forward(const Matrix& x, Index B, Index T, const Matrix& W, const Matrix& U, const Matrix& b, bool reverse) {
    const Index H = U.cols();
    Matrix wx = W * x;
    wx.colwise() += b.col(0);
    steps.assign(static_cast<std::size_t>(T), {});
    Matrix h = Matrix::Zero(H, B), c = Matrix::Zero(H, B);
    Matrix out(H, B * T);
    for (Index n = 0; n < T; ++n) {
      const Index t = reverse ? T - 1 - n : n;
      auto& s = steps[static_cast<std::size_t>(t)];
      s.h_prev = h;
      const Matrix a = step_cols(wx, B, T, t) + U * h;
      cell(a, H, c, s);
      c = s.f.cwiseProduct(s.c_prev) + s.i.cwiseProduct(s.g);
      h = s.o.cwiseProduct(s.tanh_c);
      step_cols(out, B, T, t) = h;
    }
    return out;
  }

  // g: hidden x (batch * time). Accumulates dW, dU, db; returns dx.
  Matrix backward(const Matrix& g, const Matrix& x, Index B, Index T, const Matrix& W, const Matrix& U,
                  Matrix& dW, Matrix& dU, Matrix& db, bool reverse) const {
    const Index H = U.cols();
    Matrix da(4 * H, B * T);
    Matrix dh_next = Matrix::Zero(H, B), dc_next = Matrix::Zero(H, B);
    for (Index n = T - 1; n >= 0; --n) {
      const Index t = reverse ? T - 1 - n : n;
      const auto& s = steps[static_cast<std::size_t>(t)];
      const Matrix dh = dh_next + step_cols(g, B, T, t);
      const Matrix dc = dc_next + (dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square())).matrix();
      auto a = step_cols(da, B, T, t);
      a.topRows(H) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
      a.middleRows(H, H) = (dc.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
      a.middleRows(2 * H, H) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
      a.bottomRows(H) = (dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();
      const Matrix a_t = a;
      dU.noalias() += a_t * s.h_prev.transpose();
      dh_next.noalias() = U.transpose() * a_t;
      dc_next = dc.cwiseProduct(s.f);
    }
    dW.noalias() += da * x.transpose();
    db.col(0) += da.rowwise().sum();
    return W.transpose() * da;
  }
};

void init_lstm(Matrix& W, Matrix& U, Matrix& b, std::mt19937_64& rng) {
  const Index H = U.cols();
  glorot(W, W.cols(), 4 * H, rng);
  glorot(U, H, 4 * H, rng);
  b.setZero();
  b.middleRows(H, H).setOnes();
}

class BlstmLayer : public Layer {
 public:
  explicit BlstmLayer(const LayerSpec& s) : Layer(s) {
    for (const char* dir : {"fw_", "bw_"}) {
      add_parameter(std::string(dir) + "kernel", 4 * s.out_channels, s.in_channels);
      add_parameter(std::string(dir) + "recurrent", 4 * s.out_channels, s.out_channels);
      add_parameter(std::string(dir) + "bias", 4 * s.out_channels, 1);
    }
  }

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, spec_.in_channels);
    input_ = x;
    has_forward_ = true;
    const Index H = spec_.out_channels, B = x.batch(), T = x.time();
    Matrix out(2 * H, B * T);
    out.topRows(H) = fw_.forward(x.data(), B, T, params_[0].value, params_[1].value, params_[2].value, false);
    out.bottomRows(H) = bw_.forward(x.data(), B, T, params_[3].value, params_[4].value, params_[5].value, true);
    return {B, 2 * H, T, std::move(out)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("blstm");
    const Index H = spec_.out_channels, B = input_.batch(), T = input_.time();
    const Matrix gf = g.data().topRows(H), gb = g.data().bottomRows(H);
    Matrix dx = fw_.backward(gf, input_.data(), B, T, params_[0].value, params_[1].value, params_[0].grad,
                             params_[1].grad, params_[2].grad, false);
    dx += bw_.backward(gb, input_.data(), B, T, params_[3].value, params_[4].value, params_[3].grad,
                       params_[4].grad, params_[5].grad, true);
    return {B, spec_.in_channels, T, std::move(dx)};
  }

  void initialize(std::mt19937_64& rng) override {
    init_lstm(params_[0].value, params_[1].value, params_[2].value, rng);
    init_lstm(params_[3].value, params_[4].value, params_[5].value, rng);
  }

 private:
  Tensor input_;
  LstmCore fw_, bw_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch, time) per channel.

class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(const LayerSpec& s) : Layer(s) {
    add_parameter("gamma", s.in_channels, 1).value.setOnes();
    add_parameter("beta", s.in_channels, 1);
    add_parameter("running_mean", s.in_channels, 1, false);
    add_parameter("running_var", s.in_channels, 1, false).value.setOnes();
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    check_channels(x, spec_.in_channels);
    has_forward_ = true;
    mode_ = mode;
    batch_ = x.batch();
    time_ = x.time();
    const auto& gamma = params_[0].value;
    const auto& beta = params_[1].value;
    Vector mean, var;
    if (mode == Mode::eval) {
      mean = params_[2].value.col(0);
      var = params_[3].value.col(0);
    } else {
      const double n = static_cast<double>(x.data().cols());
      if (x.data().cols() < 1) throw ContractError("batch_norm: empty batch");
      mean = x.data().rowwise().mean();
      var = (x.data().colwise() - mean).array().square().rowwise().sum().matrix() / n;
      if (mode == Mode::train) {
        const double m = spec_.momentum;
        params_[2].value.col(0) = m * params_[2].value.col(0) + (1.0 - m) * mean;
        params_[3].value.col(0) = m * params_[3].value.col(0) + (1.0 - m) * var;
      } else if (mode == Mode::calibrate) {
        if (acc_n_ == 0.0) {
          acc_sum_ = Vector::Zero(spec_.in_channels);
          acc_sq_ = Vector::Zero(spec_.in_channels);
        }
        acc_n_ += n;
        acc_sum_ += x.data().rowwise().sum();
        acc_sq_ += x.data().array().square().rowwise().sum().matrix();
        params_[2].value.col(0) = acc_sum_ / acc_n_;
        params_[3].value.col(0) =
            (acc_sq_ / acc_n_ - params_[2].value.col(0).cwiseAbs2()).cwiseMax(0.0);
      }
    }
    inv_std_ = (var.array() + spec_.epsilon).rsqrt().matrix();
    x_hat_ = (x.data().colwise() - mean).array().colwise() * inv_std_.array();
    Matrix y = (x_hat_.array().colwise() * gamma.col(0).array()).matrix();
    y.colwise() += beta.col(0);
    return {x.batch(), x.channels(), x.time(), std::move(y)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("batch_norm");
    const auto& gamma = params_[0].value;
    params_[0].grad.col(0) += g.data().cwiseProduct(x_hat_).rowwise().sum();
    params_[1].grad.col(0) += g.data().rowwise().sum();
    const Matrix dxhat = g.data().array().colwise() * gamma.col(0).array();
    Matrix dx;
    if (mode_ == Mode::eval) {
      dx = dxhat.array().colwise() * inv_std_.array();
    } else {
      const double n = static_cast<double>(g.data().cols());
      const Vector sum_d = dxhat.rowwise().sum();
      const Vector sum_dx = dxhat.cwiseProduct(x_hat_).rowwise().sum();
      dx = ((n * dxhat).colwise() - sum_d - (x_hat_.array().colwise() * sum_dx.array()).matrix());
      dx = dx.array().colwise() * (inv_std_.array() / n);
    }
    return {batch_, spec_.in_channels, time_, std::move(dx)};
  }

  void initialize(std::mt19937_64&) override {
    params_[0].value.setOnes();
    params_[1].value.setZero();
    params_[2].value.setZero();
    params_[3].value.setOnes();
  }

  void reset_statistics() override { acc_n_ = 0.0; }

 private:
  Mode mode_ = Mode::train;
  Index batch_ = 0, time_ = 0;
  double acc_n_ = 0.0;
  Vector acc_sum_, acc_sq_;
  Vector inv_std_;
  Matrix x_hat_;
};

// ---------------------------------------------------------------------------
// Pointwise activations.

class PointwiseLayer : public Layer {
 public:
  using Layer::Layer;

  Tensor forward(const Tensor& x, Mode) override {
    has_forward_ = true;
    input_ = x;
    output_ = Tensor(x.batch(), x.channels(), x.time(), apply(x.data()));
    return output_;
  }

  std::uint64_t kink_signature() const override {
    if (kind() == LayerKind::tanh || !has_forward_) return 0;
    return sign_hash(input_.data());
  }

  Tensor backward(const Tensor& g) override {
    require_forward(kind_name(kind()));
    if (!g.same_shape(input_)) throw ContractError("activation backward: gradient " + g.shape() + " vs " + input_.shape());
    return {g.batch(), g.channels(), g.time(), g.data().cwiseProduct(derivative())};
  }

 private:
  Matrix apply(const Matrix& x) const {
    switch (kind()) {
      case LayerKind::lrelu: return (x.array() > 0.0).select(x.array(), spec_.slope * x.array()).matrix();
      case LayerKind::relu: return x.cwiseMax(0.0);
      default: return x.array().tanh().matrix();
    }
  }
  Matrix derivative() const {
    const Matrix& x = input_.data();
    switch (kind()) {
      case LayerKind::lrelu:
        return (x.array() > 0.0).cast<double>().matrix() * (1.0 - spec_.slope) +
               Matrix::Constant(x.rows(), x.cols(), spec_.slope);
      case LayerKind::relu: return (x.array() > 0.0).cast<double>().matrix();
      default: return (1.0 - output_.data().array().square()).matrix();
    }
  }

  Tensor input_, output_;
};

class SoftmaxLayer : public Layer {
 public:
  using Layer::Layer;

  Tensor forward(const Tensor& x, Mode) override {
    has_forward_ = true;
    Matrix y = x.data().rowwise() - x.data().colwise().maxCoeff();
    y = y.array().exp().matrix();
    y = y.array().rowwise() / y.colwise().sum().array();
    output_ = Tensor(x.batch(), x.channels(), x.time(), std::move(y));
    return output_;
  }

  Tensor backward(const Tensor& g) override {
    require_forward("softmax");
    const Matrix& y = output_.data();
    const Eigen::RowVectorXd dot = g.data().cwiseProduct(y).colwise().sum();
    Matrix dx = y.cwiseProduct(g.data().rowwise() - dot);
    return {g.batch(), g.channels(), g.time(), std::move(dx)};
  }

 private:
  Tensor output_;
};

// ---------------------------------------------------------------------------
// Non-trainable DFT layer: y = scale * log(eps + (F_R x)^2 + (F_I x)^2).

struct DftBasis {
  Matrix cos_basis, sin_basis;
};

const DftBasis& dft_basis(Index n) {
  static std::mutex mu;
  static std::map<Index, DftBasis> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  DftBasis b{Matrix(n, n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    for (Index t = 0; t < n; ++t) {
      const Index phase = (k * t) % n;
      const double w = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(n);
      b.cos_basis(k, t) = std::cos(w);
      b.sin_basis(k, t) = -std::sin(w);
    }
  }
  return cache.emplace(n, std::move(b)).first->second;
}

class FftMagnitudeLayer : public Layer {
 public:
  explicit FftMagnitudeLayer(const LayerSpec& s) : Layer(s), basis_(dft_basis(s.length)) {}

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, 1);
    if (x.time() != spec_.length) {
      throw ContractError("fft_magnitude expects length " + std::to_string(spec_.length) + ", got " + x.shape());
    }
    has_forward_ = true;
    const Eigen::Map<const Matrix> xs(x.data().data(), spec_.length, x.batch());
    re_.noalias() = basis_.cos_basis * xs;
    im_.noalias() = basis_.sin_basis * xs;
    power_ = re_.array().square() + im_.array().square();
    Matrix y = spec_.scale * (power_.array() + spec_.epsilon).log();
    return Tensor(x.batch(), spec_.length, 1, std::move(y)).reshaped(1, spec_.length);
  }

  Tensor backward(const Tensor& g) override {
    require_forward("fft_magnitude");
    const Index batch = re_.cols();
    const Eigen::Map<const Matrix> gs(g.data().data(), spec_.length, batch);
    const Matrix dpower = (gs.array() * spec_.scale / (power_.array() + spec_.epsilon)).matrix();
    Matrix dx = basis_.cos_basis.transpose() * (2.0 * re_.cwiseProduct(dpower));
    dx.noalias() += basis_.sin_basis.transpose() * (2.0 * im_.cwiseProduct(dpower));
    return Tensor(batch, spec_.length, 1, std::move(dx)).reshaped(1, spec_.length);
  }

 private:
  const DftBasis& basis_;
  Matrix re_, im_, power_;
};

class StandardizeLayer : public Layer {
 public:
  explicit StandardizeLayer(const LayerSpec& s) : Layer(s) {
    add_parameter("mean", s.in_channels, 1, false);
    add_parameter("std", s.in_channels, 1, false).value.setOnes();
  }

  Tensor forward(const Tensor& x, Mode) override {
    check_channels(x, spec_.in_channels);
    has_forward_ = true;
    Matrix y = (x.data().colwise() - params_[0].value.col(0)).array().colwise() / params_[1].value.col(0).array();
    return {x.batch(), x.channels(), x.time(), std::move(y)};
  }

  Tensor backward(const Tensor& g) override {
    require_forward("standardize");
    Matrix dx = g.data().array().colwise() / params_[1].value.col(0).array();
    return {g.batch(), g.channels(), g.time(), std::move(dx)};
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// LstmLayer

struct LstmLayer::Cache {
  Tensor input;
  LstmCore core;
};

LstmLayer::LstmLayer(const LayerSpec& s) : Layer(s), cache_(std::make_shared<Cache>()) {
  add_parameter("kernel", 4 * s.out_channels, s.in_channels);
  add_parameter("recurrent", 4 * s.out_channels, s.out_channels);
  add_parameter("bias", 4 * s.out_channels, 1);
}

Tensor LstmLayer::forward(const Tensor& x, Mode) {
  check_channels(x, spec_.in_channels);
  has_forward_ = true;
  cache_->input = x;
  Matrix out = cache_->core.forward(x.data(), x.batch(), x.time(), params_[0].value, params_[1].value,
                                    params_[2].value, false);
  return {x.batch(), spec_.out_channels, x.time(), std::move(out)};
}

Tensor LstmLayer::backward(const Tensor& g) {
  require_forward("lstm");
  const Tensor& x = cache_->input;
  Matrix dx = cache_->core.backward(g.data(), x.data(), x.batch(), x.time(), params_[0].value, params_[1].value,
                                    params_[0].grad, params_[1].grad, params_[2].grad, false);
  return {x.batch(), spec_.in_channels, x.time(), std::move(dx)};
}

void LstmLayer::initialize(std::mt19937_64& rng) {
  init_lstm(params_[0].value, params_[1].value, params_[2].value, rng);
}

LstmLayer::State LstmLayer::initial_state(Index batch) const {
  return {Matrix::Zero(spec_.out_channels, batch), Matrix::Zero(spec_.out_channels, batch)};
}

const Matrix& LstmLayer::step(const Eigen::Ref<const Matrix>& x, State& state) const {
  if (x.rows() != spec_.in_channels) {
    throw ContractError("lstm step expects " + std::to_string(spec_.in_channels) + " input rows, got " +
                        std::to_string(x.rows()));
  }
  const Index H = spec_.out_channels;
  Matrix a = params_[0].value * x + params_[1].value * state.h;
  a.colwise() += params_[2].value.col(0);
  LstmCore::Step s;
  LstmCore::cell(a, H, state.c, s);
  state.c = s.f.cwiseProduct(state.c) + s.i.cwiseProduct(s.g);
  state.h = s.o.cwiseProduct(s.tanh_c);
  return state.h;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::dense: return std::make_unique<DenseLayer>(spec);
    case LayerKind::conv1d: return std::make_unique<Conv1dLayer>(spec);
    case LayerKind::gru: return std::make_unique<GruLayer>(spec);
    case LayerKind::lstm: return std::make_unique<LstmLayer>(spec);
    case LayerKind::blstm: return std::make_unique<BlstmLayer>(spec);
    case LayerKind::batch_norm: return std::make_unique<BatchNormLayer>(spec);
    case LayerKind::lrelu:
    case LayerKind::relu:
    case LayerKind::tanh: return std::make_unique<PointwiseLayer>(spec);
    case LayerKind::softmax: return std::make_unique<SoftmaxLayer>(spec);
    case LayerKind::fft_magnitude: return std::make_unique<FftMagnitudeLayer>(spec);
    case LayerKind::standardize: return std::make_unique<StandardizeLayer>(spec);
  }
  throw ContractError("make_layer: unknown layer kind");
}

Layer& LayerStack::add(const LayerSpec& spec) {
  layers_.push_back(make_layer(spec));
  return *layers_.back();
}

std::vector<LayerSpec> LayerStack::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

std::vector<Parameter*> LayerStack::trainable_parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (auto& p : l->parameters())
      if (p.trainable) out.push_back(&p);
  return out;
}

std::vector<Parameter*> LayerStack::all_parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (auto& p : l->parameters()) out.push_back(&p);
  return out;
}

Index LayerStack::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers_)
    for (const auto& p : l->parameters())
      if (p.trainable) n += p.value.size();
  return n;
}

void LayerStack::zero_grad() {
  for (auto& l : layers_) l->zero_grad();
}

void LayerStack::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) l->initialize(rng);
}

std::uint64_t LayerStack::kink_signature() const {
  std::uint64_t h = 0;
  for (const auto& l : layers_) h = h * 1000003ULL + l->kink_signature();
  return h;
}

void LayerStack::reset_statistics() {
  for (auto& l : layers_) l->reset_statistics();
}

void LayerStack::round_to_float32() {
  for (auto* p : all_parameters()) p->value = p->value.cast<float>().cast<double>();
}

}  // namespace mfccvoc::nn
