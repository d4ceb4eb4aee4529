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

#include "mfccvoc/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mfccvoc/nn/losses.hpp"
#include "mfccvoc/nn/models.hpp"

namespace mfccvoc::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double compare_gradient(const std::function<double()>& loss, Matrix& value, const Matrix& analytic,
                        const GradCheckOptions& opts, std::mt19937_64& rng, Index& checked,
                        const std::function<std::uint64_t()>& signature, Index* skipped) {
  std::uint64_t base = 0;
  if (signature) {
    loss();
    base = signature();
  }
  const Index n = value.size();
  std::vector<Index> entries;
  if (n <= opts.max_entries) {
    for (Index i = 0; i < n; ++i) entries.push_back(i);
  } else {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (Index i = 0; i < opts.max_entries; ++i) entries.push_back(pick(rng));
  }
  double worst = 0.0;
  for (Index e : entries) {
    double& v = value.data()[e];
    const double saved = v;
    v = saved + opts.step;
    const double up = loss();
    const bool kink_up = signature && signature() != base;
    v = saved - opts.step;
    const double down = loss();
    const bool kink_down = signature && signature() != base;
    v = saved;
    if (kink_up || kink_down) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * opts.step);
    worst = std::max(worst, relative_error(analytic.data()[e], numeric, opts.floor));
    ++checked;
  }
  return worst;
}

namespace {

Matrix random_normal(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Tensor random_tensor(Index b, Index c, Index t, std::mt19937_64& rng, double scale = 1.0) {
  return {b, c, t, random_normal(c, b * t, rng, scale)};
}

// Checks the analytic gradients stored in every trainable parameter of
// `params` plus optional input tensors against loss().
GradCheckResult check_all(const std::string& name, const std::function<double()>& loss,
                          const std::vector<Parameter*>& params, std::vector<std::pair<Matrix*, Matrix>> inputs,
                          const GradCheckOptions& opts, std::mt19937_64& rng,
                          const std::function<std::uint64_t()>& signature = {}) {
  GradCheckResult r{name, 0.0, 0, 0, false};
  auto run = [&](Matrix& value, const Matrix& analytic) {
    const double e = compare_gradient(loss, value, analytic, opts, rng, r.checked, signature, &r.skipped);
    r.max_rel_error = std::max(r.max_rel_error, e);
  };
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    const Matrix analytic = p->grad;
    run(p->value, analytic);
  }
  for (auto& [value, analytic] : inputs) run(*value, analytic);
  r.passed = r.max_rel_error < opts.tolerance && r.skipped * 10 <= r.checked + r.skipped;
  return r;
}

std::vector<Parameter*> param_ptrs(Layer& layer) {
  std::vector<Parameter*> out;
  for (auto& p : layer.parameters()) out.push_back(&p);
  return out;
}

}  // namespace

GradCheckResult check_layer(const std::string& name, const LayerSpec& spec, Index batch, Index time, Mode mode,
                            const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  auto layer = make_layer(spec);
  layer->initialize(rng);
  for (auto& p : layer->parameters()) {
    // Random affine/statistics values so eval-mode and standardize paths are
    // not the identity.
    if (p.name == "running_var" || p.name == "std") {
      p.value = (random_normal(p.value.rows(), p.value.cols(), rng).array().abs() + 0.5).matrix();
    } else if (p.name == "gamma" || p.name == "beta" || p.name == "running_mean" || p.name == "mean") {
      p.value = random_normal(p.value.rows(), p.value.cols(), rng, 0.5);
    }
  }
  const Index in_channels = spec.kind == LayerKind::fft_magnitude ? 1 : spec.in_channels;
  const Index channels = in_channels > 0 ? in_channels : 3;
  Tensor x = random_tensor(batch, channels, time, rng);
  const Tensor y0 = layer->forward(x, mode);
  const Matrix w = random_normal(y0.channels(), y0.data().cols(), rng);

  layer->zero_grad();
  const Tensor dx = layer->backward(Tensor(y0.batch(), y0.channels(), y0.time(), w));
  auto loss = [&] { return layer->forward(x, mode).data().cwiseProduct(w).sum(); };
  return check_all(name, loss, param_ptrs(*layer), {{&x.data(), dx.data()}}, opts, rng,
                   [&] { return layer->kink_signature(); });
}

namespace {

struct GanFixture {
  GanPair pair;
  Tensor x, smooth, noise;
  Index count;
  // Real-branch peek activations held constant, as in training.
  Matrix real_peek_target;

  explicit GanFixture(std::uint64_t seed)
      : pair(GeneratorConfig{3, 15, 3, 400, true, false}, DiscriminatorConfig{{4, 5, 6, 3, 1}, {7, 7, 7, 5, 3},
                                                                             {3, 3, 3, 2, 2}, 2, 400}),
        count(2) {
    pair.initialize(seed);
    std::mt19937_64 rng(seed + 1);
    x = random_tensor(count, 1, 400, rng, 0.3);
    smooth = random_tensor(count, 1, 400, rng, 0.3);
    noise = random_tensor(count, 1, 400, rng);
  }

  // Generator objective with the discriminator fixed; fills G gradients
  // when `backprop` is set.
  double generator_loss(double w_adv, double w_peek, bool backprop) {
    Generator& g = pair.generator;
    Discriminator& d = pair.discriminator;
    const Tensor fake = g.forward(noise, smooth, Mode::train);
    const Vector scores = d.forward(concat_batch(x, fake), Mode::train_frozen);
    const GeneratorLoss lg = loss_g_adv(scores.tail(count));
    const Tensor fake_peek = slice_batch(d.peek(), count, count);
    if (backprop) real_peek_target = slice_batch(d.peek(), 0, count).data();
    const PeekLoss lp = loss_g_peek(real_peek_target, fake_peek.data());
    if (backprop) {
      Vector ds = Vector::Zero(2 * count);
      ds.tail(count) = w_adv * lg.d_fake;
      Tensor dp(2 * count, d.peek().channels(), d.peek().time());
      dp.data().rightCols(fake_peek.data().cols()) = w_peek * lp.d_fake;
      const Tensor dx = d.backward(ds, &dp);
      g.stack().zero_grad();
      g.backward(slice_batch(dx, count, count));
    }
    return w_adv * lg.value + w_peek * lp.value;
  }

  // Discriminator objective on the shared real + generated batch; with
  // `through_generator` the gradient is taken with respect to G instead.
  std::uint64_t signature() const {
    return pair.generator.stack().kink_signature() * 31 + pair.discriminator.stack().kink_signature();
  }

  double discriminator_loss(bool backprop, bool through_generator) {
    Generator& g = pair.generator;
    Discriminator& d = pair.discriminator;
    const Tensor fake = g.forward(noise, smooth, Mode::train);
    const Vector scores = d.forward(concat_batch(x, fake), Mode::train);
    const DiscriminatorLoss ld = loss_d(scores.head(count), scores.tail(count));
    if (backprop) {
      Vector ds(2 * count);
      ds << ld.d_real, ld.d_fake;
      d.stack().zero_grad();
      const Tensor dx = d.backward(ds, nullptr);
      if (through_generator) {
        g.stack().zero_grad();
        g.backward(slice_batch(dx, count, count));
      }
    }
    return ld.value;
  }
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts) {
  std::vector<GradCheckResult> out;
  const Mode train = Mode::train;
  out.push_back(check_layer("dense", LayerSpec::dense(5, 4), 2, 3, train, opts));
  out.push_back(check_layer("conv1d same stride 1", LayerSpec::conv1d(3, 4, 5), 2, 11, train, opts));
  out.push_back(check_layer("conv1d same stride 3", LayerSpec::conv1d(3, 4, 7, 3), 2, 20, train, opts));
  out.push_back(check_layer("conv1d same stride 2", LayerSpec::conv1d(2, 3, 3, 2), 2, 9, train, opts));
  out.push_back(check_layer("conv1d valid", LayerSpec::conv1d(3, 2, 4, 1, Padding::valid), 2, 10, train, opts));
  out.push_back(check_layer("gru tanh", LayerSpec::gru(3, 4), 2, 6, train, opts));
  out.push_back(check_layer("gru relu last step", LayerSpec::gru(3, 4, Activation::relu, false), 2, 6, train, opts));
  out.push_back(check_layer("lstm", LayerSpec::lstm(3, 4), 2, 6, train, opts));
  out.push_back(check_layer("blstm", LayerSpec::blstm(3, 4), 2, 6, train, opts));
  out.push_back(check_layer("batch_norm train", LayerSpec::batch_norm(3), 3, 5, train, opts));
  out.push_back(check_layer("batch_norm train_frozen", LayerSpec::batch_norm(3), 3, 5, Mode::train_frozen, opts));
  out.push_back(check_layer("batch_norm eval", LayerSpec::batch_norm(3), 3, 5, Mode::eval, opts));
  out.push_back(check_layer("lrelu", LayerSpec::lrelu(), 2, 7, train, opts));
  out.push_back(check_layer("relu", LayerSpec::relu(), 2, 7, train, opts));
  out.push_back(check_layer("tanh", LayerSpec::tanh(), 2, 7, train, opts));
  out.push_back(check_layer("softmax", LayerSpec::softmax(), 2, 7, train, opts));
  out.push_back(check_layer("fft_magnitude", LayerSpec::fft_magnitude(400), 2, 400, train, opts));
  out.push_back(check_layer("standardize", LayerSpec::standardize(4), 2, 5, train, opts));

  {
    GanFixture f(opts.seed);
    std::mt19937_64 rng(opts.seed + 11);
    auto g_params = f.pair.generator.stack().trainable_parameters();
    auto sig = [&f] { return f.signature(); };
    f.generator_loss(1.0, 0.0, true);
    out.push_back(check_all("generator loss_g_adv", [&] { return f.generator_loss(1.0, 0.0, false); }, g_params, {},
                            opts, rng, sig));
    f.generator_loss(0.0, 1.0, true);
    out.push_back(check_all("generator loss_g_peek", [&] { return f.generator_loss(0.0, 1.0, false); }, g_params,
                            {}, opts, rng, sig));
    f.generator_loss(1.0, 1.0, true);
    out.push_back(check_all("generator loss_g_adv + loss_g_peek", [&] { return f.generator_loss(1.0, 1.0, false); },
                            g_params, {}, opts, rng, sig));
    f.discriminator_loss(true, true);
    out.push_back(check_all("generator loss_d", [&] { return f.discriminator_loss(false, true); }, g_params, {}, opts,
                            rng, sig));
    auto d_params = f.pair.discriminator.stack().trainable_parameters();
    f.discriminator_loss(true, false);
    out.push_back(check_all("discriminator loss_d", [&] { return f.discriminator_loss(false, false); }, d_params, {},
                            opts, rng, sig));
  }

  {
    PulseModelConfig cfg{5, 6, 4, 32, 3, 2, 5};
    PulseModel model(cfg);
    model.stack().initialize(opts.seed);
    std::mt19937_64 rng(opts.seed + 5);
    Tensor ctx = random_tensor(3, cfg.cond_dim, cfg.context, rng);
    const Matrix target = random_normal(1, 3 * cfg.pulse_length, rng);
    auto loss = [&] { return mse_loss(model.forward(ctx, Mode::train).data(), target).value; };
    model.stack().zero_grad();
    const RegressionLoss l = mse_loss(model.forward(ctx, Mode::train).data(), target);
    const Tensor dctx = model.backward(Tensor(3, 1, cfg.pulse_length, l.d_output));
    out.push_back(check_all("pulse model mse", loss, model.stack().trainable_parameters(),
                            {{&ctx.data(), dctx.data()}}, opts, rng, [&] { return model.stack().kink_signature(); }));
  }
  return out;
}

}  // namespace mfccvoc::nn
