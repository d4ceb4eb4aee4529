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

#include "mfccvoc/pipeline.hpp"

#include <cmath>
#include <complex>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include <unsupported/Eigen/FFT>

#include "mfccvoc/binary_io.hpp"
#include "mfccvoc/formats.hpp"
#include "mfccvoc/nn/gradcheck.hpp"
#include "mfccvoc/wav.hpp"

namespace mfccvoc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// Runs body(0..n-1) on a small worker pool. Each index writes its own slot,
// so results do not depend on scheduling. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_sample_rate(const dsp::Waveform& x, const PipelineConfig& cfg, const std::string& what) {
  if (x.sample_rate != cfg.sample_rate) {
    throw ParameterError(what + ": sample rate " + std::to_string(x.sample_rate) + " Hz, configuration expects " +
                         std::to_string(cfg.sample_rate) + " Hz");
  }
}

}  // namespace

Analysis analyze_waveform(const dsp::Waveform& x, const PipelineConfig& cfg) {
  cfg.validate();
  const cepstral::CepstralAnalyzer analyzer(cfg.cepstral, cfg.frames, x.sample_rate);
  const dsp::Waveform pre = dsp::preemphasize(x, cfg.frames.preemphasis);
  Analysis out;
  out.mfcc = analyzer.analyze(dsp::stft_magnitude(pre, cfg.frames));
  out.mfcc.sample_rate = x.sample_rate;
  out.track = pitch::track_pitch(x, cfg.frames, cfg.tracker);
  return out;
}

EnvelopeFit envelope_from_mfcc(const cepstral::MfccSequence& mfcc, const PipelineConfig& cfg) {
  if (mfcc.n_coef() != cfg.cepstral.n_coef) {
    throw ContractError("MFCC data has " + std::to_string(mfcc.n_coef()) + " coefficients, configuration expects " +
                        std::to_string(cfg.cepstral.n_coef));
  }
  const cepstral::CepstralAnalyzer analyzer(cfg.cepstral, cfg.frames, mfcc.sample_rate);
  cepstral::MfccSequence c = mfcc;
  c.config = cfg.frames;
  const cepstral::Reconstruction rec = analyzer.reconstruct(c);
  EnvelopeFit out;
  out.envelope = envelope::fit_envelope(rec.spectrum, cfg.ar_order);
  out.floored_bins = rec.floored_bins;
  out.floored_frames = rec.floored_frames;
  return out;
}

ExcitationModels load_excitation_models(const PipelineConfig& cfg) {
  ExcitationModels m;
  if (cfg.excitation == ExcitationMode::impulse) return m;
  if (cfg.pulse_model_path.empty()) {
    throw ParameterError("excitation mode " + to_string(cfg.excitation) + " needs excitation.pulse_model weights");
  }
  m.pulse_model = nn::PulseModel::load(cfg.pulse_model_path);
  if (m.pulse_model->config().cond_dim != excitation::kCondDim) {
    throw LoadError(cfg.pulse_model_path + ": pulse model expects " +
                    std::to_string(m.pulse_model->config().cond_dim) + " conditioning values, pipeline provides " +
                    std::to_string(excitation::kCondDim));
  }
  if (cfg.excitation == ExcitationMode::gan) {
    if (cfg.gan_weights_path.empty()) throw ParameterError("excitation mode gan needs excitation.gan_weights");
    m.gan = nn::GanPair::load(cfg.gan_weights_path);
    if (m.gan->generator.config().pulse_length != m.pulse_model->config().pulse_length) {
      throw LoadError(cfg.gan_weights_path + ": generator pulse length differs from the pulse model");
    }
  }
  return m;
}

Index synthesis_length(Index frames, const dsp::FrameConfig& cfg) {
  return frames > 0 ? (frames - 1) * cfg.hop_length + cfg.frame_length : 0;
}

dsp::Waveform make_excitation(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track,
                              const PipelineConfig& cfg, ExcitationModels& models, std::uint64_t seed) {
  const Index length = synthesis_length(track.frames(), cfg.frames);
  if (cfg.excitation == ExcitationMode::impulse) return excitation::impulse_excitation(track, cfg.frames, length, seed);
  if (!models.pulse_model) throw ContractError("pulse model not loaded");
  const MatrixXd cond = excitation::frame_conditioning(mfcc, track);
  nn::Generator* g = nullptr;
  if (cfg.excitation == ExcitationMode::gan) {
    if (!models.gan) throw ContractError("GAN weights not loaded");
    g = &models.gan->generator;
  }
  return excitation::neural_excitation(track, cfg.frames, cond, length, *models.pulse_model, g, seed);
}

dsp::Waveform synthesize(const cepstral::MfccSequence& mfcc, const pitch::PitchTrack& track,
                         const PipelineConfig& cfg, ExcitationModels& models, std::uint64_t seed) {
  cfg.validate();
  if (mfcc.frames() != track.frames()) {
    throw ContractError("frame count mismatch: " + std::to_string(mfcc.frames()) + " MFCC frames vs " +
                        std::to_string(track.frames()) + " F0 frames");
  }
  if (mfcc.config.hop_length != cfg.frames.hop_length || track.hop_length != cfg.frames.hop_length) {
    throw ContractError("hop mismatch: MFCC hop " + std::to_string(mfcc.config.hop_length) + ", F0 hop " +
                        std::to_string(track.hop_length) + ", configuration hop " +
                        std::to_string(cfg.frames.hop_length));
  }
  if (track.sample_rate != mfcc.sample_rate) throw ContractError("MFCC and F0 sample rates differ");
  const EnvelopeFit fit = envelope_from_mfcc(mfcc, cfg);
  const dsp::Waveform e = make_excitation(mfcc, track, cfg, models, seed);
  const dsp::Waveform y = envelope::synthesis_filter(e, fit.envelope, cfg.frames);
  dsp::Waveform out = dsp::deemphasize(y, cfg.frames.preemphasis);
  out.sample_rate = mfcc.sample_rate;
  if (!out.all_finite()) throw InvariantError("synthesis produced non-finite samples");
  return out;
}

dsp::Waveform mfcc_residual(const dsp::Waveform& x, const cepstral::MfccSequence& mfcc, const PipelineConfig& cfg) {
  const EnvelopeFit fit = envelope_from_mfcc(mfcc, cfg);
  const dsp::Waveform pre = dsp::preemphasize(x, cfg.frames.preemphasis);
  return envelope::inverse_filter(pre, fit.envelope, cfg.frames);
}

PulseExtraction pulses_from_waveform(const dsp::Waveform& x, const PipelineConfig& cfg) {
  const Analysis a = analyze_waveform(x, cfg);
  const dsp::Waveform residual = mfcc_residual(x, a.mfcc, cfg);
  const pitch::PitchMarks marks = pitch::place_pitch_marks(a.track, cfg.frames, residual.size(), &residual);
  PulseExtraction out;
  out.marks = marks.size();
  out.extracted = excitation::extract_pulses(residual, marks, a.track, cfg.frames);
  out.conditioning = excitation::frame_conditioning(a.mfcc, a.track);
  out.associated = excitation::associate_frames(out.extracted, a.track, cfg.frames, out.conditioning);
  return out;
}

pitch::PitchTrack predict_f0(const cepstral::MfccSequence& mfcc, nn::F0Net& net, const pitch::F0Quantizer& q) {
  const nn::F0NetOutput out = net.decode(mfcc.coefficients.transpose());
  VectorXd f0(mfcc.frames());
  for (Index t = 0; t < mfcc.frames(); ++t) f0(t) = pitch::dequantize_f0(out.classes[static_cast<std::size_t>(t)], q);
  return pitch::PitchTrack::from_f0(f0, mfcc.config.hop_length, mfcc.sample_rate);
}

MatrixXd lowpass_pulses(const MatrixXd& pulses, int sample_rate, double cutoff_hz) {
  const Index n = pulses.rows();
  Eigen::FFT<double> fft;
  MatrixXd out(n, pulses.cols());
  std::vector<double> time(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> freq;
  for (Index j = 0; j < pulses.cols(); ++j) {
    for (Index i = 0; i < n; ++i) time[static_cast<std::size_t>(i)] = pulses(i, j);
    fft.fwd(freq, time);
    for (Index k = 0; k < n; ++k) {
      const double hz = static_cast<double>(std::min(k, n - k)) * sample_rate / static_cast<double>(n);
      if (hz >= cutoff_hz) freq[static_cast<std::size_t>(k)] = 0.0;
    }
    fft.inv(time, freq);
    for (Index i = 0; i < n; ++i) out(i, j) = time[static_cast<std::size_t>(i)];
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_analyze(const std::string& wav_in, const std::string& mfcc_out, const std::string& f0_out,
                 const PipelineConfig& cfg, std::ostream& log, const std::string& f0_csv_out) {
  const dsp::Waveform x = dsp::read_wav(wav_in);
  check_sample_rate(x, cfg, wav_in);
  const Analysis a = analyze_waveform(x, cfg);
  formats::write_mfcc(mfcc_out, a.mfcc);
  formats::write_f0(f0_out, a.track);
  if (!f0_csv_out.empty()) io::write_file_atomic(f0_csv_out, formats::f0_csv(a.track));
  log << "frames: " << a.mfcc.frames() << ", voiced: " << percent(a.track.voiced_fraction()) << "\n";
}

void cmd_synth(const SynthOptions& opts, const PipelineConfig& cfg, std::ostream& log) {
  const cepstral::MfccSequence mfcc = formats::read_mfcc(opts.mfcc_in);
  if (mfcc.sample_rate != cfg.sample_rate) {
    throw ParameterError(opts.mfcc_in + ": sample rate " + std::to_string(mfcc.sample_rate) +
                         " Hz, configuration expects " + std::to_string(cfg.sample_rate) + " Hz");
  }
  pitch::PitchTrack track;
  if (!opts.f0_in.empty()) {
    track = formats::read_f0(opts.f0_in);
  } else if (!opts.f0_weights.empty()) {
    nn::F0Net net = nn::F0Net::load(opts.f0_weights);
    track = predict_f0(mfcc, net, cfg.quantizer);
  } else {
    throw ParameterError("synth needs an F0 file or F0 network weights");
  }
  ExcitationModels models = load_excitation_models(cfg);
  const std::uint64_t seed = utterance_seed(effective_seed(cfg), utterance_name(opts.mfcc_in));
  const dsp::Waveform y = synthesize(mfcc, track, cfg, models, seed);
  dsp::write_wav(opts.wav_out, y, cfg.wav_format);
  log << "wrote " << y.size() << " samples (" << to_string(cfg.excitation) << " excitation, "
      << percent(track.voiced_fraction()) << " voiced)\n";
}

void cmd_copy_synth(const std::string& wav_in, const std::string& wav_out, const PipelineConfig& cfg,
                    std::ostream& log) {
  const dsp::Waveform x = dsp::read_wav(wav_in);
  check_sample_rate(x, cfg, wav_in);
  const Analysis a = analyze_waveform(x, cfg);
  ExcitationModels models = load_excitation_models(cfg);
  const std::uint64_t seed = utterance_seed(effective_seed(cfg), utterance_name(wav_in));
  const dsp::Waveform y = synthesize(a.mfcc, a.track, cfg, models, seed);
  dsp::write_wav(wav_out, y, cfg.wav_format);
  log << "frames: " << a.mfcc.frames() << ", voiced: " << percent(a.track.voiced_fraction()) << ", wrote "
      << y.size() << " samples\n";
}

void cmd_extract_pulses(const std::string& wav_in, const std::string& dataset_out, const PipelineConfig& cfg,
                        std::ostream& log) {
  const dsp::Waveform x = dsp::read_wav(wav_in);
  check_sample_rate(x, cfg, wav_in);
  const PulseExtraction p = pulses_from_waveform(x, cfg);
  formats::write_pulses(dataset_out, p.associated);
  if (p.associated.size() == 0) log << "warning: no voiced frames, wrote an empty dataset\n";
  log << "marks: " << p.marks << ", pulses: " << p.extracted.size() << " (skipped " << p.extracted.skipped_pulses
      << " longer than " << excitation::kPulseLength << " samples), records: " << p.associated.size()
      << " (dropped frames " << p.associated.dropped_frames << ")\n";
}

namespace {

MatrixXd pulse_matrix(const excitation::PulseDataset& d) {
  const Index len = d.size() > 0 ? d.pulses.front().samples.size() : excitation::kPulseLength;
  MatrixXd out(len, d.size());
  for (Index k = 0; k < d.size(); ++k) out.col(k) = d.pulses[static_cast<std::size_t>(k)].samples;
  return out;
}

}  // namespace

void cmd_train_gan(const std::string& dataset_in, const std::string& weights_out, const PipelineConfig& cfg,
                   std::ostream& log) {
  cfg.validate();
  const excitation::PulseDataset data = formats::read_pulses(dataset_in);
  if (data.size() == 0) throw ParameterError(dataset_in + ": dataset is empty");
  const MatrixXd real = pulse_matrix(data);
  if (real.rows() != cfg.generator.pulse_length) {
    throw ContractError(dataset_in + ": pulses have length " + std::to_string(real.rows()) + ", expected " +
                        std::to_string(cfg.generator.pulse_length));
  }

  MatrixXd smooth;
  if (!cfg.pulse_model_path.empty()) {
    // Records follow frame order, so consecutive records stand in for the
    // frame context of each pulse.
    nn::PulseModel model = nn::PulseModel::load(cfg.pulse_model_path);
    std::vector<MatrixXd> contexts;
    for (Index k = 0; k < data.size(); ++k) {
      contexts.push_back(excitation::context_window(data.conditioning, k, model.config().context));
    }
    smooth = excitation::pulse_model_forward(model, contexts);
    log << "x^ from pulse model " << cfg.pulse_model_path << "\n";
  } else {
    smooth = lowpass_pulses(real, cfg.sample_rate);
    log << "x^ from low-passed real pulses (no pulse model given)\n";
  }

  nn::GanPair pair(cfg.generator, cfg.discriminator);
  const std::uint64_t seed = effective_seed(cfg);
  pair.initialize(seed);
  nn::GanTrainConfig tc = cfg.gan_train;
  tc.seed = seed;
  tc.checkpoint_prefix = weights_out;
  tc.loss_csv = weights_out + ".loss.csv";
  int last_epoch = 0;
  double sum_d = 0, sum_adv = 0, sum_peek = 0;
  Index batches = 0;
  auto report = [&](const nn::LossRecord& r) {
    if (r.epoch != last_epoch) {
      sum_d = sum_adv = sum_peek = 0.0;
      batches = 0;
      last_epoch = r.epoch;
    }
    sum_d += r.loss_d;
    sum_adv += r.loss_g_adv;
    sum_peek += r.loss_g_peek;
    ++batches;
  };
  const nn::GanTrainResult result = nn::train_gan(real, smooth, pair, tc, report);
  pair.save(weights_out);
  if (batches > 0) {
    const double b = static_cast<double>(batches);
    log << "epoch " << last_epoch << ": loss_d " << sum_d / b << ", loss_g_adv " << sum_adv / b << ", loss_g_peek "
        << sum_peek / b << "\n";
  }
  log << "trained on " << data.size() << " pulses, " << result.checkpoints.size() << " checkpoints, final weights "
      << weights_out << "\n";
}

void cmd_train_pulse(const std::vector<std::string>& wavs_in, const std::string& weights_out,
                     const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::vector<PulseExtraction> extracted(wavs_in.size());
  parallel_for(wavs_in.size(), [&](std::size_t i) {
    const dsp::Waveform x = dsp::read_wav(wavs_in[i]);
    check_sample_rate(x, cfg, wavs_in[i]);
    extracted[i] = pulses_from_waveform(x, cfg);
  });
  std::vector<MatrixXd> contexts;
  std::vector<VectorXd> targets;
  for (const auto& p : extracted) {
    for (const auto& pulse : p.associated.pulses) {
      contexts.push_back(excitation::context_window(p.conditioning, pulse.frame_index, cfg.pulse_model.context));
      targets.push_back(pulse.samples);
    }
  }
  if (targets.empty()) throw ParameterError("train-pulse: no voiced frames in the input files");
  MatrixXd target(targets.front().size(), static_cast<Index>(targets.size()));
  for (std::size_t k = 0; k < targets.size(); ++k) target.col(static_cast<Index>(k)) = targets[k];

  nn::PulseModelConfig mc = cfg.pulse_model;
  mc.cond_dim = excitation::kCondDim;
  mc.pulse_length = target.rows();
  nn::PulseModel model(mc);
  const std::uint64_t seed = effective_seed(cfg);
  model.stack().initialize(seed);
  nn::PulseTrainConfig tc = cfg.pulse_train;
  tc.seed = seed;
  const std::vector<double> losses = nn::train_pulse_model(contexts, target, model, tc);
  model.save(weights_out);
  log << "trained on " << target.cols() << " frames";
  if (!losses.empty()) log << ", final epoch loss " << losses.back();
  log << "\n";
}

bool cmd_gradcheck(std::ostream& log) {
  const nn::GradCheckOptions opts;
  bool ok = true;
  for (const auto& r : nn::run_gradcheck_suite(opts)) {
    char line[200];
    std::snprintf(line, sizeof line, "%-36s max rel error %.3e over %td entries (%td at kinks)  %s\n",
                  r.name.c_str(), r.max_rel_error, static_cast<std::ptrdiff_t>(r.checked),
                  static_cast<std::ptrdiff_t>(r.skipped), r.passed ? "ok" : "FAIL");
    log << line;
    ok = ok && r.passed;
  }
  return ok;
}

void cmd_f0_metrics(const std::string& ref_in, const std::string& gen_in, std::ostream& out, int precision) {
  const pitch::PitchTrack ref = formats::read_f0(ref_in);
  const pitch::PitchTrack gen = formats::read_f0(gen_in);
  const pitch::F0Metrics m = pitch::f0_metrics(ref, gen);
  out << "RMSE, VUV error %, corr\n";
  out << (m.rmse_hz ? fixed(*m.rmse_hz, precision) : "undefined") << ", " << fixed(m.vuv_error_pct, precision) << ", "
      << (m.correlation ? fixed(*m.correlation, precision) : "undefined") << "\n";
}

void cmd_f0_quantize(const std::string& f0_in, const std::string& f0_out, const PipelineConfig& cfg,
                     std::ostream& log, const std::string& classes_csv_out) {
  const pitch::PitchTrack in = formats::read_f0(f0_in);
  VectorXd f0(in.frames());
  std::string csv = "frame,class,f0_hz\n";
  double worst = 0.0;
  for (Index t = 0; t < in.frames(); ++t) {
    const int cls = pitch::quantize_f0(in.voiced[static_cast<std::size_t>(t)] ? in.f0_hz(t) : 0.0, cfg.quantizer);
    f0(t) = pitch::dequantize_f0(cls, cfg.quantizer);
    if (cls > 0) worst = std::max(worst, std::abs(f0(t) - in.f0_hz(t)));
    char line[64];
    std::snprintf(line, sizeof line, "%td,%d,%.9g\n", static_cast<std::ptrdiff_t>(t), cls, f0(t));
    csv += line;
  }
  formats::write_f0(f0_out, pitch::PitchTrack::from_f0(f0, in.hop_length, in.sample_rate));
  if (!classes_csv_out.empty()) io::write_file_atomic(classes_csv_out, csv);
  log << "frames: " << in.frames() << ", max quantization error: " << worst << " Hz (half bin "
      << cfg.quantizer.bin_width() / 2.0 << " Hz)\n";
}

void cmd_invert_envelope(const std::string& mfcc_in, const std::string& envelope_out, const PipelineConfig& cfg,
                         std::ostream& log, const std::string& csv_out) {
  const cepstral::MfccSequence mfcc = formats::read_mfcc(mfcc_in);
  const EnvelopeFit fit = envelope_from_mfcc(mfcc, cfg);
  formats::write_envelope(envelope_out, fit.envelope);
  if (!csv_out.empty()) io::write_file_atomic(csv_out, formats::envelope_csv(fit.envelope));
  log << "frames: " << fit.envelope.frames() << ", order: " << fit.envelope.order()
      << ", frames with floored bins: " << fit.floored_frames << "\n";
}

}  // namespace mfccvoc
