// stressrep/synth.cc

// Copyright 2026 The Stressrep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stressrep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stressrep/eval.hpp"

namespace stressrep {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string speaker_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%03d", index);
  return buf;
}

}  // namespace

SpeakerProfile gen_speaker_profile(std::uint64_t seed, int index) {
  Rng rng(derive_seed(seed, "profile", static_cast<std::uint64_t>(index)));
  SpeakerProfile p;
  p.speaker_id = speaker_name(index);
  p.gender = index % 2 == 0 ? "f" : "m";
  p.base_f0 = rng.uniform(90.0, 220.0);
  p.tilt = rng.uniform(0.55, 0.85);
  p.syllable_rate = rng.uniform(3.0, 6.0);
  p.base_jitter = rng.uniform(0.003, 0.02);
  return p;
}

Waveform gen_utterance(const SpeakerProfile& profile, bool load,
                       double duration_s, Rng& rng, const LoadEffect& effect,
                       const SynthConfig& cfg) {
  if (duration_s < 0.5 || duration_s > 15.0)
    throw DataError("gen_utterance: duration must be in [0.5, 15] s");
  if (effect.f0_gain <= 0.0 || effect.rate_gain <= 0.0)
    throw ConfigError("gen_utterance: load gains must be positive");

  const int sr = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sr));
  const double f0 = profile.base_f0 * (load ? effect.f0_gain : 1.0);
  const double jitter =
      std::max(0.0, profile.base_jitter + (load ? effect.jitter_add : 0.0));
  const double am_rate = profile.syllable_rate * (load ? effect.rate_gain : 1.0);
  const double noise_amp =
      std::pow(10.0, (cfg.noise_db + (load ? effect.noise_gain_db : 0.0)) / 20.0);

  // Keep every harmonic below 7.4 kHz for the largest instantaneous F0.
  const double f0_ceiling = f0 * (1.0 + cfg.drift_depth + 3.0 * jitter);
  const int harmonics =
      std::max(1, static_cast<int>(std::floor(7400.0 / f0_ceiling)));
  std::vector<double> amp(harmonics);
  for (int k = 0; k < harmonics; ++k) amp[k] = std::pow(profile.tilt, k);

  const double phase0 = rng.uniform(0.0, kTwoPi);
  const double drift_phase = rng.uniform(0.0, kTwoPi);
  const double am_phase = rng.uniform(0.0, kTwoPi);

  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);

  double phase = phase0;
  auto cycle_f0 = [&](double t) {
    const double drift =
        1.0 + cfg.drift_depth * std::sin(kTwoPi * cfg.drift_rate_hz * t + drift_phase);
    const double perturb = 1.0 + jitter * std::clamp(rng.gaussian(), -2.5, 2.5);
    return std::clamp(f0 * drift * perturb, 40.0, 7400.0 / harmonics);
  };
  double f_inst = cycle_f0(0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double source = 0.0;
    for (int k = 0; k < harmonics; ++k)
      source += amp[k] * std::sin((k + 1) * phase);
    const double am = 0.5 + 0.5 * std::sin(kTwoPi * am_rate * t + am_phase);
    const double envelope = 0.35 + 0.65 * am * am;
    double v = envelope * source + noise_amp * rng.gaussian();
    w.samples[i] = v;
    peak = std::max(peak, std::abs(v));

    phase += kTwoPi * f_inst / sr;
    if (phase >= kTwoPi) {
      phase -= kTwoPi;
      f_inst = cycle_f0(t);  // one period perturbation per glottal cycle
    }
  }
  if (peak > 0.0) {
    const double scale = cfg.peak / peak;
    for (auto& v : w.samples) v *= scale;
  }
  return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0 || w.samples.empty())
    throw DataError("write_wav_pcm16: empty waveform");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_len = n * 2;
  std::string out;
  out.reserve(44 + data_len);
  auto u32 = [&](std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
  };
  auto u16 = [&](std::uint16_t v) {
    out.append(reinterpret_cast<const char*>(&v), 2);
  };
  out.append("RIFF");
  u32(36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  u32(16);
  u16(1);  // PCM
  u16(1);  // mono
  u32(static_cast<std::uint32_t>(w.sample_rate));
  u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  u16(2);
  u16(16);
  out.append("data");
  u32(data_len);
  for (double v : w.samples) {
    const double c = std::clamp(std::lround(v * 32768.0), -32768l, 32767l);
    u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
  }
  atomic_write_file(path, out);
}

std::string gen_corpus(const CorpusSpec& spec, const std::string& out_dir) {
  if (spec.n_speakers < 4)
    throw DataError("gen_corpus: need at least 4 speakers");
  if (spec.utts_per_condition < 1)
    throw DataError("gen_corpus: need at least 1 utterance per condition");
  make_dirs(join_path(out_dir, "wav"));

  Manifest manifest;
  manifest.base_dir = out_dir;

  struct Job {
    SpeakerProfile profile;
    bool load;
    int utt;
    std::uint64_t seed;
    std::string id, rel_path;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < spec.n_speakers; ++i) {
    const SpeakerProfile profile = gen_speaker_profile(spec.seed, i);
    for (int cond = 0; cond < 2; ++cond) {
      for (int u = 0; u < spec.utts_per_condition; ++u) {
        Job j;
        j.profile = profile;
        j.load = cond == 1;
        j.utt = u;
        j.seed = derive_seed(spec.seed, "utt", static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(cond) * 100000 + u);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%s_%02d", profile.speaker_id.c_str(),
                      j.load ? "load" : "no_load", u);
        j.id = buf;
        j.rel_path = std::string("wav/") + buf + ".wav";
        jobs.push_back(std::move(j));
      }
    }
  }

  parallel_for(jobs.size(), [&](std::size_t k) {
    const Job& j = jobs[k];
    Rng rng(j.seed);
    const double dur = rng.uniform(spec.synth.duration_min, spec.synth.duration_max);
    Waveform w =
        gen_utterance(j.profile, j.load, dur, rng, spec.effect, spec.synth);
    write_wav_pcm16(join_path(out_dir, j.rel_path), w);
  });

  for (const Job& j : jobs)
    manifest.records.push_back({j.id, j.rel_path, j.profile.speaker_id,
                                j.profile.gender,
                                j.load ? kLabelLoad : kLabelNoLoad});
  const std::string manifest_path = join_path(out_dir, "manifest.csv");
  write_manifest(manifest_path, manifest);
  return manifest_path;
}

}  // namespace stressrep
