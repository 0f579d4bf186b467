// stressrep/synth.hpp

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

#ifndef STRESSREP_SYNTH_HPP_
#define STRESSREP_SYNTH_HPP_

#include <string>

#include "stressrep/audio.hpp"
#include "stressrep/common.hpp"

namespace stressrep {

// Voice of one synthetic speaker: harmonic source with per-speaker pitch,
// spectral tilt, syllable rate and baseline cycle jitter.
struct SpeakerProfile {
  std::string speaker_id;
  std::string gender;       // alternating "f"/"m" by index
  double base_f0 = 0.0;     // ~ U(90, 220) Hz
  double tilt = 0.0;        // harmonic decay factor, a_k = tilt^(k-1)
  double syllable_rate = 0.0;  // amplitude-modulation rate, Hz
  double base_jitter = 0.0;    // cycle-period perturbation fraction
};

// Multiplicative/additive shifts applied to utterances of the "load" class:
// exactly the quantities the handcrafted features measure.
struct LoadEffect {
  double f0_gain = 1.15;
  double jitter_add = 0.02;
  double rate_gain = 1.2;
  double noise_gain_db = 6.0;
};

struct SynthConfig {
  int sample_rate = 16000;
  double duration_min = 1.0;  // desk scale; protocol recordings run longer
  double duration_max = 3.0;
  double noise_db = -32.0;    // noise floor relative to full scale
  double drift_depth = 0.02;  // slow F0 drift, +/- fraction
  double drift_rate_hz = 0.6;
  double peak = 0.85;         // normalization target, keeps peaks under 0.95
};

SpeakerProfile gen_speaker_profile(std::uint64_t seed, int index);

Waveform gen_utterance(const SpeakerProfile& profile, bool load,
                       double duration_s, Rng& rng,
                       const LoadEffect& effect = {},
                       const SynthConfig& cfg = {});

// 16-bit PCM mono writer (the corpus generator owns all WAV writing).
void write_wav_pcm16(const std::string& path, const Waveform& w);

struct CorpusSpec {
  int n_speakers = 20;
  int utts_per_condition = 10;
  std::uint64_t seed = 0;
  LoadEffect effect{};
  SynthConfig synth{};
};

// Writes out_dir/wav/*.wav plus out_dir/manifest.csv (paths relative to the
// manifest, so the directory contents are a pure function of the spec).
// Returns the manifest path.
std::string gen_corpus(const CorpusSpec& spec, const std::string& out_dir);

}  // namespace stressrep

#endif  // STRESSREP_SYNTH_HPP_
