// stressrep/audio.hpp

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

#ifndef STRESSREP_AUDIO_HPP_
#define STRESSREP_AUDIO_HPP_

#include <complex>
#include <string>
#include <vector>

#include "stressrep/common.hpp"

namespace stressrep {

// Mono audio, samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Magnitude spectrogram, frames x bins row-major. Frames are fully inside
// the signal: frames = 1 + floor((N - frame_len) / hop). Each frame is
// Hann-windowed and zero-padded to n_fft (next power of two >= frame_len),
// so bins = n_fft / 2 + 1 and the bin spacing is sample_rate / n_fft.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  int frame_len = 0;
  int hop = 0;
  int n_fft = 0;
  int sample_rate = 0;
  std::vector<double> mags;

  double& at(int t, int f) { return mags[static_cast<std::size_t>(t) * bins + f]; }
  double at(int t, int f) const {
    return mags[static_cast<std::size_t>(t) * bins + f];
  }
  double bin_hz() const { return static_cast<double>(sample_rate) / n_fft; }
};

// Natural-log mel energies, frames x mel_bins row-major.
struct LogMelSpectrogram {
  int frames = 0;
  int mel_bins = 0;
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  std::vector<double> values;

  double& at(int t, int m) {
    return values[static_cast<std::size_t>(t) * mel_bins + m];
  }
  double at(int t, int m) const {
    return values[static_cast<std::size_t>(t) * mel_bins + m];
  }
};

struct FrontendConfig {
  int sample_rate = 16000;  // canonical rate; inputs are resampled to this
  int frame_len = 1024;     // 64 ms at 16 kHz
  int hop = 160;            // 10 ms
  int mel_bins = 64;
  double fmin = 60.0;
  double fmax = 7800.0;
  double floor_eps = 1e-10;

  bool operator==(const FrontendConfig&) const = default;
};

// RIFF/WAVE reader. PCM 16-bit or IEEE float 32-bit, 1 or 2 channels;
// stereo is averaged to mono, amplitudes end up in [-1, 1].
// Throws IoError (missing file), FormatError (malformed container) or
// UnsupportedError (valid container, unhandled encoding).
Waveform load_wav(const std::string& path);

// Windowed-sinc (Kaiser) resampling. Same-rate input is returned unchanged,
// bit for bit. Output length is round(N * target_sr / source_sr).
Waveform resample(const Waveform& w, int target_sr);

// In-place radix-2 FFT; a.size() must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false);

Spectrogram stft(const Waveform& w, int frame_len, int hop);

// Triangular filterbank, mel_bins x bins row-major, applied to power spectra.
std::vector<double> mel_filterbank(int mel_bins, int n_fft, int sample_rate,
                                   double fmin, double fmax);
double hz_to_mel(double hz);
double mel_to_hz(double mel);

LogMelSpectrogram logmel(const Spectrogram& s, int mel_bins, double fmin,
                         double fmax, double floor_eps);

// resample to cfg.sample_rate, then stft + logmel with cfg parameters.
LogMelSpectrogram compute_lms(const Waveform& w, const FrontendConfig& cfg);

}  // namespace stressrep

#endif  // STRESSREP_AUDIO_HPP_
