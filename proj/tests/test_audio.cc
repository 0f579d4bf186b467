// tests/test_audio.cc

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

#include <cmath>
#include <complex>

#include "doctest.h"
#include "stressrep/audio.hpp"
#include "stressrep/synth.hpp"
#include "testutil.hpp"

using namespace stressrep;
using testutil::TempDir;
using testutil::WavBytes;

namespace {

// Dominant frequency via a large zero-padded FFT.
double fft_peak_hz(const Waveform& w, int n_fft) {
  std::vector<std::complex<double>> buf(n_fft, 0.0);
  const std::size_t n = std::min<std::size_t>(w.samples.size(), n_fft);
  for (std::size_t i = 0; i < n; ++i) buf[i] = w.samples[i];
  fft_radix2(buf);
  int arg = 1;
  for (int f = 1; f <= n_fft / 2; ++f)
    if (std::abs(buf[f]) > std::abs(buf[arg])) arg = f;
  return static_cast<double>(arg) * w.sample_rate / n_fft;
}

}  // namespace

TEST_CASE("load_wav reads silence written as pcm16") {
  TempDir dir("wav");
  Waveform silence;
  silence.sample_rate = 16000;
  silence.samples.assign(16000, 0.0);
  write_wav_pcm16(dir.file("silence.wav"), silence);

  Waveform w = load_wav(dir.file("silence.wav"));
  CHECK(w.sample_rate == 16000);
  CHECK(w.samples.size() == 16000);
  for (double v : w.samples) CHECK(v == 0.0);
}

TEST_CASE("load_wav scales a full-scale sine to [-1, 1]") {
  TempDir dir("wav");
  write_wav_pcm16(dir.file("sine.wav"), testutil::sine(440.0, 0.5, 16000, 1.0));
  Waveform w = load_wav(dir.file("sine.wav"));
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak >= 0.999);
  CHECK(peak <= 1.0);
}

TEST_CASE("load_wav averages stereo to mono") {
  TempDir dir("wav");
  WavBytes b;
  b.header(1, 2, 8000, 16, 8 * 4);
  for (int i = 0; i < 8; ++i) {
    b.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(16000)));
    b.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(-16000)));
  }
  b.write(dir.file("stereo.wav"));
  Waveform w = load_wav(dir.file("stereo.wav"));
  CHECK(w.samples.size() == 8);
  for (double v : w.samples) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("load_wav reads ieee float32") {
  TempDir dir("wav");
  WavBytes b;
  b.header(3, 1, 16000, 32, 4 * 4);
  b.f32(0.25f).f32(-0.5f).f32(1.5f).f32(0.0f);  // 1.5 clamps to 1.0
  b.write(dir.file("f32.wav"));
  Waveform w = load_wav(dir.file("f32.wav"));
  REQUIRE(w.samples.size() == 4);
  CHECK(w.samples[0] == doctest::Approx(0.25));
  CHECK(w.samples[1] == doctest::Approx(-0.5));
  CHECK(w.samples[2] == doctest::Approx(1.0));
}

TEST_CASE("load_wav error paths are distinct") {
  TempDir dir("wav");
  CHECK_THROWS_AS(load_wav(dir.file("nope.wav")), IoError);

  WavBytes truncated;
  truncated.header(1, 1, 16000, 16, 1000);  // claims 1000 bytes, has 4
  truncated.u16(0).u16(0);
  truncated.write(dir.file("trunc.wav"));
  CHECK_THROWS_AS(load_wav(dir.file("trunc.wav")), FormatError);

  WavBytes notriff;
  notriff.raw("JUNKJUNKJUNKJUNK");
  notriff.write(dir.file("junk.wav"));
  CHECK_THROWS_AS(load_wav(dir.file("junk.wav")), FormatError);

  WavBytes bits24;
  bits24.header(1, 1, 16000, 24, 6).u16(0).u16(0).u16(0);
  bits24.write(dir.file("b24.wav"));
  CHECK_THROWS_AS(load_wav(dir.file("b24.wav")), UnsupportedError);

  WavBytes chans;
  chans.header(1, 4, 16000, 16, 8).u32(0).u32(0);
  chans.write(dir.file("quad.wav"));
  CHECK_THROWS_AS(load_wav(dir.file("quad.wav")), UnsupportedError);
}

TEST_CASE("resample at the source rate is bit-identical") {
  Waveform w = testutil::sine(300.0, 0.3, 16000, 0.7);
  Waveform r = resample(w, 16000);
  CHECK(r.samples == w.samples);
}

TEST_CASE("resample keeps a 1 kHz tone at 1 kHz (fft oracle)") {
  Waveform w = testutil::sine(1000.0, 1.0, 32000, 0.8);
  Waveform r = resample(w, 16000);
  const int n_fft = 8192;
  const double bin = 16000.0 / n_fft;
  CHECK(std::abs(fft_peak_hz(r, n_fft) - 1000.0) <= bin + 1e-9);
}

TEST_CASE("resample length arithmetic") {
  Waveform w = testutil::sine(400.0, 1.0, 8000, 0.5);
  Waveform r = resample(w, 16000);
  CHECK(std::abs(static_cast<long long>(r.samples.size()) - 16000) <= 1);
}

TEST_CASE("resample round trip recovers a band-limited signal") {
  // Content below 0.4x the lower Nyquist (8 kHz path -> 1.6 kHz).
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    w.samples[i] = 0.4 * std::sin(2 * M_PI * 400.0 * t) +
                   0.3 * std::sin(2 * M_PI * 1100.0 * t + 0.7) +
                   0.2 * std::sin(2 * M_PI * 1500.0 * t + 1.9);
  }
  Waveform down = resample(w, 8000);
  Waveform back = resample(down, 16000);
  REQUIRE(back.samples.size() >= w.samples.size() - 1);
  const std::size_t guard = 512;
  double err = 0.0;
  for (std::size_t i = guard; i + guard < w.samples.size() &&
                              i < back.samples.size();
       ++i)
    err = std::max(err, std::abs(back.samples[i] - w.samples[i]));
  CHECK(err <= 1e-2);
}

TEST_CASE("stft of zeros is all-zero and frame math holds") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(1024, 0.0);
  Spectrogram s = stft(w, 400, 160);
  CHECK(s.frames == 4);  // 1 + (1024-400)/160
  for (double m : s.mags) CHECK(m == 0.0);
}

TEST_CASE("stft frame count formula holds on random sizes") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int frame = 2 + static_cast<int>(rng.index(500));
    const int hop = 1 + static_cast<int>(rng.index(300));
    const int n = frame + static_cast<int>(rng.index(5000));
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(n, 0.1);
    Spectrogram s = stft(w, frame, hop);
    CHECK(s.frames == 1 + (n - frame) / hop);
  }
}

TEST_CASE("stft pure tone hits the analytic bin per frame") {
  const double f0 = 860.0;
  Waveform w = testutil::sine(f0, 0.3, 16000, 0.9);
  Spectrogram s = stft(w, 1024, 160);  // power-of-two frame: n_fft == frame_len
  REQUIRE(s.n_fft == 1024);
  const int expect = static_cast<int>(std::lround(f0 * 1024 / 16000.0));
  for (int t = 0; t < s.frames; ++t) {
    int arg = 0;
    double total = 0.0, near = 0.0;
    for (int f = 0; f < s.bins; ++f) {
      const double p = s.at(t, f) * s.at(t, f);
      total += p;
      if (std::abs(f - expect) <= 2) near += p;
      if (s.at(t, f) > s.at(t, arg)) arg = f;
    }
    CHECK(arg == expect);
    CHECK(near >= 0.70 * total);  // energy concentration
  }
}

TEST_CASE("stft rejects too-short input") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(100, 0.0);
  CHECK_THROWS_AS(stft(w, 400, 160), DataError);
}

TEST_CASE("logmel floors zero input at ln(eps)") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(4096, 0.0);
  Spectrogram s = stft(w, 1024, 160);
  LogMelSpectrogram lms = logmel(s, 64, 60.0, 7800.0, 1e-10);
  for (double v : lms.values) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("mel filterbank triangles are positive and overlap") {
  const int mel = 64, n_fft = 1024, sr = 16000;
  auto fb = mel_filterbank(mel, n_fft, sr, 60.0, 7800.0);
  const int bins = n_fft / 2 + 1;
  for (int m = 0; m < mel; ++m) {
    double sum = 0.0;
    for (int f = 0; f < bins; ++f) sum += fb[static_cast<std::size_t>(m) * bins + f];
    CHECK(sum > 0.0);
  }
  for (int m = 0; m + 1 < mel; ++m) {
    bool overlap = false;
    for (int f = 0; f < bins; ++f)
      if (fb[static_cast<std::size_t>(m) * bins + f] > 0.0 &&
          fb[static_cast<std::size_t>(m + 1) * bins + f] > 0.0)
        overlap = true;
    CHECK(overlap);
  }
}

TEST_CASE("logmel of white noise clears the floor everywhere") {
  Rng rng(11);
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(8000);
  for (auto& v : w.samples) v = rng.uniform(-0.5, 0.5);
  LogMelSpectrogram lms = logmel(stft(w, 1024, 160), 64, 60.0, 7800.0, 1e-10);
  for (double v : lms.values) {
    CHECK(v > std::log(1e-10));
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("logmel validates the frequency range") {
  Waveform w = testutil::sine(200.0, 0.2, 16000);
  Spectrogram s = stft(w, 1024, 160);
  CHECK_THROWS_AS(logmel(s, 64, 5000.0, 1000.0, 1e-10), ConfigError);
  CHECK_THROWS_AS(logmel(s, 64, 0.0, 9000.0, 1e-10), ConfigError);
}
