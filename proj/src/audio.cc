// stressrep/audio.cc

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

#include "stressrep/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace stressrep {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Zeroth-order modified Bessel function, for the Kaiser window.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

}  // namespace

Waveform load_wav(const std::string& path) {
  if (!file_exists(path)) throw IoError("no such file: " + path);
  std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char* hdr = p + pos;
    std::uint32_t chunk_len = read_u32(hdr + 4);
    pos += 8;
    if (pos + chunk_len > n)
      throw FormatError("truncated chunk in: " + path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("short fmt chunk in: " + path);
      format = read_u16(p + pos);
      channels = read_u16(p + pos + 2);
      rate = read_u32(p + pos + 4);
      bits = read_u16(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = p + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError("missing fmt chunk in: " + path);
  if (data == nullptr) throw FormatError("missing data chunk in: " + path);
  if (rate == 0) throw FormatError("zero sample rate in: " + path);
  if (channels < 1 || channels > 2)
    throw UnsupportedError("unsupported channel count " + std::to_string(channels) +
                           " in: " + path);
  bool pcm16 = format == 1 && bits == 16;
  bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw UnsupportedError("unsupported codec (format " + std::to_string(format) +
                           ", " + std::to_string(bits) + "-bit) in: " + path);

  std::size_t bytes_per_sample = bits / 8;
  std::size_t frame_bytes = bytes_per_sample * channels;
  if (data_len % frame_bytes != 0)
    throw FormatError("data chunk size not a whole number of frames in: " + path);
  std::size_t frames = data_len / frame_bytes;
  if (frames == 0) throw FormatError("empty data chunk in: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(read_u16(s));
        acc += v / 32768.0;
      } else {
        std::uint32_t u = read_u32(s);
        float f;
        std::memcpy(&f, &u, 4);
        acc += f;
      }
    }
    w.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return w;
}

Waveform resample(const Waveform& w, int target_sr) {
  if (target_sr <= 0) throw ConfigError("resample: target rate must be positive");
  if (w.sample_rate <= 0 || w.samples.empty())
    throw DataError("resample: empty waveform");
  if (target_sr == w.sample_rate) return w;

  const double ratio = static_cast<double>(target_sr) / w.sample_rate;
  const double scale = std::min(1.0, ratio);  // anti-alias when downsampling
  const double cutoff = 0.46 * scale;         // cycles per input sample
  const int half = static_cast<int>(std::ceil(12.0 / cutoff));
  const double beta = 10.0;
  const double i0_beta = bessel_i0(beta);

  const std::size_t in_n = w.samples.size();
  const auto out_n = static_cast<std::size_t>(
      std::llround(static_cast<double>(in_n) * ratio));

  Waveform out;
  out.sample_rate = target_sr;
  out.samples.resize(out_n);

  for (std::size_t m = 0; m < out_n; ++m) {
    const double center = static_cast<double>(m) / ratio;
    const auto k0 = static_cast<long long>(std::floor(center)) - half;
    const auto k1 = static_cast<long long>(std::floor(center)) + half + 1;
    double acc = 0.0, wsum = 0.0;
    for (long long k = k0; k <= k1; ++k) {
      const double t = static_cast<double>(k) - center;
      const double u = t / (half + 1.0);
      if (u <= -1.0 || u >= 1.0) continue;
      const double window = bessel_i0(beta * std::sqrt(1.0 - u * u)) / i0_beta;
      const double a = 2.0 * cutoff * t;
      const double sinc = a == 0.0 ? 1.0 : std::sin(kPi * a) / (kPi * a);
      const double weight = 2.0 * cutoff * sinc * window;
      wsum += weight;
      if (k >= 0 && k < static_cast<long long>(in_n))
        acc += weight * w.samples[static_cast<std::size_t>(k)];
    }
    out.samples[m] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ConfigError("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wn(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> wcur(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * wcur;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        wcur *= wn;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

Spectrogram stft(const Waveform& w, int frame_len, int hop) {
  if (frame_len < 2) throw ConfigError("stft: frame_len must be >= 2");
  if (hop < 1) throw ConfigError("stft: hop must be >= 1");
  const auto n = static_cast<long long>(w.samples.size());
  if (n < frame_len)
    throw DataError("stft: waveform shorter than one frame (" +
                    std::to_string(n) + " < " + std::to_string(frame_len) + ")");

  Spectrogram s;
  s.frame_len = frame_len;
  s.hop = hop;
  s.sample_rate = w.sample_rate;
  s.n_fft = next_pow2(frame_len);
  s.bins = s.n_fft / 2 + 1;
  s.frames = static_cast<int>(1 + (n - frame_len) / hop);
  s.mags.assign(static_cast<std::size_t>(s.frames) * s.bins, 0.0);

  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / frame_len);

  std::vector<std::complex<double>> buf(s.n_fft);
  for (int t = 0; t < s.frames; ++t) {
    const double* frame = w.samples.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < frame_len; ++i) buf[i] = frame[i] * window[i];
    std::fill(buf.begin() + frame_len, buf.end(), std::complex<double>(0.0, 0.0));
    fft_radix2(buf);
    for (int f = 0; f < s.bins; ++f) s.at(t, f) = std::abs(buf[f]);
  }
  return s;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> mel_filterbank(int mel_bins, int n_fft, int sample_rate,
                                   double fmin, double fmax) {
  if (mel_bins < 1) throw ConfigError("mel_filterbank: mel_bins must be >= 1");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    throw ConfigError("mel_filterbank: need 0 <= fmin < fmax <= nyquist");

  const int bins = n_fft / 2 + 1;
  std::vector<double> centers(mel_bins + 2);
  const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
  for (int i = 0; i < mel_bins + 2; ++i)
    centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (mel_bins + 1));

  std::vector<double> fb(static_cast<std::size_t>(mel_bins) * bins, 0.0);
  for (int m = 0; m < mel_bins; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (int f = 0; f < bins; ++f) {
      const double hz = static_cast<double>(f) * sample_rate / n_fft;
      double v = 0.0;
      if (hz > lo && hz < mid)
        v = (hz - lo) / (mid - lo);
      else if (hz >= mid && hz < hi)
        v = (hi - hz) / (hi - mid);
      fb[static_cast<std::size_t>(m) * bins + f] = v;
    }
  }
  return fb;
}

LogMelSpectrogram logmel(const Spectrogram& s, int mel_bins, double fmin,
                         double fmax, double floor_eps) {
  if (floor_eps <= 0.0) throw ConfigError("logmel: floor_eps must be positive");
  const auto fb = mel_filterbank(mel_bins, s.n_fft, s.sample_rate, fmin, fmax);

  LogMelSpectrogram lms;
  lms.frames = s.frames;
  lms.mel_bins = mel_bins;
  lms.frame_len = s.frame_len;
  lms.hop = s.hop;
  lms.sample_rate = s.sample_rate;
  lms.fmin = fmin;
  lms.fmax = fmax;
  lms.values.resize(static_cast<std::size_t>(s.frames) * mel_bins);

  std::vector<double> power(s.bins);
  for (int t = 0; t < s.frames; ++t) {
    for (int f = 0; f < s.bins; ++f) {
      const double m = s.at(t, f);
      power[f] = m * m;
    }
    for (int m = 0; m < mel_bins; ++m) {
      const double* row = fb.data() + static_cast<std::size_t>(m) * s.bins;
      double e = 0.0;
      for (int f = 0; f < s.bins; ++f) e += row[f] * power[f];
      lms.at(t, m) = std::log(std::max(e, floor_eps));
    }
  }
  return lms;
}

LogMelSpectrogram compute_lms(const Waveform& w, const FrontendConfig& cfg) {
  const Waveform* src = &w;
  Waveform tmp;
  if (w.sample_rate != cfg.sample_rate) {
    tmp = resample(w, cfg.sample_rate);
    src = &tmp;
  }
  Spectrogram s = stft(*src, cfg.frame_len, cfg.hop);
  return logmel(s, cfg.mel_bins, cfg.fmin, cfg.fmax, cfg.floor_eps);
}

}  // namespace stressrep
