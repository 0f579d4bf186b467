// stressrep/dsp.cc

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

#include "stressrep/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

namespace stressrep {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kRmsFloor = 1e-5;      // -100 dB
constexpr double kF0Min = 60.0;
constexpr double kF0Max = 450.0;
constexpr double kVoicingThreshold = 0.45;
constexpr double kClipFraction = 0.3;   // center-clipping level vs frame peak
constexpr int kMelChannels = 26;
constexpr int kNumMfcc = 13;

enum LldIndex {
  kF0 = 0,
  kVoicing,
  kRmsDb,
  kZcr,
  kCentroid,
  kFlux,
  kRolloff,
  kMfccBase,               // 13 slots
  kJitter = kMfccBase + kNumMfcc,
  kShimmer,
  kHnr,
};
static_assert(kHnr == kNumLld - 1);

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct CycleMark {
  double pos;  // sample position, sub-sample precision
  double amp;  // interpolated peak amplitude
};

// Parabolic refinement of a discrete peak at index m.
void refine_peak(const double* v, long long m, long long lo, long long hi,
                 double* pos, double* amp) {
  *pos = static_cast<double>(m);
  *amp = v[m];
  if (m <= lo || m + 1 >= hi) return;
  const double a = v[m - 1], b = v[m], c = v[m + 1];
  const double denom = a - 2.0 * b + c;
  if (denom == 0.0) return;
  const double delta = 0.5 * (a - c) / denom;
  if (delta < -1.0 || delta > 1.0) return;
  *pos = static_cast<double>(m) + delta;
  *amp = b - 0.25 * (a - c) * delta;
}

}  // namespace

const std::vector<std::string>& lld_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"f0",   "voicing", "rms_db",    "zcr",
                                  "centroid", "flux", "rolloff85"};
    for (int k = 1; k <= kNumMfcc; ++k) n.push_back("mfcc" + std::to_string(k));
    n.insert(n.end(), {"jitter", "shimmer", "hnr"});
    return n;
  }();
  return names;
}

const std::vector<std::string>& functional_names() {
  static const std::vector<std::string> names = {"mean", "std", "p20", "p50",
                                                 "p80"};
  return names;
}

std::vector<std::string> schema_columns() {
  std::vector<std::string> cols;
  cols.reserve(kSupDim);
  for (const auto& lld : lld_names())
    for (const auto& fn : functional_names()) cols.push_back(lld + "." + fn);
  return cols;
}

bool lld_is_f0_derived(int lld_index) {
  return lld_index == kF0 || lld_index == kJitter || lld_index == kShimmer ||
         lld_index == kHnr;
}

LldMatrix extract_lld(const Waveform& w) {
  if (w.sample_rate <= 0 || w.samples.empty())
    throw DataError("extract_lld: empty waveform");
  if (w.duration_s() < 0.1)
    throw DataError("extract_lld: input shorter than 100 ms");

  const int sr = w.sample_rate;
  const int frame_len = static_cast<int>(std::lround(0.040 * sr));
  const int hop = static_cast<int>(std::lround(0.010 * sr));
  const auto n = static_cast<long long>(w.samples.size());
  const int frames = static_cast<int>(1 + (n - frame_len) / hop);

  LldMatrix lld;
  lld.frames = frames;
  lld.values.assign(static_cast<std::size_t>(frames) * kNumLld, 0.0);
  lld.voiced.assign(frames, 0);

  const int lag_min = std::max(2, static_cast<int>(std::floor(sr / kF0Max)));
  const int lag_max =
      std::min(frame_len - 2, static_cast<int>(std::ceil(sr / kF0Min)));

  const int n_fft = next_pow2(frame_len);
  const int bins = n_fft / 2 + 1;
  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / frame_len);
  const auto fb = mel_filterbank(kMelChannels, n_fft, sr, 20.0, sr / 2.0);

  std::vector<double> clipped(frame_len), energy_prefix(frame_len + 1);
  std::vector<double> nccf(lag_max + 1, 0.0);
  std::vector<std::complex<double>> fft_buf(n_fft);
  std::vector<double> power(bins), mag_norm(bins), prev_mag_norm(bins, 0.0);
  std::vector<double> mel_log(kMelChannels);
  std::vector<double> nccf_peak(frames, 0.0);
  std::vector<double> f0(frames, 0.0);

  for (int t = 0; t < frames; ++t) {
    const double* x = w.samples.data() + static_cast<std::size_t>(t) * hop;

    // Time-domain descriptors.
    double sq = 0.0, peak = 0.0;
    int crossings = 0;
    for (int i = 0; i < frame_len; ++i) {
      sq += x[i] * x[i];
      peak = std::max(peak, std::abs(x[i]));
      if (i > 0 && x[i - 1] * x[i] < 0.0) ++crossings;
    }
    const double rms = std::sqrt(sq / frame_len);
    lld.at(t, kRmsDb) = 20.0 * std::log10(std::max(rms, kRmsFloor));
    lld.at(t, kZcr) = static_cast<double>(crossings) / (frame_len - 1);

    // Center-clipped normalized cross-correlation for pitch.
    const double clip = kClipFraction * peak;
    for (int i = 0; i < frame_len; ++i) {
      const double v = x[i];
      clipped[i] = v > clip ? v - clip : (v < -clip ? v + clip : 0.0);
    }
    energy_prefix[0] = 0.0;
    for (int i = 0; i < frame_len; ++i)
      energy_prefix[i + 1] = energy_prefix[i] + clipped[i] * clipped[i];

    double best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0;
      const int m = frame_len - lag;
      for (int i = 0; i < m; ++i) num += clipped[i] * clipped[i + lag];
      const double e0 = energy_prefix[m];
      const double e1 = energy_prefix[frame_len] - energy_prefix[lag];
      nccf[lag] = num / std::sqrt(e0 * e1 + 1e-30);
      best = std::max(best, nccf[lag]);
    }
    // Smallest lag among near-maximal local peaks; a periodic signal scores
    // the same at every period multiple, and the smallest one is the pitch.
    int best_lag = 0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const bool local_max = (lag == lag_min || nccf[lag] >= nccf[lag - 1]) &&
                             (lag == lag_max || nccf[lag] >= nccf[lag + 1]);
      if (local_max && nccf[lag] >= 0.93 * best) {
        best_lag = lag;
        break;
      }
    }
    double voic = 0.0;
    if (best_lag > 0) {
      double lag_f, peak_v;
      refine_peak(nccf.data(), best_lag, lag_min - 1, lag_max + 1, &lag_f,
                  &peak_v);
      voic = std::clamp(peak_v, 0.0, 1.0);
      nccf_peak[t] = voic;
      if (voic >= kVoicingThreshold) {
        lld.voiced[t] = 1;
        f0[t] = sr / lag_f;
        lld.at(t, kF0) = f0[t];
        const double r = std::clamp(voic, 1e-6, 1.0 - 1e-6);
        lld.at(t, kHnr) = 10.0 * std::log10(r / (1.0 - r));
      }
    }
    lld.at(t, kVoicing) = voic;

    // Spectral descriptors.
    for (int i = 0; i < frame_len; ++i) fft_buf[i] = x[i] * window[i];
    std::fill(fft_buf.begin() + frame_len, fft_buf.end(),
              std::complex<double>(0.0, 0.0));
    fft_radix2(fft_buf);
    double total_power = 0.0, mag_sq = 0.0;
    for (int f = 0; f < bins; ++f) {
      const double m = std::abs(fft_buf[f]);
      power[f] = m * m;
      total_power += power[f];
      mag_sq += power[f];
      mag_norm[f] = m;
    }
    if (total_power > 1e-20) {
      double centroid = 0.0;
      for (int f = 0; f < bins; ++f)
        centroid += power[f] * (static_cast<double>(f) * sr / n_fft);
      lld.at(t, kCentroid) = centroid / total_power;
      double cum = 0.0;
      for (int f = 0; f < bins; ++f) {
        cum += power[f];
        if (cum >= 0.85 * total_power) {
          lld.at(t, kRolloff) = static_cast<double>(f) * sr / n_fft;
          break;
        }
      }
      const double inv = 1.0 / std::sqrt(mag_sq);
      for (int f = 0; f < bins; ++f) mag_norm[f] *= inv;
    } else {
      std::fill(mag_norm.begin(), mag_norm.end(), 0.0);
    }
    if (t > 0) {
      double d2 = 0.0;
      for (int f = 0; f < bins; ++f) {
        const double d = mag_norm[f] - prev_mag_norm[f];
        d2 += d * d;
      }
      lld.at(t, kFlux) = std::sqrt(d2);
    }
    std::swap(mag_norm, prev_mag_norm);

    for (int m = 0; m < kMelChannels; ++m) {
      const double* row = fb.data() + static_cast<std::size_t>(m) * bins;
      double e = 0.0;
      for (int f = 0; f < bins; ++f) e += row[f] * power[f];
      mel_log[m] = std::log(std::max(e, 1e-10));
    }
    for (int k = 0; k < kNumMfcc; ++k) {
      double c = 0.0;
      for (int m = 0; m < kMelChannels; ++m)
        c += mel_log[m] * std::cos(kPi * k * (m + 0.5) / kMelChannels);
      c *= k == 0 ? std::sqrt(1.0 / kMelChannels) : std::sqrt(2.0 / kMelChannels);
      lld.at(t, kMfccBase + k) = c;
    }
  }

  // Cycle marks over voiced runs, then per-frame jitter/shimmer.
  std::vector<CycleMark> marks;
  std::vector<double> periods, period_mid, amps;
  int t0 = 0;
  while (t0 < frames) {
    if (!lld.voiced[t0]) {
      ++t0;
      continue;
    }
    int t1 = t0;
    while (t1 < frames && lld.voiced[t1]) ++t1;

    const long long seg_lo = static_cast<long long>(t0) * hop;
    const long long seg_hi =
        std::min<long long>(static_cast<long long>(t1 - 1) * hop + frame_len, n);
    marks.clear();
    double period = sr / f0[t0];
    long long search_lo = seg_lo;
    long long search_hi = std::min<long long>(
        seg_lo + static_cast<long long>(std::ceil(period)) + 1, seg_hi);
    while (search_hi - search_lo >= 2) {
      long long arg = search_lo;
      for (long long i = search_lo; i < search_hi; ++i)
        if (w.samples[i] > w.samples[arg]) arg = i;
      double pos, amp;
      refine_peak(w.samples.data(), arg, 0, n, &pos, &amp);
      if (!marks.empty() && pos <= marks.back().pos + 1.0) break;
      marks.push_back({pos, amp});
      const int tf = std::clamp(static_cast<int>(arg / hop), t0, t1 - 1);
      if (f0[tf] > 0.0) period = sr / f0[tf];
      search_lo = static_cast<long long>(std::floor(marks.back().pos + 0.75 * period));
      search_hi = std::min<long long>(
          static_cast<long long>(std::ceil(marks.back().pos + 1.35 * period)) + 1,
          seg_hi);
      search_lo = std::max(search_lo, seg_lo);
      if (search_lo >= search_hi) break;
    }

    for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
      periods.push_back(marks[i + 1].pos - marks[i].pos);
      period_mid.push_back(0.5 * (marks[i].pos + marks[i + 1].pos));
      amps.push_back(marks[i].amp);
    }
    t0 = t1;
  }

  for (int t = 0; t < frames; ++t) {
    if (!lld.voiced[t]) continue;
    const double lo = static_cast<double>(t) * hop;
    const double hi = lo + frame_len;
    std::size_t first = 0;
    while (first < period_mid.size() && period_mid[first] < lo) ++first;
    std::size_t last = first;
    while (last < period_mid.size() && period_mid[last] < hi) ++last;
    const std::size_t count = last - first;
    if (count < 2) continue;
    double sum_t = 0.0, sum_dt = 0.0, sum_a = 0.0, sum_da = 0.0;
    for (std::size_t i = first; i < last; ++i) {
      sum_t += periods[i];
      sum_a += std::abs(amps[i]);
      if (i > first) {
        sum_dt += std::abs(periods[i] - periods[i - 1]);
        sum_da += std::abs(std::abs(amps[i]) - std::abs(amps[i - 1]));
      }
    }
    const double mean_t = sum_t / count;
    const double mean_a = sum_a / count;
    if (mean_t > 0.0)
      lld.at(t, kJitter) = (sum_dt / (count - 1)) / mean_t;
    if (mean_a > 1e-12)
      lld.at(t, kShimmer) = (sum_da / (count - 1)) / mean_a;
  }

  (void)nccf_peak;
  return lld;
}

namespace {

double percentile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

SupervisionVector apply_functionals(const LldMatrix& lld) {
  if (lld.frames < 1) throw DataError("apply_functionals: no frames");

  SupervisionVector out;
  out.schema_id = lld.schema_id;
  out.values.assign(kSupDim, 0.0);

  std::vector<double> contour;
  contour.reserve(lld.frames);
  for (int l = 0; l < kNumLld; ++l) {
    contour.clear();
    const bool voiced_only = lld_is_f0_derived(l);
    for (int t = 0; t < lld.frames; ++t) {
      if (voiced_only && !lld.voiced[t]) continue;
      contour.push_back(lld.at(t, l));
    }
    double* dst = out.values.data() + static_cast<std::size_t>(l) * kNumFunctionals;
    if (contour.empty()) continue;  // all-unvoiced: zeros by contract

    const std::size_t n = contour.size();
    double mean = 0.0;
    for (double v : contour) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : contour) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);

    std::sort(contour.begin(), contour.end());
    dst[0] = mean;
    dst[1] = std::sqrt(var);
    dst[2] = percentile_sorted(contour, 0.20);
    dst[3] = percentile_sorted(contour, 0.50);
    dst[4] = percentile_sorted(contour, 0.80);
  }
  return out;
}

SupervisionVector extract_features(const Waveform& w) {
  return apply_functionals(extract_lld(w));
}

FeatureStandardizer fit_standardizer(const std::vector<SupervisionVector>& vs) {
  if (vs.size() < 2)
    throw DataError("fit_standardizer: need at least 2 vectors");
  const std::size_t d = vs[0].values.size();
  for (const auto& v : vs) {
    if (v.schema_id != vs[0].schema_id || v.values.size() != d)
      throw DataError("fit_standardizer: schema mismatch");
  }
  FeatureStandardizer s;
  s.schema_id = vs[0].schema_id;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& v : vs)
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += v.values[i];
  for (std::size_t i = 0; i < d; ++i) s.mean[i] /= static_cast<double>(vs.size());
  for (const auto& v : vs)
    for (std::size_t i = 0; i < d; ++i) {
      const double dlt = v.values[i] - s.mean[i];
      s.stddev[i] += dlt * dlt;
    }
  for (std::size_t i = 0; i < d; ++i)
    s.stddev[i] = std::max(std::sqrt(s.stddev[i] / static_cast<double>(vs.size())),
                           1e-8);
  return s;
}

SupervisionVector standardize(const SupervisionVector& v,
                              const FeatureStandardizer& s) {
  if (v.schema_id != s.schema_id || v.values.size() != s.mean.size())
    throw DataError("standardize: schema mismatch");
  SupervisionVector out;
  out.schema_id = v.schema_id;
  out.values.resize(v.values.size());
  for (std::size_t i = 0; i < v.values.size(); ++i)
    out.values[i] = (v.values[i] - s.mean[i]) / s.stddev[i];
  return out;
}

void write_feature_csv(const std::string& path,
                       const std::vector<std::string>& ids,
                       const std::vector<SupervisionVector>& vectors) {
  if (ids.size() != vectors.size())
    throw DataError("write_feature_csv: ids/vectors size mismatch");
  std::ostringstream out;
  out << "# schema_id=" << kSchemaId << "\n";
  out << "utterance_id";
  for (const auto& c : schema_columns()) out << "," << c;
  out << "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (vectors[i].values.size() != static_cast<std::size_t>(kSupDim))
      throw DataError("write_feature_csv: bad vector dimension for " + ids[i]);
    out << ids[i];
    for (double v : vectors[i].values) out << "," << format_g(v, 12);
    out << "\n";
  }
  atomic_write_file(path, out.str());
}

std::pair<std::vector<std::string>, std::vector<SupervisionVector>>
read_feature_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema_id=", 0) != 0)
    throw FormatError("feature csv missing schema comment: " + path);
  const std::string schema = line.substr(std::string("# schema_id=").size());
  if (schema != kSchemaId)
    throw FormatError("feature csv has unknown schema '" + schema + "': " + path);
  if (!std::getline(in, line))
    throw FormatError("feature csv missing header: " + path);
  auto header = split_csv_line(line);
  auto expect = schema_columns();
  if (header.size() != expect.size() + 1 || header[0] != "utterance_id")
    throw FormatError("feature csv has unexpected header: " + path);
  for (std::size_t i = 0; i < expect.size(); ++i)
    if (header[i + 1] != expect[i])
      throw FormatError("feature csv column mismatch at " + header[i + 1]);

  std::vector<std::string> ids;
  std::vector<SupervisionVector> vectors;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != expect.size() + 1)
      throw FormatError("feature csv row with wrong cell count: " + path);
    SupervisionVector v;
    v.values.resize(kSupDim);
    for (int i = 0; i < kSupDim; ++i) v.values[i] = std::stod(cells[i + 1]);
    ids.push_back(cells[0]);
    vectors.push_back(std::move(v));
  }
  return {std::move(ids), std::move(vectors)};
}

}  // namespace stressrep
