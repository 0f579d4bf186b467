// stressrep/dsp.hpp

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

#ifndef STRESSREP_DSP_HPP_
#define STRESSREP_DSP_HPP_

#include <string>
#include <utility>
#include <vector>

#include "stressrep/audio.hpp"
#include "stressrep/common.hpp"

namespace stressrep {

// CPS-115 schema: 23 low-level descriptors x 5 functionals, descriptor-major.
//
// Descriptors, per 10 ms frame (40 ms analysis window):
//   f0          fundamental frequency, Hz (center-clipped NCCF, 60-450 Hz,
//               parabolic peak interpolation; 0 when unvoiced)
//   voicing     normalized autocorrelation peak in [0, 1]
//   rms_db      20*log10(max(rms, 1e-5)), floor -100 dB
//   zcr         zero-crossing rate in [0, 1]
//   centroid    spectral centroid, Hz (power-weighted)
//   flux        L2 distance between consecutive L2-normalized magnitude spectra
//   rolloff85   85% spectral rolloff frequency, Hz
//   mfcc1..13   DCT-II (orthonormal) of 26 log mel energies, coefficients 0-12
//   jitter      local jitter: mean |dT| / mean T over cycle marks in the window
//   shimmer     local shimmer: mean |dA| / mean A over the same cycle marks
//   hnr         10*log10(r / (1 - r)) of the autocorrelation peak r, dB
//
// Functionals, per descriptor: mean, std (population), p20, p50, p80
// (percentiles by linear interpolation between closest ranks, h = p*(n-1)).
// f0, jitter, shimmer and hnr aggregate over voiced frames only; an
// all-unvoiced utterance yields zeros for those 20 entries.

inline constexpr int kNumLld = 23;
inline constexpr int kNumFunctionals = 5;
inline constexpr int kSupDim = kNumLld * kNumFunctionals;  // 115
inline constexpr const char* kSchemaId = "CPS-115";

const std::vector<std::string>& lld_names();
const std::vector<std::string>& functional_names();
// The 115 column names, "descriptor.functional", descriptor-major.
std::vector<std::string> schema_columns();
bool lld_is_f0_derived(int lld_index);

// frames x kNumLld row-major contours at 10 ms hop.
struct LldMatrix {
  int frames = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> voiced;
  std::string schema_id = kSchemaId;

  double& at(int t, int l) { return values[static_cast<std::size_t>(t) * kNumLld + l]; }
  double at(int t, int l) const {
    return values[static_cast<std::size_t>(t) * kNumLld + l];
  }
};

struct SupervisionVector {
  std::vector<double> values;
  std::string schema_id = kSchemaId;
};

struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // clamped at 1e-8
  std::string schema_id = kSchemaId;
};

// Requires duration >= 100 ms; operates at the waveform's own rate.
LldMatrix extract_lld(const Waveform& w);

SupervisionVector apply_functionals(const LldMatrix& lld);

// extract_lld + apply_functionals.
SupervisionVector extract_features(const Waveform& w);

// Population mean/std per dimension over >= 2 vectors.
FeatureStandardizer fit_standardizer(const std::vector<SupervisionVector>& vs);

SupervisionVector standardize(const SupervisionVector& v,
                              const FeatureStandardizer& s);

// CSV dump: "# schema_id=CPS-115" comment, then a header row
// (utterance_id + 115 column names), one row per utterance.
void write_feature_csv(const std::string& path,
                       const std::vector<std::string>& ids,
                       const std::vector<SupervisionVector>& vectors);
std::pair<std::vector<std::string>, std::vector<SupervisionVector>>
read_feature_csv(const std::string& path);

}  // namespace stressrep

#endif  // STRESSREP_DSP_HPP_
