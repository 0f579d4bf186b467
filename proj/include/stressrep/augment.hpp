// stressrep/augment.hpp

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

#ifndef STRESSREP_AUGMENT_HPP_
#define STRESSREP_AUGMENT_HPP_

#include <deque>

#include "stressrep/audio.hpp"
#include "stressrep/common.hpp"

namespace stressrep {

// Corpus-level scalar statistics for pre-normalization.
struct NormStats {
  double mean = 0.0;
  double stddev = 1.0;
};

struct AugmentConfig {
  bool mixup = true;
  double mixup_alpha = 0.4;          // lambda ~ U(0, alpha)
  std::size_t memory_capacity = 2048;
  bool rrc = true;
  double rrc_pad = 0.25;             // 1.5x virtual canvas: 0.25 margin per side
  double rrc_scale_min = 0.6;
  double rrc_scale_max = 1.5;

  bool operator==(const AugmentConfig&) const = default;
};

// FIFO of past pre-normalized spectrograms plus the generator that draws the
// mixup ratio and the memory entry. mixup() consumes exactly two generator
// words per call, so the state after k calls is seed-advanced by 2k and a
// resumed run can catch up with advance_rng().
class MixupMemory {
 public:
  MixupMemory(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(seed) {}

  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }
  void push(const LogMelSpectrogram& x) {
    buf_.push_back(x);
    if (buf_.size() > capacity_) buf_.pop_front();
  }
  const LogMelSpectrogram& entry(std::size_t i) const { return buf_[i]; }
  Rng& rng() { return rng_; }
  void advance_rng(unsigned long long words) { rng_.discard(words); }

 private:
  std::size_t capacity_;
  std::deque<LogMelSpectrogram> buf_;
  Rng rng_;
};

// (x - mean) / std elementwise with corpus scalars.
LogMelSpectrogram pre_normalize(const LogMelSpectrogram& x, const NormStats& s);

// Per-view z-normalization over all cells, std clamped at 1e-8.
LogMelSpectrogram post_normalize(const LogMelSpectrogram& x);

// Log-domain mixup with a past entry: ln((1-lambda) e^x + lambda e^z),
// lambda ~ U(0, alpha). x is appended to the memory afterwards. Empty
// memory or lambda == 0 leave x untouched.
LogMelSpectrogram mixup(const LogMelSpectrogram& x, MixupMemory& mem,
                        double alpha);

// Deterministic core: crop rectangle (top, left, crop_h, crop_w) of the
// zero-padded canvas, bilinear-resized back to the input shape.
LogMelSpectrogram rrc_crop_resize(const LogMelSpectrogram& x, int top, int left,
                                  int crop_h, int crop_w);

// Time/frequency scales ~ U(scale_min, scale_max), uniform offset within the
// padded canvas; consumes exactly four generator words.
LogMelSpectrogram random_resize_crop(const LogMelSpectrogram& x,
                                     const AugmentConfig& cfg, Rng& rng);

struct ViewPair {
  LogMelSpectrogram a;
  LogMelSpectrogram b;
};

// pre_normalize -> mixup -> random_resize_crop -> post_normalize, drawn
// independently per view.
ViewPair make_views(const LogMelSpectrogram& x, MixupMemory& mem,
                    const AugmentConfig& cfg, const NormStats& stats, Rng& rng);

}  // namespace stressrep

#endif  // STRESSREP_AUGMENT_HPP_
