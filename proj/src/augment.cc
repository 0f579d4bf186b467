// stressrep/augment.cc

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

#include "stressrep/augment.hpp"

#include <algorithm>
#include <cmath>

namespace stressrep {

LogMelSpectrogram pre_normalize(const LogMelSpectrogram& x, const NormStats& s) {
  if (s.stddev <= 0.0) throw ConfigError("pre_normalize: std must be positive");
  LogMelSpectrogram out = x;
  const double inv = 1.0 / s.stddev;
  for (auto& v : out.values) v = (v - s.mean) * inv;
  return out;
}

LogMelSpectrogram post_normalize(const LogMelSpectrogram& x) {
  LogMelSpectrogram out = x;
  const auto n = static_cast<double>(out.values.size());
  double mean = 0.0;
  for (double v : out.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : out.values) var += (v - mean) * (v - mean);
  const double inv = 1.0 / std::max(std::sqrt(var / n), 1e-8);
  for (auto& v : out.values) v = (v - mean) * inv;
  return out;
}

LogMelSpectrogram mixup(const LogMelSpectrogram& x, MixupMemory& mem,
                        double alpha) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw ConfigError("mixup: alpha must be in [0, 1)");
  // Fixed draw count per call regardless of buffer state.
  const double lambda = mem.rng().uniform(0.0, alpha);
  const std::size_t pick = mem.rng().index(std::max<std::size_t>(mem.size(), 1));

  LogMelSpectrogram out = x;
  if (mem.size() > 0 && lambda > 0.0) {
    const LogMelSpectrogram& z = mem.entry(pick);
    if (z.values.size() != x.values.size())
      throw DataError("mixup: memory entry shape differs from input");
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = std::log((1.0 - lambda) * std::exp(x.values[i]) +
                               lambda * std::exp(z.values[i]));
  }
  mem.push(x);
  return out;
}

LogMelSpectrogram rrc_crop_resize(const LogMelSpectrogram& x, int top, int left,
                                  int crop_h, int crop_w) {
  if (crop_h < 1 || crop_w < 1)
    throw ConfigError("rrc_crop_resize: crop must be at least 1x1");
  const int t_dim = x.frames, m_dim = x.mel_bins;

  auto canvas = [&](long long r, long long c) -> double {
    if (r < 0 || r >= t_dim || c < 0 || c >= m_dim) return 0.0;
    return x.values[static_cast<std::size_t>(r) * m_dim + c];
  };

  LogMelSpectrogram out = x;
  for (int i = 0; i < t_dim; ++i) {
    // Half-pixel mapping; equal sizes give the identity.
    double sy = (i + 0.5) * crop_h / t_dim - 0.5;
    sy = std::clamp(sy, 0.0, crop_h - 1.0) + top;
    const auto y0 = static_cast<long long>(std::floor(sy));
    const double fy = sy - static_cast<double>(y0);
    for (int j = 0; j < m_dim; ++j) {
      double sx = (j + 0.5) * crop_w / m_dim - 0.5;
      sx = std::clamp(sx, 0.0, crop_w - 1.0) + left;
      const auto x0 = static_cast<long long>(std::floor(sx));
      const double fx = sx - static_cast<double>(x0);
      const double v00 = canvas(y0, x0), v01 = canvas(y0, x0 + 1);
      const double v10 = canvas(y0 + 1, x0), v11 = canvas(y0 + 1, x0 + 1);
      out.values[static_cast<std::size_t>(i) * m_dim + j] =
          (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
          fy * ((1.0 - fx) * v10 + fx * v11);
    }
  }
  return out;
}

LogMelSpectrogram random_resize_crop(const LogMelSpectrogram& x,
                                     const AugmentConfig& cfg, Rng& rng) {
  const int t_dim = x.frames, m_dim = x.mel_bins;
  const double st = rng.uniform(cfg.rrc_scale_min, cfg.rrc_scale_max);
  const double sf = rng.uniform(cfg.rrc_scale_min, cfg.rrc_scale_max);
  const double u_t = rng.uniform01();
  const double u_f = rng.uniform01();

  const int pad_t = static_cast<int>(std::lround(cfg.rrc_pad * t_dim));
  const int pad_f = static_cast<int>(std::lround(cfg.rrc_pad * m_dim));
  const int crop_h =
      std::clamp(static_cast<int>(std::lround(st * t_dim)), 1, t_dim + 2 * pad_t);
  const int crop_w =
      std::clamp(static_cast<int>(std::lround(sf * m_dim)), 1, m_dim + 2 * pad_f);

  const int top_lo = -pad_t, top_hi = t_dim + pad_t - crop_h;
  const int left_lo = -pad_f, left_hi = m_dim + pad_f - crop_w;
  const int top =
      top_hi <= top_lo
          ? top_lo
          : top_lo + static_cast<int>(u_t * static_cast<double>(top_hi - top_lo + 1));
  const int left =
      left_hi <= left_lo
          ? left_lo
          : left_lo +
                static_cast<int>(u_f * static_cast<double>(left_hi - left_lo + 1));
  return rrc_crop_resize(x, top, left, crop_h, crop_w);
}

ViewPair make_views(const LogMelSpectrogram& x, MixupMemory& mem,
                    const AugmentConfig& cfg, const NormStats& stats, Rng& rng) {
  const LogMelSpectrogram normed = pre_normalize(x, stats);
  auto one_view = [&]() {
    LogMelSpectrogram v = cfg.mixup ? mixup(normed, mem, cfg.mixup_alpha) : normed;
    if (cfg.rrc) v = random_resize_crop(v, cfg, rng);
    return post_normalize(v);
  };
  ViewPair pair;
  pair.a = one_view();
  pair.b = one_view();
  return pair;
}

}  // namespace stressrep
