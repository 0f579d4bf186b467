// tests/test_augment.cc

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
#include <set>

#include "doctest.h"
#include "stressrep/augment.hpp"
#include "testutil.hpp"

using namespace stressrep;

namespace {

LogMelSpectrogram random_lms(int frames, int mel, Rng& rng) {
  LogMelSpectrogram x;
  x.frames = frames;
  x.mel_bins = mel;
  x.sample_rate = 16000;
  x.values.resize(static_cast<std::size_t>(frames) * mel);
  for (auto& v : x.values) v = rng.uniform(-4.0, 4.0);
  return x;
}

LogMelSpectrogram constant_lms(int frames, int mel, double c) {
  LogMelSpectrogram x;
  x.frames = frames;
  x.mel_bins = mel;
  x.sample_rate = 16000;
  x.values.assign(static_cast<std::size_t>(frames) * mel, c);
  return x;
}

double linf(const LogMelSpectrogram& a, const LogMelSpectrogram& b) {
  REQUIRE(a.values.size() == b.values.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

std::uint64_t view_hash(const ViewPair& p) {
  std::uint64_t h = fnv1a64(p.a.values.data(),
                            p.a.values.size() * sizeof(double));
  return fnv1a64(p.b.values.data(), p.b.values.size() * sizeof(double), h);
}

}  // namespace

TEST_CASE("pre_normalize basics") {
  Rng rng(1);
  LogMelSpectrogram x = random_lms(20, 16, rng);

  LogMelSpectrogram id = pre_normalize(x, {0.0, 1.0});
  CHECK(linf(id, x) == 0.0);

  LogMelSpectrogram c = constant_lms(20, 16, 2.5);
  LogMelSpectrogram z = pre_normalize(c, {2.5, 3.0});
  for (double v : z.values) CHECK(v == 0.0);

  CHECK_THROWS_AS(pre_normalize(x, {0.0, 0.0}), ConfigError);
}

TEST_CASE("pre_normalize with corpus scalars recenters the corpus") {
  Rng rng(2);
  std::vector<LogMelSpectrogram> corpus;
  double sum = 0.0, sumsq = 0.0;
  long long count = 0;
  for (int i = 0; i < 12; ++i) {
    corpus.push_back(random_lms(30 + i, 24, rng));
    for (double v : corpus.back().values) {
      sum += v;
      sumsq += v * v;
      ++count;
    }
  }
  NormStats stats;
  stats.mean = sum / count;
  stats.stddev = std::sqrt(sumsq / count - stats.mean * stats.mean);

  double nsum = 0.0, nsumsq = 0.0;
  for (const auto& x : corpus)
    for (double v : pre_normalize(x, stats).values) {
      nsum += v;
      nsumsq += v * v;
    }
  const double mean = nsum / count;
  const double stddev = std::sqrt(nsumsq / count - mean * mean);
  CHECK(std::abs(mean) <= 1e-6);
  CHECK(std::abs(stddev - 1.0) <= 1e-3);
}

TEST_CASE("mixup identity cases") {
  Rng rng(3);
  LogMelSpectrogram x = random_lms(10, 8, rng);

  // alpha = 0 forces lambda = 0: exact identity even with a busy memory.
  MixupMemory mem(8, 77);
  mem.push(random_lms(10, 8, rng));
  LogMelSpectrogram out = mixup(x, mem, 0.0);
  CHECK(out.values == x.values);

  // Empty memory: identity, and the input lands in the buffer.
  MixupMemory empty(8, 78);
  LogMelSpectrogram out2 = mixup(x, empty, 0.4);
  CHECK(out2.values == x.values);
  CHECK(empty.size() == 1);

  // x mixed with itself is x for any lambda.
  MixupMemory self(8, 79);
  self.push(x);
  LogMelSpectrogram out3 = mixup(x, self, 0.99);
  CHECK(linf(out3, x) <= 1e-12);
}

TEST_CASE("mixup converges to identity as lambda -> 0") {
  // Inputs span the usual normalized log-mel range.
  Rng rng(4);
  LogMelSpectrogram x = random_lms(12, 10, rng);
  LogMelSpectrogram z = random_lms(12, 10, rng);
  for (auto& v : x.values) v *= 0.5;  // [-2, 2]
  for (auto& v : z.values) v *= 0.5;
  MixupMemory mem(4, 80);
  mem.push(z);
  LogMelSpectrogram out = mixup(x, mem, 1e-8);  // lambda < 1e-8
  CHECK(linf(out, x) <= 1e-6);
}

TEST_CASE("mixup memory respects capacity") {
  Rng rng(5);
  MixupMemory mem(3, 81);
  for (int i = 0; i < 10; ++i) mixup(random_lms(6, 4, rng), mem, 0.4);
  CHECK(mem.size() == 3);
}

TEST_CASE("rrc identity crop reproduces the input") {
  Rng rng(6);
  LogMelSpectrogram x = random_lms(24, 16, rng);
  LogMelSpectrogram out = rrc_crop_resize(x, 0, 0, 24, 16);
  CHECK(linf(out, x) <= 1e-6);
}

TEST_CASE("rrc constant input stays constant for interior crops") {
  LogMelSpectrogram c = constant_lms(32, 20, -1.7);
  LogMelSpectrogram out = rrc_crop_resize(c, 3, 2, 32 - 6, 20 - 5);
  for (double v : out.values) CHECK(v == doctest::Approx(-1.7).epsilon(1e-6));
}

TEST_CASE("rrc output shape equals input shape over random draws") {
  Rng rng(7);
  AugmentConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    const int frames = 4 + static_cast<int>(rng.index(40));
    const int mel = 4 + static_cast<int>(rng.index(40));
    LogMelSpectrogram x = random_lms(frames, mel, rng);
    LogMelSpectrogram out = random_resize_crop(x, cfg, rng);
    CHECK(out.frames == frames);
    CHECK(out.mel_bins == mel);
  }
}

TEST_CASE("make_views with augmentations disabled") {
  Rng rng(8);
  LogMelSpectrogram x = random_lms(20, 12, rng);
  AugmentConfig cfg;
  cfg.mixup = false;
  cfg.rrc = false;
  MixupMemory mem(4, 82);
  Rng vr(123);
  ViewPair p = make_views(x, mem, cfg, {0.0, 1.0}, vr);
  LogMelSpectrogram expect = post_normalize(pre_normalize(x, {0.0, 1.0}));
  CHECK(linf(p.a, expect) == 0.0);
  CHECK(linf(p.b, expect) == 0.0);
  CHECK(mem.size() == 0);
}

TEST_CASE("make_views is deterministic under a fixed seed") {
  Rng rng(9);
  LogMelSpectrogram x = random_lms(30, 16, rng);
  AugmentConfig cfg;
  auto run = [&] {
    MixupMemory mem(16, 4242);
    Rng vr(99);
    return make_views(x, mem, cfg, {0.0, 1.0}, vr);
  };
  ViewPair p1 = run(), p2 = run();
  CHECK(p1.a.values == p2.a.values);
  CHECK(p1.b.values == p2.b.values);
}

TEST_CASE("make_views produces distinct views and distinct seeds differ") {
  Rng rng(10);
  LogMelSpectrogram x = random_lms(30, 16, rng);
  AugmentConfig cfg;
  int distinct_views = 0;
  std::set<std::uint64_t> hashes;
  for (int seed = 0; seed < 100; ++seed) {
    MixupMemory mem(16, 1000 + seed);
    mem.push(random_lms(30, 16, rng));
    Rng vr(seed);
    ViewPair p = make_views(x, mem, cfg, {0.0, 1.0}, vr);
    if (p.a.values != p.b.values) ++distinct_views;
    hashes.insert(view_hash(p));
    CHECK(p.a.frames == x.frames);
    CHECK(p.a.mel_bins == x.mel_bins);
    CHECK(p.b.frames == x.frames);
  }
  CHECK(distinct_views >= 99);
  CHECK(hashes.size() >= 99);
}

TEST_CASE("post_normalize clamps a constant view") {
  LogMelSpectrogram c = constant_lms(8, 8, 5.0);
  LogMelSpectrogram z = post_normalize(c);
  for (double v : z.values) CHECK(v == 0.0);
}
