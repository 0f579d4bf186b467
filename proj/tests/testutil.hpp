// tests/testutil.hpp

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

#ifndef STRESSREP_TESTS_TESTUTIL_HPP_
#define STRESSREP_TESTS_TESTUTIL_HPP_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stressrep/audio.hpp"
#include "stressrep/common.hpp"

namespace testutil {

// Scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = (std::filesystem::temp_directory_path() /
             ("stressrep_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter.fetch_add(1))))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& rel) const {
    return stressrep::join_path(path_, rel);
  }

 private:
  std::string path_;
};

inline stressrep::Waveform sine(double freq, double seconds, int sr,
                                double amplitude = 1.0) {
  stressrep::Waveform w;
  w.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::lround(seconds * sr));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] =
        amplitude * std::sin(2.0 * 3.141592653589793 * freq * i / sr);
  return w;
}

// Content hash of a directory: file bytes keyed by sorted relative path.
inline std::uint64_t dir_hash(const std::string& root) {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files.push_back(std::filesystem::relative(e.path(), root).string());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& f : files) {
    h = stressrep::fnv1a64(f.data(), f.size(), h);
    const std::string bytes = stressrep::read_file(stressrep::join_path(root, f));
    h = stressrep::fnv1a64(bytes.data(), bytes.size(), h);
  }
  return h;
}

// Raw little-endian WAV byte builder for malformed/unusual files.
struct WavBytes {
  std::string data;

  WavBytes& raw(const std::string& s) {
    data += s;
    return *this;
  }
  WavBytes& u16(std::uint16_t v) {
    data.append(reinterpret_cast<const char*>(&v), 2);
    return *this;
  }
  WavBytes& u32(std::uint32_t v) {
    data.append(reinterpret_cast<const char*>(&v), 4);
    return *this;
  }
  WavBytes& f32(float v) {
    data.append(reinterpret_cast<const char*>(&v), 4);
    return *this;
  }
  // Standard header for `format` (1 = PCM16, 3 = float32).
  WavBytes& header(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                   std::uint16_t bits, std::uint32_t data_len) {
    raw("RIFF").u32(36 + data_len).raw("WAVE");
    raw("fmt ").u32(16).u16(format).u16(channels).u32(rate);
    u32(rate * channels * bits / 8).u16(channels * bits / 8).u16(bits);
    raw("data").u32(data_len);
    return *this;
  }
  void write(const std::string& path) const {
    stressrep::atomic_write_file(path, data);
  }
};

}  // namespace testutil

#endif  // STRESSREP_TESTS_TESTUTIL_HPP_
