// stressrep/common.hpp

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

#ifndef STRESSREP_COMMON_HPP_
#define STRESSREP_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stressrep {

// Error taxonomy. The CLI maps these onto exit codes: I/O, format,
// unsupported-encoding, data and config errors exit 2; numeric failures
// exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Missing or unreadable/unwritable file.
struct IoError : Error {
  using Error::Error;
};
// File exists but its contents are malformed.
struct FormatError : Error {
  using Error::Error;
};
// Recognized container with an encoding this toolkit does not handle.
struct UnsupportedError : Error {
  using Error::Error;
};
// Operation precondition violated by the data passed in.
struct DataError : Error {
  using Error::Error;
};
// Invalid configuration value.
struct ConfigError : Error {
  using Error::Error;
};
// Non-finite numbers where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 14695981039346656037ull);
std::uint64_t fnv1a64(std::string_view s);
std::string to_hex(std::uint64_t v);

// splitmix64 finalizer; used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 with hand-rolled distributions so draws are identical across
// standard library implementations. Every method consumes a fixed number of
// generator words: uniform01/uniform/index one, gaussian two.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }
  // [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // [0, n); exactly one generator word (bias < 2^-42 for n <= 2^11).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  }
  double gaussian();
  void discard(unsigned long long n) { gen_.discard(n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Worker count for parallel sections: min(hardware, STRESSREP_THREADS).
int worker_count();
// Runs fn(0..n-1) on worker threads. Callers must write to disjoint slots;
// results are then independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

bool file_exists(const std::string& path);
std::string read_file(const std::string& path);
// Writes to a temp file in the target directory, then renames into place.
void atomic_write_file(const std::string& path, std::string_view bytes);
void make_dirs(const std::string& path);
std::string dir_name(const std::string& path);
std::string join_path(const std::string& dir, const std::string& rel);

std::vector<std::string> split_csv_line(const std::string& line);
// printf "%.*g" with deterministic output.
std::string format_g(double v, int digits = 17);

}  // namespace stressrep

#endif  // STRESSREP_COMMON_HPP_
