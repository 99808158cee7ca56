// Copyright 2026 The ipdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IPD_RNG_H_
#define IPD_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace ipd {

// Deterministic random stream. Uniform draws are computed from the raw
// 64-bit engine output so results do not depend on the standard library's
// distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), engine_(Mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n) {
    return static_cast<std::uint64_t>(Uniform() * static_cast<double>(n));
  }

  double Normal() {
    // Box-Muller on two uniforms.
    double u1 = Uniform();
    double u2 = Uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Independent child stream identified by `index`. Derivation depends only
  // on (seed, index), never on how many draws this stream has made.
  RandomStream Derive(std::uint64_t index) const {
    return RandomStream(Mix(seed_ ^ Mix(index + 0x9e3779b97f4a7c15ULL)));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t Mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ipd

#endif  // IPD_RNG_H_
