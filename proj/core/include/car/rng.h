// Copyright 2026 The carlab Authors.
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

#ifndef CAR_RNG_H_
#define CAR_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace car {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the stream addressed by `path` below `seed`. Streams with different
// paths are statistically independent; the mapping is fixed across platforms.
constexpr std::uint64_t StreamSeed(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = Mix64(seed);
  for (std::uint64_t p : path) s = Mix64(s ^ Mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Deterministic generator. Only the raw 64-bit engine output is used, so the
// draws are identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n) {
    // Rejection keeps the result free of modulo bias.
    const std::uint64_t limit = -n % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x < limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace car

#endif  // CAR_RNG_H_
