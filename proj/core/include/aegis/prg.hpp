/*
 * Copyright 2026 The Aegis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AEGIS_PRG_HPP_
#define AEGIS_PRG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace aegis {

// Seedable, splittable pseudo-random generator. Every party and every
// protocol stream derives its own child generator via Split(), so runs are
// bit-reproducible from a single root seed.
class Prg {
 public:
  using result_type = std::uint64_t;

  explicit Prg(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  // Uniform element of Z_{2^bit_width}.
  std::uint64_t UniformRing(unsigned bit_width);
  // Uniform integer in [0, bound).
  std::uint64_t UniformBelow(std::uint64_t bound);
  bool Bit() { return (engine_() >> 63) != 0; }
  double Gaussian(double sigma);
  double UniformReal(double lo, double hi);

  // Independent child stream; the same (seed, stream) pair always yields the
  // same child regardless of how much of the parent has been consumed.
  Prg Split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used for seed derivation.
std::uint64_t MixSeed(std::uint64_t x);

}  // namespace aegis

#endif  // AEGIS_PRG_HPP_
