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

#include "aegis/prg.hpp"

#include "aegis/error.hpp"

namespace aegis {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kCoordinateOutOfBound: return "CoordinateOutOfBound";
    case ErrorCode::kPartyMismatch: return "PartyMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kOverflowRisk: return "OverflowRisk";
    case ErrorCode::kTripleReuse: return "TripleReuse";
    case ErrorCode::kTripleMismatch: return "TripleMismatch";
    case ErrorCode::kTripleExhausted: return "TripleExhausted";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewWorkers: return "TooFewWorkers";
    case ErrorCode::kNoMedianCandidate: return "NoMedianCandidate";
    case ErrorCode::kOracleAbort: return "OracleAbort";
    case ErrorCode::kFieldOverflow: return "FieldOverflow";
    case ErrorCode::kMalformedData: return "MalformedData";
  }
  return "Unknown";
}

std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Prg::Prg(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(MixSeed(seed)),
                    static_cast<std::uint32_t>(MixSeed(seed) >> 32)};
  engine_.seed(seq);
}

std::uint64_t Prg::UniformRing(unsigned bit_width) {
  const std::uint64_t v = engine_();
  return bit_width >= 64 ? v : v & ((std::uint64_t{1} << bit_width) - 1);
}

std::uint64_t Prg::UniformBelow(std::uint64_t bound) {
  return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
}

double Prg::Gaussian(double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(engine_);
}

double Prg::UniformReal(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

Prg Prg::Split(std::uint64_t stream) const {
  return Prg(MixSeed(seed_ ^ MixSeed(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace aegis
