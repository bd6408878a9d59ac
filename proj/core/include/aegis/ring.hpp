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

#ifndef AEGIS_RING_HPP_
#define AEGIS_RING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aegis/prg.hpp"

namespace aegis {

// The two share-holding servers. S1 is the model server, S2 the worker server.
enum class Party : std::uint8_t { kS1 = 1, kS2 = 2 };

// Arithmetic in Z_{2^bit_width}. Values are stored in the low bit_width bits
// of a uint64_t and read as two's complement when a signed view is needed.
class Ring {
 public:
  explicit constexpr Ring(unsigned bit_width = 64) : bits_(bit_width) {}

  constexpr unsigned bits() const { return bits_; }
  constexpr std::uint64_t mask() const {
    return bits_ >= 64 ? ~std::uint64_t{0}
                       : (std::uint64_t{1} << bits_) - 1;
  }
  constexpr std::uint64_t Reduce(std::uint64_t v) const { return v & mask(); }
  constexpr std::uint64_t Add(std::uint64_t a, std::uint64_t b) const {
    return Reduce(a + b);
  }
  constexpr std::uint64_t Sub(std::uint64_t a, std::uint64_t b) const {
    return Reduce(a - b);
  }
  constexpr std::uint64_t Mul(std::uint64_t a, std::uint64_t b) const {
    return Reduce(a * b);
  }
  constexpr std::uint64_t Neg(std::uint64_t a) const { return Reduce(0 - a); }
  constexpr std::uint64_t FromSigned(std::int64_t v) const {
    return Reduce(static_cast<std::uint64_t>(v));
  }
  // Upper half of the ring maps to negatives.
  constexpr std::int64_t ToSigned(std::uint64_t v) const {
    v = Reduce(v);
    if (bits_ >= 64) return static_cast<std::int64_t>(v);
    const std::uint64_t half = std::uint64_t{1} << (bits_ - 1);
    return v >= half ? static_cast<std::int64_t>(v) -
                           static_cast<std::int64_t>(std::uint64_t{1} << bits_)
                     : static_cast<std::int64_t>(v);
  }

 private:
  unsigned bits_;
};

struct RingConfig {
  unsigned bit_width = 64;
  unsigned frac_bits = 16;
  double bound = 256.0;

  Ring ring() const { return Ring(bit_width); }

  // Throws kInvalidConfig unless 2 <= bit_width <= 64, frac_bits < bit_width-1
  // and bound > 0.
  void Validate() const;

  // Rejects configurations in which a squared distance between two
  // dim-dimensional vectors could leave the positive half of the ring:
  // dim * (2 * B * 2^frac_bits)^2 < 2^(bit_width-1).
  void CheckDistanceCapacity(std::size_t dim,
                             std::size_t summands = 1) const;
  bool HasDistanceCapacity(std::size_t dim, std::size_t summands = 1) const;
};

struct RingVector {
  unsigned bit_width = 64;
  // Number of frac_bits multipliers carried: 0 for integers, 1 for encoded
  // values, 2 for products of two encoded values.
  unsigned scale = 1;
  std::vector<std::uint64_t> elems;

  Ring ring() const { return Ring(bit_width); }
  std::size_t size() const { return elems.size(); }

  static RingVector Zeros(unsigned bit_width, unsigned scale, std::size_t n) {
    return RingVector{bit_width, scale, std::vector<std::uint64_t>(n, 0)};
  }

  friend bool operator==(const RingVector&, const RingVector&) = default;
};

struct ShareVector {
  Party party = Party::kS1;
  RingVector vec;

  std::size_t size() const { return vec.size(); }

  friend bool operator==(const ShareVector&, const ShareVector&) = default;
};

using SharePair = std::pair<ShareVector, ShareVector>;

RingVector EncodeFixed(std::span<const double> v, const RingConfig& cfg);
std::vector<double> DecodeFixed(const RingVector& x, const RingConfig& cfg);
double DecodeScalar(std::uint64_t elem, unsigned scale, const RingConfig& cfg);

// Returns (xi, x - xi) with xi uniform over the ring.
SharePair Share(const RingVector& x, Prg& prg);
// Deterministic variant with an explicit mask; Share() is this with a fresh
// uniform mask.
SharePair ShareWithMask(const RingVector& x, const RingVector& mask);

RingVector Reconstruct(const ShareVector& s1, const ShareVector& s2);

// Local linear combination of same-party shares. Reconstructing both
// parties' outputs yields the same combination of the secrets.
ShareVector RingLinear(std::span<const ShareVector> shares,
                       std::span<const std::int64_t> coeffs);
RingVector ModularLinear(std::span<const RingVector> values,
                         std::span<const std::int64_t> coeffs);

// Local ring helpers used by the protocol layers.
RingVector Add(const RingVector& a, const RingVector& b);
RingVector Sub(const RingVector& a, const RingVector& b);
ShareVector Add(const ShareVector& a, const ShareVector& b);
ShareVector Sub(const ShareVector& a, const ShareVector& b);

// Wire layout: bit_width (1 byte), scale (1 byte), length (8 bytes LE), then
// length little-endian 8-byte elements.
inline constexpr std::size_t kVectorHeaderBytes = 10;
std::size_t SerializedSize(std::size_t length);
void AppendSerialized(const RingVector& v, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> Serialize(const RingVector& v);
// Parses one vector starting at `offset` and advances it.
RingVector Deserialize(std::span<const std::uint8_t> bytes,
                       std::size_t& offset);

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n);
std::uint64_t GetLe(std::span<const std::uint8_t> bytes, std::size_t offset,
                    std::size_t n);

}  // namespace aegis

#endif  // AEGIS_RING_HPP_
