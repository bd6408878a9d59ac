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

#include "aegis/ring.hpp"

#include <cmath>
#include <string>

#include "aegis/error.hpp"

namespace aegis {

void RingConfig::Validate() const {
  if (bit_width < 2 || bit_width > 64) {
    throw Error(ErrorCode::kInvalidConfig,
                "bit_width must lie in [2, 64], got " +
                    std::to_string(bit_width));
  }
  if (frac_bits + 1 >= bit_width) {
    throw Error(ErrorCode::kInvalidConfig,
                "frac_bits must be < bit_width - 1");
  }
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw Error(ErrorCode::kInvalidConfig, "bound must be positive");
  }
  if (std::ldexp(static_cast<long double>(bound), static_cast<int>(frac_bits)) >=
      std::ldexp(1.0L, static_cast<int>(bit_width) - 1)) {
    throw Error(ErrorCode::kInvalidConfig,
                "bound * 2^frac_bits does not fit the signed ring");
  }
}

bool RingConfig::HasDistanceCapacity(std::size_t dim,
                                     std::size_t summands) const {
  const long double span =
      std::ldexp(2.0L * bound, static_cast<int>(frac_bits));
  const long double worst = static_cast<long double>(dim) *
                            static_cast<long double>(summands) * span * span;
  return worst < std::ldexp(1.0L, static_cast<int>(bit_width) - 1);
}

void RingConfig::CheckDistanceCapacity(std::size_t dim,
                                       std::size_t summands) const {
  if (!HasDistanceCapacity(dim, summands)) {
    throw Error(ErrorCode::kOverflowRisk,
                "squared distances of dimension " + std::to_string(dim) +
                    " may overflow a " + std::to_string(bit_width) +
                    "-bit ring with frac_bits=" + std::to_string(frac_bits));
  }
}

RingVector EncodeFixed(std::span<const double> v, const RingConfig& cfg) {
  const Ring ring = cfg.ring();
  RingVector out{cfg.bit_width, 1, {}};
  out.elems.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(std::fabs(v[k]) <= cfg.bound)) {
      throw Error(ErrorCode::kCoordinateOutOfBound,
                  "coordinate " + std::to_string(k) + " = " +
                      std::to_string(v[k]) + " exceeds bound " +
                      std::to_string(cfg.bound));
    }
    const long long fixed =
        std::llround(std::ldexp(v[k], static_cast<int>(cfg.frac_bits)));
    out.elems.push_back(ring.FromSigned(fixed));
  }
  return out;
}

double DecodeScalar(std::uint64_t elem, unsigned scale, const RingConfig& cfg) {
  const Ring ring = cfg.ring();
  return std::ldexp(static_cast<double>(ring.ToSigned(elem)),
                    -static_cast<int>(cfg.frac_bits * scale));
}

std::vector<double> DecodeFixed(const RingVector& x, const RingConfig& cfg) {
  std::vector<double> out;
  out.reserve(x.size());
  for (std::uint64_t e : x.elems) out.push_back(DecodeScalar(e, x.scale, cfg));
  return out;
}

SharePair ShareWithMask(const RingVector& x, const RingVector& mask) {
  if (mask.size() != x.size()) {
    throw Error(ErrorCode::kLengthMismatch, "mask length differs from secret");
  }
  const Ring ring = x.ring();
  ShareVector s1{Party::kS1, {x.bit_width, x.scale, {}}};
  ShareVector s2{Party::kS2, {x.bit_width, x.scale, {}}};
  s1.vec.elems.reserve(x.size());
  s2.vec.elems.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::uint64_t xi = ring.Reduce(mask.elems[k]);
    s1.vec.elems.push_back(xi);
    s2.vec.elems.push_back(ring.Sub(x.elems[k], xi));
  }
  return {std::move(s1), std::move(s2)};
}

SharePair Share(const RingVector& x, Prg& prg) {
  RingVector mask{x.bit_width, x.scale, {}};
  mask.elems.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    mask.elems.push_back(prg.UniformRing(x.bit_width));
  }
  return ShareWithMask(x, mask);
}

RingVector Reconstruct(const ShareVector& s1, const ShareVector& s2) {
  if (s1.party != Party::kS1 || s2.party != Party::kS2) {
    throw Error(ErrorCode::kPartyMismatch,
                "reconstruct expects one S1 share and one S2 share");
  }
  if (s1.size() != s2.size() || s1.vec.bit_width != s2.vec.bit_width ||
      s1.vec.scale != s2.vec.scale) {
    throw Error(ErrorCode::kLengthMismatch,
                "shares differ in length, ring or scale");
  }
  return Add(s1.vec, s2.vec);
}

namespace {

void CheckCompatible(const RingVector& a, const RingVector& b) {
  if (a.size() != b.size() || a.bit_width != b.bit_width) {
    throw Error(ErrorCode::kLengthMismatch,
                "vectors differ in length or ring");
  }
}

}  // namespace

RingVector Add(const RingVector& a, const RingVector& b) {
  CheckCompatible(a, b);
  const Ring ring = a.ring();
  RingVector out{a.bit_width, a.scale, a.elems};
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.elems[k] = ring.Add(out.elems[k], b.elems[k]);
  }
  return out;
}

RingVector Sub(const RingVector& a, const RingVector& b) {
  CheckCompatible(a, b);
  const Ring ring = a.ring();
  RingVector out{a.bit_width, a.scale, a.elems};
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.elems[k] = ring.Sub(out.elems[k], b.elems[k]);
  }
  return out;
}

ShareVector Add(const ShareVector& a, const ShareVector& b) {
  if (a.party != b.party) {
    throw Error(ErrorCode::kPartyMismatch, "adding shares of different parties");
  }
  return {a.party, Add(a.vec, b.vec)};
}

ShareVector Sub(const ShareVector& a, const ShareVector& b) {
  if (a.party != b.party) {
    throw Error(ErrorCode::kPartyMismatch,
                "subtracting shares of different parties");
  }
  return {a.party, Sub(a.vec, b.vec)};
}

RingVector ModularLinear(std::span<const RingVector> values,
                         std::span<const std::int64_t> coeffs) {
  if (values.empty() || values.size() != coeffs.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "need one coefficient per vector and at least one vector");
  }
  const Ring ring = values.front().ring();
  RingVector out = RingVector::Zeros(values.front().bit_width,
                                     values.front().scale,
                                     values.front().size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CheckCompatible(values[i], out);
    const std::uint64_t c = ring.FromSigned(coeffs[i]);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out.elems[k] = ring.Add(out.elems[k], ring.Mul(c, values[i].elems[k]));
    }
  }
  return out;
}

ShareVector RingLinear(std::span<const ShareVector> shares,
                       std::span<const std::int64_t> coeffs) {
  if (shares.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "no shares to combine");
  }
  std::vector<RingVector> values;
  values.reserve(shares.size());
  for (const ShareVector& s : shares) {
    if (s.party != shares.front().party) {
      throw Error(ErrorCode::kPartyMismatch,
                  "linear combination over shares of different parties");
    }
    if (s.vec.scale != shares.front().vec.scale) {
      throw Error(ErrorCode::kLengthMismatch, "shares differ in scale");
    }
    values.push_back(s.vec);
  }
  return {shares.front().party, ModularLinear(values, coeffs)};
}

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n) {
  for (std::size_t b = 0; b < n; ++b) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
}

std::uint64_t GetLe(std::span<const std::uint8_t> bytes, std::size_t offset,
                    std::size_t n) {
  if (offset + n > bytes.size()) {
    throw Error(ErrorCode::kMalformedData, "truncated buffer");
  }
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < n; ++b) {
    v |= static_cast<std::uint64_t>(bytes[offset + b]) << (8 * b);
  }
  return v;
}

std::size_t SerializedSize(std::size_t length) {
  return kVectorHeaderBytes + 8 * length;
}

void AppendSerialized(const RingVector& v, std::vector<std::uint8_t>& out) {
  out.reserve(out.size() + SerializedSize(v.size()));
  out.push_back(static_cast<std::uint8_t>(v.bit_width));
  out.push_back(static_cast<std::uint8_t>(v.scale));
  PutLe(out, v.size(), 8);
  const Ring ring = v.ring();
  for (std::uint64_t e : v.elems) PutLe(out, ring.Reduce(e), 8);
}

std::vector<std::uint8_t> Serialize(const RingVector& v) {
  std::vector<std::uint8_t> out;
  AppendSerialized(v, out);
  return out;
}

RingVector Deserialize(std::span<const std::uint8_t> bytes,
                       std::size_t& offset) {
  RingVector v;
  v.bit_width = static_cast<unsigned>(GetLe(bytes, offset, 1));
  v.scale = static_cast<unsigned>(GetLe(bytes, offset + 1, 1));
  const std::uint64_t length = GetLe(bytes, offset + 2, 8);
  if (v.bit_width < 1 || v.bit_width > 64) {
    throw Error(ErrorCode::kMalformedData, "bad bit_width in vector header");
  }
  if (length > (bytes.size() - offset - kVectorHeaderBytes) / 8) {
    throw Error(ErrorCode::kMalformedData, "vector length exceeds buffer");
  }
  offset += kVectorHeaderBytes;
  const Ring ring = v.ring();
  v.elems.resize(length);
  for (std::uint64_t k = 0; k < length; ++k) {
    const std::uint64_t e = GetLe(bytes, offset, 8);
    if (ring.Reduce(e) != e) {
      throw Error(ErrorCode::kMalformedData,
                  "element has bits above bit_width");
    }
    v.elems[k] = e;
    offset += 8;
  }
  return v;
}

}  // namespace aegis
