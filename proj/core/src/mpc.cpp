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

#include "aegis/mpc.hpp"

#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "aegis/error.hpp"

namespace aegis {

TripleBatch DealerMakeTriples(std::size_t count, std::size_t dim,
                              TripleForm form, unsigned bit_width, Prg& prg,
                              std::uint64_t first_id) {
  if (count == 0 || dim == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "triple count and dimension must be positive");
  }
  const Ring ring(bit_width);
  auto uniform = [&](std::size_t n) {
    RingVector v{bit_width, 0, std::vector<std::uint64_t>(n)};
    for (auto& e : v.elems) e = prg.UniformRing(bit_width);
    return v;
  };

  TripleBatch batch;
  batch.s1.reserve(count);
  batch.s2.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const RingVector a = uniform(dim);
    const RingVector b = uniform(dim);
    RingVector c{bit_width, 0, {}};
    if (form == TripleForm::kElementwise) {
      c.elems.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        c.elems[k] = ring.Mul(a.elems[k], b.elems[k]);
      }
    } else {
      std::uint64_t acc = 0;
      for (std::size_t k = 0; k < dim; ++k) {
        acc = ring.Add(acc, ring.Mul(a.elems[k], b.elems[k]));
      }
      c.elems = {acc};
    }
    auto [a1, a2] = ShareWithMask(a, uniform(a.size()));
    auto [b1, b2] = ShareWithMask(b, uniform(b.size()));
    auto [c1, c2] = ShareWithMask(c, uniform(c.size()));
    const std::uint64_t id = first_id + t;
    batch.s1.push_back({Party::kS1, form, id, std::move(a1.vec),
                        std::move(b1.vec), std::move(c1.vec), false});
    batch.s2.push_back({Party::kS2, form, id, std::move(a2.vec),
                        std::move(b2.vec), std::move(c2.vec), false});
  }
  return batch;
}

bool TripleIsValid(const BeaverTripleShare& s1, const BeaverTripleShare& s2) {
  if (s1.id != s2.id || s1.form != s2.form || s1.dim() != s2.dim()) {
    return false;
  }
  const RingVector a = Add(s1.a, s2.a);
  const RingVector b = Add(s1.b, s2.b);
  const RingVector c = Add(s1.c, s2.c);
  const Ring ring = a.ring();
  if (s1.form == TripleForm::kElementwise) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (ring.Mul(a.elems[k], b.elems[k]) != c.elems[k]) return false;
    }
    return true;
  }
  std::uint64_t acc = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    acc = ring.Add(acc, ring.Mul(a.elems[k], b.elems[k]));
  }
  return c.size() == 1 && c.elems[0] == acc;
}

BlindedOpen BeaverOpen(const ShareVector& x, const ShareVector& y,
                       BeaverTripleShare& triple) {
  if (triple.consumed) {
    throw Error(ErrorCode::kTripleReuse,
                "triple " + std::to_string(triple.id) + " already consumed");
  }
  if (x.party != triple.party || y.party != triple.party) {
    throw Error(ErrorCode::kPartyMismatch,
                "operand shares and triple belong to different parties");
  }
  if (x.size() != triple.dim() || y.size() != triple.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "operand length " + std::to_string(x.size()) + "/" +
                    std::to_string(y.size()) + " vs triple dimension " +
                    std::to_string(triple.dim()));
  }
  triple.consumed = true;
  BlindedOpen out;
  out.triple_id = triple.id;
  out.x_minus_a = Sub(x.vec, triple.a);
  out.x_minus_a.scale = x.vec.scale;
  out.y_minus_b = Sub(y.vec, triple.b);
  out.y_minus_b.scale = y.vec.scale;
  return out;
}

BlindedOpen OpenBlinded(const BlindedOpen& mine, const BlindedOpen& theirs) {
  if (mine.triple_id != theirs.triple_id) {
    throw Error(ErrorCode::kTripleMismatch,
                "blinded contributions refer to different triples");
  }
  return {mine.triple_id, Add(mine.x_minus_a, theirs.x_minus_a),
          Add(mine.y_minus_b, theirs.y_minus_b)};
}

ShareVector BeaverCombine(const BlindedOpen& opened,
                          const BeaverTripleShare& triple, CrossTerm role) {
  if (opened.triple_id != triple.id) {
    throw Error(ErrorCode::kTripleMismatch,
                "opened values belong to triple " +
                    std::to_string(opened.triple_id) + ", not " +
                    std::to_string(triple.id));
  }
  const std::size_t dim = triple.dim();
  if (opened.x_minus_a.size() != dim || opened.y_minus_b.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "opened values do not match triple dimension");
  }
  const Ring ring = triple.a.ring();
  const auto& e = opened.x_minus_a.elems;
  const auto& f = opened.y_minus_b.elems;
  const unsigned scale = opened.x_minus_a.scale + opened.y_minus_b.scale;
  const bool cross = role == CrossTerm::kAdd;

  ShareVector z{triple.party, {triple.a.bit_width, scale, {}}};
  if (triple.form == TripleForm::kElementwise) {
    z.vec.elems.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      std::uint64_t v = triple.c.elems[k];
      v = ring.Add(v, ring.Mul(e[k], triple.b.elems[k]));
      v = ring.Add(v, ring.Mul(f[k], triple.a.elems[k]));
      if (cross) v = ring.Add(v, ring.Mul(e[k], f[k]));
      z.vec.elems[k] = v;
    }
  } else {
    std::uint64_t v = triple.c.elems.at(0);
    for (std::size_t k = 0; k < dim; ++k) {
      v = ring.Add(v, ring.Mul(e[k], triple.b.elems[k]));
      v = ring.Add(v, ring.Mul(f[k], triple.a.elems[k]));
      if (cross) v = ring.Add(v, ring.Mul(e[k], f[k]));
    }
    z.vec.elems = {v};
  }
  return z;
}

SharePair SecureMultiply(const SharePair& x, const SharePair& y,
                         BeaverTripleShare& triple_s1,
                         BeaverTripleShare& triple_s2) {
  const BlindedOpen c1 = BeaverOpen(x.first, y.first, triple_s1);
  const BlindedOpen c2 = BeaverOpen(x.second, y.second, triple_s2);
  const BlindedOpen opened = OpenBlinded(c1, c2);
  return {BeaverCombine(opened, triple_s1, CrossTerm::kAdd),
          BeaverCombine(opened, triple_s2, CrossTerm::kOmit)};
}

SquaredNormOutcome SecureSquaredNorm(const ShareVector& diff_s1,
                                     const ShareVector& diff_s2,
                                     BeaverTripleShare& triple_s1,
                                     BeaverTripleShare& triple_s2,
                                     const RingConfig& cfg) {
  cfg.CheckDistanceCapacity(diff_s1.size());
  if (triple_s1.form != TripleForm::kInner ||
      triple_s2.form != TripleForm::kInner) {
    throw Error(ErrorCode::kTripleMismatch,
                "squared norm needs inner-product triples");
  }
  const BlindedOpen c1 = BeaverOpen(diff_s1, diff_s1, triple_s1);
  const BlindedOpen c2 = BeaverOpen(diff_s2, diff_s2, triple_s2);
  SquaredNormOutcome out;
  out.opened = OpenBlinded(c1, c2);
  out.share_s1 = BeaverCombine(out.opened, triple_s1, CrossTerm::kAdd);
  out.share_s2 = BeaverCombine(out.opened, triple_s2, CrossTerm::kOmit);
  out.value = Reconstruct(out.share_s1, out.share_s2);
  return out;
}

void TripleStore::Add(std::vector<BeaverTripleShare> triples) {
  for (auto& t : triples) {
    if (t.party != party_) {
      throw Error(ErrorCode::kPartyMismatch,
                  "triple share given to the wrong party's store");
    }
    (t.form == TripleForm::kInner ? inner_ : elementwise_)
        .push_back(std::move(t));
  }
}

BeaverTripleShare TripleStore::Take(TripleForm form, std::size_t dim) {
  auto& queue = form == TripleForm::kInner ? inner_ : elementwise_;
  if (queue.empty()) {
    throw Error(ErrorCode::kTripleExhausted,
                form == TripleForm::kInner ? "no inner-product triples left"
                                           : "no elementwise triples left");
  }
  if (queue.front().dim() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "next triple has dimension " +
                    std::to_string(queue.front().dim()) + ", need " +
                    std::to_string(dim));
  }
  BeaverTripleShare t = std::move(queue.front());
  queue.pop_front();
  return t;
}

std::size_t TripleStore::Remaining(TripleForm form) const {
  return form == TripleForm::kInner ? inner_.size() : elementwise_.size();
}

void WriteTripleFile(std::ostream& out,
                     std::span<const BeaverTripleShare> triples) {
  std::vector<std::uint8_t> bytes;
  const TripleForm form =
      triples.empty() ? TripleForm::kElementwise : triples.front().form;
  const std::size_t dim = triples.empty() ? 0 : triples.front().dim();
  const unsigned bits = triples.empty() ? 64 : triples.front().a.bit_width;
  bytes.push_back(static_cast<std::uint8_t>(form));
  PutLe(bytes, triples.size(), 8);
  PutLe(bytes, dim, 4);
  bytes.push_back(static_cast<std::uint8_t>(bits));
  PutLe(bytes, 0, 2);
  for (const auto& t : triples) {
    if (t.form != form || t.dim() != dim) {
      throw Error(ErrorCode::kInvalidConfig,
                  "a triple file holds a single form and dimension");
    }
    AppendSerialized(t.a, bytes);
    AppendSerialized(t.b, bytes);
    AppendSerialized(t.c, bytes);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<BeaverTripleShare> ReadTripleFile(std::istream& in, Party party) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  if (bytes.size() < kTripleFileHeaderBytes) {
    throw Error(ErrorCode::kMalformedData, "triple file header truncated");
  }
  const auto form = static_cast<TripleForm>(GetLe(bytes, 0, 1));
  if (form != TripleForm::kElementwise && form != TripleForm::kInner) {
    throw Error(ErrorCode::kMalformedData, "unknown triple form");
  }
  const std::uint64_t count = GetLe(bytes, 1, 8);
  const std::uint64_t dim = GetLe(bytes, 9, 4);
  const auto bits = static_cast<unsigned>(GetLe(bytes, 13, 1));
  std::size_t offset = kTripleFileHeaderBytes;
  std::vector<BeaverTripleShare> out;
  for (std::uint64_t t = 0; t < count; ++t) {
    BeaverTripleShare s;
    s.party = party;
    s.form = form;
    s.id = t;
    s.a = Deserialize(bytes, offset);
    s.b = Deserialize(bytes, offset);
    s.c = Deserialize(bytes, offset);
    const std::size_t c_len = form == TripleForm::kInner ? 1 : dim;
    if (s.a.size() != dim || s.b.size() != dim || s.c.size() != c_len ||
        s.a.bit_width != bits) {
      throw Error(ErrorCode::kMalformedData,
                  "triple " + std::to_string(t) + " disagrees with header");
    }
    out.push_back(std::move(s));
  }
  if (offset != bytes.size()) {
    throw Error(ErrorCode::kMalformedData, "trailing bytes in triple file");
  }
  return out;
}

}  // namespace aegis
