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

#include "aegis/three_server.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "aegis/error.hpp"
#include "server_node.hpp"

namespace aegis {

namespace {

using internal::Broadcast;
using internal::Multiply;
using internal::OfKind;
using internal::Pairs;
using internal::ServerNode;

void CheckPrime(std::size_t ell, std::uint64_t prime) {
  if (prime <= ell + 2) {
    throw Error(ErrorCode::kFieldOverflow,
                "field prime " + std::to_string(prime) +
                    " must exceed ell + 2 = " + std::to_string(ell + 2));
  }
}

std::uint64_t FieldAdd(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return (a + b) % p;
}

std::uint64_t FieldSub(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return (a + p - b % p) % p;
}

std::uint64_t FieldMul(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(a) * b) % p);
}

unsigned FieldWidth(std::uint64_t prime) { return prime < 256 ? 8 : 64; }

}  // namespace

BitShares ShareBits(std::uint64_t x, std::size_t ell, std::uint64_t prime,
                    Prg& prg) {
  if (ell == 0 || ell > 64) {
    throw Error(ErrorCode::kInvalidConfig, "bit length must lie in [1, 64]");
  }
  CheckPrime(ell, prime);
  BitShares out;
  out.prime = prime;
  for (std::size_t i = 0; i < ell; ++i) {
    const std::uint64_t bit = (x >> i) & 1U;
    const std::uint64_t r = prg.UniformBelow(prime);
    out.s1.push_back(r);
    out.s2.push_back(FieldSub(bit, r, prime));
  }
  return out;
}

PcCommonRandomness DrawPcRandomness(std::size_t ell, std::uint64_t prime,
                                    Prg& common) {
  PcCommonRandomness cr;
  for (std::size_t i = 0; i < ell; ++i) {
    cr.s.push_back(1 + common.UniformBelow(prime - 1));
    cr.u.push_back(1 + common.UniformBelow(prime - 1));
  }
  cr.perm.resize(ell);
  std::iota(cr.perm.begin(), cr.perm.end(), std::size_t{0});
  for (std::size_t i = ell; i > 1; --i) {
    std::swap(cr.perm[i - 1], cr.perm[common.UniformBelow(i)]);
  }
  return cr;
}

std::vector<std::uint64_t> PrivateCompareMessage(
    int j, std::span<const std::uint64_t> x_bit_shares, std::uint64_t r,
    bool beta, const PcCommonRandomness& cr, std::uint64_t prime) {
  const std::size_t ell = x_bit_shares.size();
  CheckPrime(ell, prime);
  if (j != 0 && j != 1) {
    throw Error(ErrorCode::kPartyMismatch, "server index must be 0 or 1");
  }
  if (cr.s.size() != ell || cr.u.size() != ell || cr.perm.size() != ell) {
    throw Error(ErrorCode::kLengthMismatch, "common randomness length");
  }
  const std::uint64_t all_ones =
      ell == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << ell) - 1;
  if (r > all_ones) {
    throw Error(ErrorCode::kInvalidConfig, "r exceeds ell bits");
  }
  const std::uint64_t p = prime;
  const std::uint64_t jj = static_cast<std::uint64_t>(j);
  const std::uint64_t t = (r + 1) & all_ones;
  std::vector<std::uint64_t> c(ell);
  if (beta && r == all_ones) {
    for (std::size_t i = 0; i < ell; ++i) {
      const std::uint64_t u = cr.u[i] % p;
      if (i != 0) {
        // (1 - j)(u_i + 1) - j u_i
        c[i] = jj == 0 ? FieldAdd(u, 1, p) : FieldSub(0, u, p);
      } else {
        // (-1)^j u_i
        c[i] = jj == 0 ? u : FieldSub(0, u, p);
      }
    }
  } else {
    const std::uint64_t ref = beta ? t : r;
    std::uint64_t higher = 0;  // sum of w_k over k above i
    for (std::size_t idx = ell; idx-- > 0;) {
      const std::uint64_t x = x_bit_shares[idx] % p;
      const std::uint64_t rb = (ref >> idx) & 1U;
      // w_i = x_i + j r_i - 2 r_i x_i
      std::uint64_t w = FieldAdd(x, jj * rb, p);
      w = FieldSub(w, FieldMul(2 * rb, x, p), p);
      if (!beta) {
        // c_i = j r_i - x_i + j + sum
        c[idx] = FieldAdd(FieldSub(jj * rb, x, p), FieldAdd(jj, higher, p), p);
      } else {
        // c_i = -j t_i + x_i + (1 - j) + sum
        c[idx] = FieldAdd(FieldSub(x, jj * rb, p),
                          FieldAdd(1 - jj, higher, p), p);
      }
      higher = FieldAdd(higher, w, p);
    }
  }
  std::vector<std::uint64_t> d(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    d[cr.perm[i]] = FieldMul(cr.s[i] % p, c[i], p);
  }
  return d;
}

bool PrivateCompareResolve(std::span<const std::uint64_t> d1,
                           std::span<const std::uint64_t> d2,
                           std::uint64_t prime) {
  if (d1.size() != d2.size()) {
    throw Error(ErrorCode::kLengthMismatch, "compare messages differ in length");
  }
  for (std::size_t i = 0; i < d1.size(); ++i) {
    if (FieldAdd(d1[i], d2[i], prime) == 0) return true;
  }
  return false;
}

bool PrivateCompare(const BitShares& x, std::uint64_t r, bool beta,
                    Prg& common) {
  if (x.s1.size() != x.s2.size()) {
    throw Error(ErrorCode::kLengthMismatch, "bit shares differ in length");
  }
  CheckPrime(x.ell(), x.prime);
  const PcCommonRandomness cr = DrawPcRandomness(x.ell(), x.prime, common);
  const auto d1 = PrivateCompareMessage(0, x.s1, r, beta, cr, x.prime);
  const auto d2 = PrivateCompareMessage(1, x.s2, r, beta, cr, x.prime);
  return PrivateCompareResolve(d1, d2, x.prime);
}

std::pair<RingVector, RingVector> ZeroShares(unsigned bit_width,
                                             std::size_t dim, Prg& common) {
  const Ring ring(bit_width);
  std::pair<RingVector, RingVector> out{{bit_width, 1, {}}, {bit_width, 1, {}}};
  for (std::size_t k = 0; k < dim; ++k) {
    const std::uint64_t u = common.UniformRing(bit_width);
    out.first.elems.push_back(u);
    out.second.elems.push_back(ring.Neg(u));
  }
  return out;
}

SharePair SelectShare(const SharePair& alpha, const SharePair& x,
                      const SharePair& y,
                      const std::pair<RingVector, RingVector>& zero,
                      BeaverTripleShare& t1, BeaverTripleShare& t2) {
  if (alpha.first.size() != 1 || alpha.second.size() != 1) {
    throw Error(ErrorCode::kLengthMismatch, "selector must be a scalar share");
  }
  const std::size_t dim = x.first.size();
  if (y.first.size() != dim || x.second.size() != dim ||
      y.second.size() != dim || zero.first.size() != dim ||
      zero.second.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "select operands differ in length");
  }
  const SharePair a{Broadcast(alpha.first, dim), Broadcast(alpha.second, dim)};
  const SharePair w{Sub(y.first, x.first), Sub(y.second, x.second)};
  const SharePair c = SecureMultiply(a, w, t1, t2);
  SharePair out{Add(x.first, c.first), Add(x.second, c.second)};
  out.first.vec = Add(out.first.vec, zero.first);
  out.second.vec = Add(out.second.vec, zero.second);
  out.first.vec.scale = x.first.vec.scale;
  out.second.vec.scale = x.second.vec.scale;
  return out;
}

namespace {

// One party's shares of a batch of scalars.
using Scalars = std::vector<std::uint64_t>;

ShareVector Scalar(Party p, unsigned bits, unsigned scale, std::uint64_t v) {
  return {p, {bits, scale, {v}}};
}

std::vector<ShareVector> AsShares(Party p, unsigned bits, unsigned scale,
                                  const Scalars& v) {
  std::vector<ShareVector> out;
  out.reserve(v.size());
  for (std::uint64_t e : v) out.push_back(Scalar(p, bits, scale, e));
  return out;
}

Scalars FromShares(const std::vector<ShareVector>& v) {
  Scalars out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.vec.elems.at(0));
  return out;
}

RingVector OneHot(unsigned bits, std::size_t len, std::size_t at) {
  RingVector v = RingVector::Zeros(bits, 0, len);
  v.elems[at] = 1;
  return v;
}

// Message traffic for one round among S1, S2 and S3. S3 is the helper: it
// deals triples and comparison masks and never holds shares of inputs.
class Engine {
 public:
  Engine(const RingConfig& ring, std::uint64_t prime, std::uint64_t round,
         const Prg& round_prg, Bus& bus, ServerNode& s1, ServerNode& s2)
      : bits_(ring.bit_width),
        ring_(ring.bit_width),
        prime_(prime),
        round_(round),
        s3_(round_prg.Split(kS3Stream)),
        common1_(round_prg.Split(kCommonStream)),
        common2_(round_prg.Split(kCommonStream)),
        bus_(bus),
        s1_(s1),
        s2_(s2) {
    CheckPrime(bits_ - 1, prime_);
  }

  std::size_t comparisons() const { return comparisons_; }
  Prg& s3() { return s3_; }

  // S3 deals triples to both stores ahead of use; not on the bus.
  std::pair<std::vector<ShareVector>, std::vector<ShareVector>> Mul(
      std::span<const ShareVector> x1, std::span<const ShareVector> y1,
      std::span<const ShareVector> x2, std::span<const ShareVector> y2,
      TripleForm form) {
    if (x1.empty()) return {};
    auto batch = DealerMakeTriples(x1.size(), x1.front().size(), form, bits_,
                                   s3_, next_triple_id_);
    next_triple_id_ += x1.size();
    s1_.store().Add(std::move(batch.s1));
    s2_.store().Add(std::move(batch.s2));
    return Multiply(s1_, s2_, x1, y1, x2, y2, form, round_, bus_);
  }

  // Shares of [v < 0] under the signed reading of each v.
  std::pair<Scalars, Scalars> IsNegative(const Scalars& v1, const Scalars& v2) {
    const std::size_t count = v1.size();
    if (count == 0) return {};
    comparisons_ += count;
    const unsigned low_bits = bits_ - 1;
    const std::uint64_t half = std::uint64_t{1} << low_bits;
    const std::uint64_t low_mask = half - 1;
    const unsigned fw = FieldWidth(prime_);

    // S3: ring mask m, bit shares of its low bits over Z_p.
    std::vector<std::uint64_t> m_hi(count);
    RingVector m1{bits_, 0, {}};
    RingVector m2{bits_, 0, {}};
    RingVector b1{fw, 0, {}};
    RingVector b2{fw, 0, {}};
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t m = s3_.UniformRing(bits_);
      const std::uint64_t r = s3_.UniformRing(bits_);
      m1.elems.push_back(r);
      m2.elems.push_back(ring_.Sub(m, r));
      m_hi[k] = m >> low_bits;
      const BitShares bs = ShareBits(m & low_mask, low_bits, prime_, s3_);
      b1.elems.insert(b1.elems.end(), bs.s1.begin(), bs.s1.end());
      b2.elems.insert(b2.elems.end(), bs.s2.begin(), bs.s2.end());
    }
    const RingVector to_s1[] = {m1, b1};
    const RingVector to_s2[] = {m2, b2};
    bus_.Send({round_, PartyId::S3(), PartyId::S1(),
               MessageKind::kSelectionShare, MakePayload(to_s1)});
    bus_.Send({round_, PartyId::S3(), PartyId::S2(),
               MessageKind::kSelectionShare, MakePayload(to_s2)});
    bus_.Flush();
    const auto masks1 = FromS3(PartyId::S1(), 2);
    const auto masks2 = FromS3(PartyId::S2(), 2);

    // S1 and S2: open y = v + 2^(l-1) + m.
    RingVector y1{bits_, 0, {}};
    RingVector y2{bits_, 0, {}};
    for (std::size_t k = 0; k < count; ++k) {
      y1.elems.push_back(
          ring_.Add(ring_.Add(v1[k], half), masks1[0].elems.at(k)));
      y2.elems.push_back(ring_.Add(v2[k], masks2[0].elems.at(k)));
    }
    bus_.Send({round_, PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen,
               MakePayload(y1)});
    bus_.Send({round_, PartyId::S2(), PartyId::S1(), MessageKind::kBlindedOpen,
               MakePayload(y2)});
    bus_.Flush();
    const RingVector y_on_s1 = Add(y1, FromPeer(PartyId::S1(), PartyId::S2()));
    const RingVector y_on_s2 = Add(y2, FromPeer(PartyId::S2(), PartyId::S1()));

    // Both: PrivateCompare of m_lo against y_lo with a common beta.
    std::vector<bool> beta1(count);
    std::vector<bool> beta2(count);
    RingVector d1{fw, 0, {}};
    RingVector d2{fw, 0, {}};
    for (std::size_t k = 0; k < count; ++k) {
      beta1[k] = common1_.Bit();
      const auto cr1 = DrawPcRandomness(low_bits, prime_, common1_);
      const std::span<const std::uint64_t> x1(
          masks1[1].elems.data() + k * low_bits, low_bits);
      const auto msg1 = PrivateCompareMessage(
          0, x1, y_on_s1.elems[k] & low_mask, beta1[k], cr1, prime_);
      d1.elems.insert(d1.elems.end(), msg1.begin(), msg1.end());

      beta2[k] = common2_.Bit();
      const auto cr2 = DrawPcRandomness(low_bits, prime_, common2_);
      const std::span<const std::uint64_t> x2(
          masks2[1].elems.data() + k * low_bits, low_bits);
      const auto msg2 = PrivateCompareMessage(
          1, x2, y_on_s2.elems[k] & low_mask, beta2[k], cr2, prime_);
      d2.elems.insert(d2.elems.end(), msg2.begin(), msg2.end());
    }
    bus_.Send({round_, PartyId::S1(), PartyId::S3(), MessageKind::kPcResponse,
               MakePayload(d1)});
    bus_.Send({round_, PartyId::S2(), PartyId::S3(), MessageKind::kPcResponse,
               MakePayload(d2)});
    bus_.Flush();

    // S3: beta' = beta xor [m_lo > y_lo]; shares s = m_hi xor beta'.
    RingVector got1;
    RingVector got2;
    for (auto& m : OfKind(bus_.TakeInbox(PartyId::S3()),
                          MessageKind::kPcResponse)) {
      (m.from == PartyId::S1() ? got1 : got2) = ParsePayload(m.payload).at(0);
    }
    if (got1.size() != count * low_bits || got2.size() != count * low_bits) {
      throw Error(ErrorCode::kMalformedData, "compare responses incomplete");
    }
    RingVector sh1{bits_, 0, {}};
    RingVector sh2{bits_, 0, {}};
    for (std::size_t k = 0; k < count; ++k) {
      const std::span<const std::uint64_t> a(got1.elems.data() + k * low_bits,
                                             low_bits);
      const std::span<const std::uint64_t> b(got2.elems.data() + k * low_bits,
                                             low_bits);
      const std::uint64_t s =
          m_hi[k] ^ (PrivateCompareResolve(a, b, prime_) ? 1U : 0U);
      const std::uint64_t r = s3_.UniformRing(bits_);
      sh1.elems.push_back(r);
      sh2.elems.push_back(ring_.Sub(s, r));
    }
    bus_.Send({round_, PartyId::S3(), PartyId::S1(),
               MessageKind::kSelectionShare, MakePayload(sh1)});
    bus_.Send({round_, PartyId::S3(), PartyId::S2(),
               MessageKind::kSelectionShare, MakePayload(sh2)});
    bus_.Flush();
    const RingVector s_on_s1 = FromS3(PartyId::S1(), 1).at(0);
    const RingVector s_on_s2 = FromS3(PartyId::S2(), 1).at(0);

    // Both: msb(v + 2^(l-1)) = (y_hi xor beta) xor s; [v < 0] = 1 - msb.
    std::pair<Scalars, Scalars> out;
    for (std::size_t k = 0; k < count; ++k) {
      const bool key1 = ((y_on_s1.elems[k] >> low_bits) & 1U) != beta1[k];
      const bool key2 = ((y_on_s2.elems[k] >> low_bits) & 1U) != beta2[k];
      const std::uint64_t msb1 =
          key1 ? ring_.Sub(1, s_on_s1.elems[k]) : s_on_s1.elems[k];
      const std::uint64_t msb2 =
          key2 ? ring_.Neg(s_on_s2.elems[k]) : s_on_s2.elems[k];
      out.first.push_back(ring_.Sub(1, msb1));
      out.second.push_back(ring_.Neg(msb2));
    }
    return out;
  }

  // Per k: alpha_k ? y_k : x_k, all scalars.
  std::pair<Scalars, Scalars> Select(const std::pair<Scalars, Scalars>& alpha,
                                     const std::pair<Scalars, Scalars>& x,
                                     const std::pair<Scalars, Scalars>& y,
                                     unsigned scale) {
    const std::size_t count = alpha.first.size();
    Scalars w1(count);
    Scalars w2(count);
    for (std::size_t k = 0; k < count; ++k) {
      w1[k] = ring_.Sub(y.first[k], x.first[k]);
      w2[k] = ring_.Sub(y.second[k], x.second[k]);
    }
    auto [c1, c2] = Mul(AsShares(Party::kS1, bits_, 0, alpha.first),
                        AsShares(Party::kS1, bits_, scale, w1),
                        AsShares(Party::kS2, bits_, 0, alpha.second),
                        AsShares(Party::kS2, bits_, scale, w2),
                        TripleForm::kElementwise);
    std::pair<Scalars, Scalars> out;
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t u1 = ZeroShares(bits_, 1, common1_).first.elems[0];
      const std::uint64_t u2 = ZeroShares(bits_, 1, common2_).second.elems[0];
      out.first.push_back(
          ring_.Add(ring_.Add(x.first[k], c1[k].vec.elems[0]), u1));
      out.second.push_back(
          ring_.Add(ring_.Add(x.second[k], c2[k].vec.elems[0]), u2));
    }
    return out;
  }

  // S3 sends shared one-hot vectors; the servers take inner products with a
  // shared vector and re-randomize with zero shares.
  std::pair<Scalars, Scalars> Pick(const std::vector<RingVector>& one_hots,
                                   const ShareVector& v1,
                                   const ShareVector& v2) {
    std::vector<RingVector> a1;
    std::vector<RingVector> a2;
    for (const auto& e : one_hots) {
      RingVector r{bits_, 0, {}};
      for (std::size_t k = 0; k < e.size(); ++k) {
        r.elems.push_back(s3_.UniformRing(bits_));
      }
      a2.push_back(Sub(e, r));
      a1.push_back(std::move(r));
    }
    bus_.Send({round_, PartyId::S3(), PartyId::S1(),
               MessageKind::kSelectionShare, MakePayload(a1)});
    bus_.Send({round_, PartyId::S3(), PartyId::S2(),
               MessageKind::kSelectionShare, MakePayload(a2)});
    bus_.Flush();
    const auto sel1 = FromS3(PartyId::S1(), one_hots.size());
    const auto sel2 = FromS3(PartyId::S2(), one_hots.size());
    std::vector<ShareVector> x1;
    std::vector<ShareVector> x2;
    for (std::size_t k = 0; k < one_hots.size(); ++k) {
      x1.push_back({Party::kS1, sel1[k]});
      x2.push_back({Party::kS2, sel2[k]});
    }
    const std::vector<ShareVector> y1(one_hots.size(), v1);
    const std::vector<ShareVector> y2(one_hots.size(), v2);
    auto [p1, p2] = Mul(x1, y1, x2, y2, TripleForm::kInner);
    std::pair<Scalars, Scalars> out;
    for (std::size_t k = 0; k < one_hots.size(); ++k) {
      const std::uint64_t u1 = ZeroShares(bits_, 1, common1_).first.elems[0];
      const std::uint64_t u2 = ZeroShares(bits_, 1, common2_).second.elems[0];
      out.first.push_back(ring_.Add(p1[k].vec.elems[0], u1));
      out.second.push_back(ring_.Add(p2[k].vec.elems[0], u2));
    }
    return out;
  }

 private:
  std::vector<RingVector> FromS3(PartyId to, std::size_t expected) {
    auto msgs = OfKind(bus_.TakeInbox(to), MessageKind::kSelectionShare);
    if (msgs.size() != 1 || msgs.front().from != PartyId::S3()) {
      throw Error(ErrorCode::kMalformedData,
                  "expected one selection message from S3");
    }
    auto parts = ParsePayload(msgs.front().payload);
    if (parts.size() != expected) {
      throw Error(ErrorCode::kMalformedData, "selection message shape");
    }
    return parts;
  }

  RingVector FromPeer(PartyId to, PartyId from) {
    auto msgs = OfKind(bus_.TakeInbox(to), MessageKind::kBlindedOpen);
    if (msgs.size() != 1 || msgs.front().from != from) {
      throw Error(ErrorCode::kMalformedData, "expected one masked opening");
    }
    return ParsePayload(msgs.front().payload).at(0);
  }

  unsigned bits_;
  Ring ring_;
  std::uint64_t prime_;
  std::uint64_t round_;
  Prg s3_;
  Prg common1_;
  Prg common2_;
  Bus& bus_;
  ServerNode& s1_;
  ServerNode& s2_;
  std::uint64_t next_triple_id_ = 0;
  std::size_t comparisons_ = 0;
};

}  // namespace

ThreeServerSession::ThreeServerSession(RoundConfig cfg, std::uint64_t seed,
                                       std::uint64_t prime)
    : cfg_(std::move(cfg)), root_(seed), prime_(prime) {
  cfg_.Validate();
  if (!std::holds_alternative<MultiKrumRule>(cfg_.rule)) {
    throw Error(ErrorCode::kInvalidConfig,
                "the three-server protocol runs Multi-Krum only");
  }
  CheckPrime(cfg_.ring.bit_width - 1, prime_);
}

ThreeServerResult ThreeServerSession::RunRound(
    std::span<const std::vector<double>> inputs, const RoundOptions& options) {
  if (inputs.size() != cfg_.n) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(cfg_.n) + " worker inputs, got " +
                    std::to_string(inputs.size()));
  }
  const std::size_t dim = inputs.front().size();
  for (const auto& x : inputs) {
    if (x.size() != dim) {
      throw Error(ErrorCode::kLengthMismatch, "worker inputs differ in length");
    }
  }
  if (dim == 0) throw Error(ErrorCode::kLengthMismatch, "empty input vectors");
  const auto& rule = std::get<MultiKrumRule>(cfg_.rule);
  const unsigned bits = cfg_.ring.bit_width;
  const Ring ring(bits);

  const std::uint64_t round = round_++;
  const Prg round_prg = root_.Split(round);
  ThreeServerResult out;
  RoundResult& res = out.round;
  res.round = round;
  Bus bus(res.transcripts, res.traffic);
  ServerNode s1(Party::kS1, round_prg.Split(kS1Stream));
  ServerNode s2(Party::kS2, round_prg.Split(kS2Stream));

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Prg worker_prg = round_prg.Split(kWorkerStreamBase + i);
    auto msgs = WorkerSubmit(i, inputs[i], cfg_.ring, round, worker_prg);
    if (i == 0 && options.fault == Fault::kLeakGradientShareToS3) {
      Message leak = msgs[0];
      leak.to = PartyId::S3();
      bus.Send(std::move(leak));
    }
    for (auto& m : msgs) bus.Send(std::move(m));
  }
  for (std::size_t i : options.drop_at_s1) {
    bus.DropPending(PartyId::Worker(i), PartyId::S1());
  }
  for (std::size_t i : options.drop_at_s2) {
    bus.DropPending(PartyId::Worker(i), PartyId::S2());
  }
  bus.Flush();
  s1.CollectUploads(bus.TakeInbox(s1.id()));
  s2.CollectUploads(bus.TakeInbox(s2.id()));
  bus.TakeInbox(PartyId::S3());

  bus.Send(s1.IndexSetMessage(round));
  bus.Send(s2.IndexSetMessage(round));
  bus.Flush();
  s1.AgreeOnParticipants(bus.TakeInbox(s1.id()));
  s2.AgreeOnParticipants(bus.TakeInbox(s2.id()));
  const std::vector<std::size_t> ids = s1.participants();
  if (ids != s2.participants()) {
    throw Error(ErrorCode::kMalformedData, "servers disagree on participants");
  }
  const std::size_t n = ids.size();
  if (n < rule.f + 3) {
    throw Error(ErrorCode::kTooFewWorkers,
                "Multi-Krum needs n >= f + 3 participants");
  }
  if (rule.m < 1 || rule.m > n - rule.f) {
    throw Error(ErrorCode::kInvalidConfig, "Multi-Krum needs 1 <= m <= n - f");
  }
  const std::size_t neighbours = n - rule.f - 2;
  cfg_.ring.CheckDistanceCapacity(dim, neighbours);
  res.participants = ids;
  for (std::size_t i : ids) {
    res.encoded_inputs.push_back(EncodeFixed(inputs[i], cfg_.ring));
  }
  const std::vector<ShareVector> x1 = s1.ParticipantShares();
  const std::vector<ShareVector> x2 = s2.ParticipantShares();

  Engine engine(cfg_.ring, prime_, round, round_prg, bus, s1, s2);

  // Shared squared distances, never opened.
  const auto pairs = Pairs(n);
  const std::size_t pair_count = pairs.size();
  std::vector<ShareVector> diff1;
  std::vector<ShareVector> diff2;
  for (const auto& [a, b] : pairs) {
    diff1.push_back(Sub(x1[a], x1[b]));
    diff2.push_back(Sub(x2[a], x2[b]));
  }
  auto [dd1, dd2] =
      engine.Mul(diff1, diff1, diff2, diff2, TripleForm::kInner);
  ShareVector dist1{Party::kS1, {bits, 2, FromShares(dd1)}};
  ShareVector dist2{Party::kS2, {bits, 2, FromShares(dd2)}};
  auto pair_slot = [&](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return static_cast<std::size_t>(
        std::find_if(pairs.begin(), pairs.end(),
                     [&](const auto& p) { return p.a == a && p.b == b; }) -
        pairs.begin());
  };

  // S3 permutes the rows and, within each row, the neighbours.
  std::vector<std::size_t> row_perm(n);
  std::iota(row_perm.begin(), row_perm.end(), std::size_t{0});
  std::shuffle(row_perm.begin(), row_perm.end(), engine.s3());
  std::vector<RingVector> hots;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t row = row_perm[t];
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != row) cols.push_back(j);
    }
    std::shuffle(cols.begin(), cols.end(), engine.s3());
    for (std::size_t j : cols) {
      hots.push_back(OneHot(bits, pair_count, pair_slot(row, j)));
    }
  }
  auto [flat1, flat2] = engine.Pick(hots, dist1, dist2);

  // Oblivious k smallest per row: k bubble passes push the minimum of the
  // unsorted prefix to its end. All rows advance in lockstep.
  const std::size_t width = n - 1;
  std::vector<Scalars> row1(n);
  std::vector<Scalars> row2(n);
  for (std::size_t t = 0; t < n; ++t) {
    row1[t].assign(flat1.begin() + t * width, flat1.begin() + (t + 1) * width);
    row2[t].assign(flat2.begin() + t * width, flat2.begin() + (t + 1) * width);
  }
  for (std::size_t pass = 0; pass < neighbours; ++pass) {
    for (std::size_t pos = 0; pos + 1 + pass < width; ++pos) {
      std::pair<Scalars, Scalars> left;
      std::pair<Scalars, Scalars> right;
      std::pair<Scalars, Scalars> diff;
      for (std::size_t t = 0; t < n; ++t) {
        left.first.push_back(row1[t][pos]);
        left.second.push_back(row2[t][pos]);
        right.first.push_back(row1[t][pos + 1]);
        right.second.push_back(row2[t][pos + 1]);
        diff.first.push_back(ring.Sub(row1[t][pos], row1[t][pos + 1]));
        diff.second.push_back(ring.Sub(row2[t][pos], row2[t][pos + 1]));
      }
      const auto swap = engine.IsNegative(diff.first, diff.second);
      const auto new_left = engine.Select(swap, left, right, 2);
      for (std::size_t t = 0; t < n; ++t) {
        const std::uint64_t sum1 = ring.Add(left.first[t], right.first[t]);
        const std::uint64_t sum2 = ring.Add(left.second[t], right.second[t]);
        row1[t][pos] = new_left.first[t];
        row2[t][pos] = new_left.second[t];
        row1[t][pos + 1] = ring.Sub(sum1, new_left.first[t]);
        row2[t][pos + 1] = ring.Sub(sum2, new_left.second[t]);
      }
    }
  }
  ShareVector perm_score1{Party::kS1, {bits, 2, {}}};
  ShareVector perm_score2{Party::kS2, {bits, 2, {}}};
  for (std::size_t t = 0; t < n; ++t) {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    for (std::size_t q = width - neighbours; q < width; ++q) {
      a = ring.Add(a, row1[t][q]);
      b = ring.Add(b, row2[t][q]);
    }
    perm_score1.vec.elems.push_back(a);
    perm_score2.vec.elems.push_back(b);
  }

  // S3 undoes the row permutation through shared one-hot vectors.
  std::vector<RingVector> unperm;
  for (std::size_t i = 0; i < n; ++i) {
    const auto at = static_cast<std::size_t>(
        std::find(row_perm.begin(), row_perm.end(), i) - row_perm.begin());
    unperm.push_back(OneHot(bits, n, at));
  }
  const auto [score1, score2] = engine.Pick(unperm, perm_score1, perm_score2);

  // Ranks with ties going to the lower index; selected iff rank < m.
  Scalars cmp1;
  Scalars cmp2;
  for (const auto& [i, j] : pairs) {
    cmp1.push_back(ring.Sub(score1[j], score1[i]));
    cmp2.push_back(ring.Sub(score2[j], score2[i]));
  }
  const auto [g1, g2] = engine.IsNegative(cmp1, cmp2);
  Scalars rank1(n, 0);
  Scalars rank2(n, 0);
  for (std::size_t k = 0; k < pair_count; ++k) {
    const auto [i, j] = pairs[k];
    rank1[i] = ring.Add(rank1[i], g1[k]);
    rank2[i] = ring.Add(rank2[i], g2[k]);
    rank1[j] = ring.Add(rank1[j], ring.Sub(1, g1[k]));
    rank2[j] = ring.Add(rank2[j], ring.Neg(g2[k]));
  }
  Scalars below1(n);
  Scalars below2(n);
  for (std::size_t i = 0; i < n; ++i) {
    below1[i] = ring.Sub(rank1[i], rule.m);
    below2[i] = rank2[i];
  }
  const auto [sel1, sel2] = engine.IsNegative(below1, below2);

  // z = sum_i sel_i x_i, opened to S1 and S2.
  std::vector<ShareVector> w1;
  std::vector<ShareVector> w2;
  for (std::size_t i = 0; i < n; ++i) {
    w1.push_back(Broadcast(Scalar(Party::kS1, bits, 0, sel1[i]), dim));
    w2.push_back(Broadcast(Scalar(Party::kS2, bits, 0, sel2[i]), dim));
  }
  auto [px1, px2] = engine.Mul(w1, x1, w2, x2, TripleForm::kElementwise);
  ShareVector z1{Party::kS1, RingVector::Zeros(bits, 1, dim)};
  ShareVector z2{Party::kS2, RingVector::Zeros(bits, 1, dim)};
  for (std::size_t i = 0; i < n; ++i) {
    z1 = Add(z1, px1[i]);
    z2 = Add(z2, px2[i]);
  }
  bus.Send({round, PartyId::S1(), PartyId::S2(), MessageKind::kAggregateShare,
            MakePayload(z1.vec)});
  bus.Send({round, PartyId::S2(), PartyId::S1(), MessageKind::kAggregateShare,
            MakePayload(z2.vec)});
  bus.Flush();
  auto open = [&](PartyId self, const ShareVector& mine) {
    auto agg = OfKind(bus.TakeInbox(self), MessageKind::kAggregateShare);
    if (agg.size() != 1) {
      throw Error(ErrorCode::kMalformedData, "expected one aggregate share");
    }
    RingVector z = Add(mine.vec, ParsePayload(agg.front().payload).at(0));
    z.scale = 1;
    res.transcripts.Get(self).reveals.push_back({round, "z", z});
    return z;
  };
  res.z = open(PartyId::S1(), z1);
  if (open(PartyId::S2(), z2) != res.z) {
    throw Error(ErrorCode::kMalformedData, "servers opened different sums");
  }

  res.p.p.assign(cfg_.n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    res.p.p[ids[i]] = ring.Add(sel1[i], sel2[i]);
  }
  res.update = DecodeFixed(res.z, cfg_.ring);
  if (cfg_.average) {
    for (double& v : res.update) v /= static_cast<double>(rule.m);
  }

  for (std::size_t i = 0; i < cfg_.n; ++i) {
    bus.Send({round, PartyId::S1(), PartyId::Worker(i),
              MessageKind::kModelBroadcast, MakePayload(res.z)});
  }
  bus.Flush();
  for (std::size_t i = 0; i < cfg_.n; ++i) bus.TakeInbox(PartyId::Worker(i));
  out.comparisons = engine.comparisons();
  return out;
}

ThreeServerResult ThreeServerMultiKrum(
    std::span<const std::vector<double>> inputs, const RoundConfig& cfg,
    Prg& prg, const ThreeServerOptions& options) {
  ThreeServerSession session(cfg, prg(), options.prime);
  return session.RunRound(inputs, options.round);
}

}  // namespace aegis
