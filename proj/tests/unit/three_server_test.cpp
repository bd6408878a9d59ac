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

#include <gtest/gtest.h>

#include <vector>

#include "aegis/audit.hpp"
#include "aegis/error.hpp"
#include "aegis/mpc.hpp"
#include "aegis/prg.hpp"
#include "aegis/protocol.hpp"
#include "aegis/three_server.hpp"
#include "reference.hpp"

namespace aegis {
namespace {

using Inputs = std::vector<std::vector<double>>;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an aegis::Error";
  return ErrorCode::kInvalidConfig;
}

RoundConfig Config(std::size_t n, std::size_t f, std::size_t m,
                   RingConfig ring = {16, 2, 4.0}) {
  RoundConfig cfg;
  cfg.n = n;
  cfg.alpha = 0.4;
  cfg.rule = MultiKrumRule{f, m};
  cfg.ring = ring;
  return cfg;
}

Inputs RandomInputs(std::size_t n, std::size_t dim, double bound, Prg& prg) {
  Inputs xs(n, std::vector<double>(dim));
  for (auto& x : xs) {
    for (double& v : x) v = prg.UniformReal(-bound, bound);
  }
  return xs;
}

TEST(ShareBits, ReconstructsToBits) {
  Prg prg(1);
  for (std::uint64_t x = 0; x < 64; ++x) {
    const BitShares b = ShareBits(x, 6, 67, prg);
    ASSERT_EQ(b.ell(), 6U);
    for (std::size_t i = 0; i < 6; ++i) {
      ASSERT_LT(b.s1[i], 67U);
      ASSERT_LT(b.s2[i], 67U);
      ASSERT_EQ((b.s1[i] + b.s2[i]) % 67, (x >> i) & 1U);
    }
  }
  EXPECT_EQ(CodeOf([&] { ShareBits(1, 0, 67, prg); }), ErrorCode::kInvalidConfig);
}

TEST(PrivateCompare, ExampleFiveAboveThree) {
  Prg prg(2);
  Prg common(3);
  EXPECT_TRUE(oracle::BitwiseGreater(5, 3, 3));
  EXPECT_TRUE(PrivateCompare(ShareBits(5, 3, 67, prg), 3, false, common));
}

TEST(PrivateCompare, EqualInputsReturnBeta) {
  Prg prg(4);
  Prg common(5);
  for (std::uint64_t x = 0; x < 16; ++x) {
    for (bool beta : {false, true}) {
      ASSERT_EQ(PrivateCompare(ShareBits(x, 4, 67, prg), x, beta, common), beta);
    }
  }
}

TEST(PrivateCompare, ExhaustiveSmallWidths) {
  Prg prg(6);
  Prg common(7);
  for (std::size_t ell = 2; ell <= 4; ++ell) {
    const std::uint64_t top = 1ULL << ell;
    for (std::uint64_t x = 0; x < top; ++x) {
      for (std::uint64_t r = 0; r < top; ++r) {
        for (bool beta : {false, true}) {
          const bool expect = beta != oracle::BitwiseGreater(x, r, ell);
          ASSERT_EQ(expect, beta != (x > r));
          ASSERT_EQ(PrivateCompare(ShareBits(x, ell, 67, prg), r, beta, common), expect)
              << "ell=" << ell << " x=" << x << " r=" << r << " beta=" << beta;
        }
      }
    }
  }
}

TEST(PrivateCompare, RandomSixteenBitInputs) {
  Prg prg(8);
  Prg common(9);
  for (int t = 0; t < 2000; ++t) {
    const std::uint64_t x = prg.UniformRing(16);
    const std::uint64_t r = t % 10 == 0 ? x : prg.UniformRing(16);
    const bool beta = prg.Bit();
    ASSERT_EQ(PrivateCompare(ShareBits(x, 16, 67, prg), r, beta, common), beta != (x > r));
  }
}

TEST(PrivateCompare, MessagesFromOneServerLookRandom) {
  // S3 sees a permuted, masked vector; a single server's message on its own
  // carries no usable structure: every entry is below p.
  Prg prg(10);
  Prg common(11);
  const BitShares b = ShareBits(9, 5, 67, prg);
  const auto cr = DrawPcRandomness(5, 67, common);
  const auto d1 = PrivateCompareMessage(0, b.s1, 4, false, cr, 67);
  const auto d2 = PrivateCompareMessage(1, b.s2, 4, false, cr, 67);
  ASSERT_EQ(d1.size(), 5U);
  for (std::uint64_t v : d1) EXPECT_LT(v, 67U);
  EXPECT_TRUE(PrivateCompareResolve(d1, d2, 67));
  EXPECT_EQ(cr.perm.size(), 5U);
  for (std::uint64_t s : cr.s) EXPECT_NE(s, 0U);
}

TEST(PrivateCompare, SmallPrimeIsFieldOverflow) {
  Prg prg(12);
  Prg common(13);
  EXPECT_EQ(CodeOf([&] { PrivateCompare(ShareBits(1, 3, 5, prg), 0, false, common); }),
            ErrorCode::kFieldOverflow);
  EXPECT_NO_THROW(PrivateCompare(ShareBits(1, 3, 7, prg), 0, false, common));
}

TEST(PrivateCompare, RejectsMalformedArguments) {
  Prg prg(14);
  Prg common(15);
  const BitShares b = ShareBits(3, 3, 67, prg);
  const auto cr = DrawPcRandomness(3, 67, common);
  EXPECT_EQ(CodeOf([&] { PrivateCompareMessage(2, b.s1, 1, false, cr, 67); }),
            ErrorCode::kPartyMismatch);
  EXPECT_EQ(CodeOf([&] { PrivateCompareMessage(0, b.s1, 8, false, cr, 67); }),
            ErrorCode::kInvalidConfig);
  const std::vector<std::uint64_t> one{1};
  const std::vector<std::uint64_t> two{1, 2};
  EXPECT_EQ(CodeOf([&] { PrivateCompareResolve(one, two, 67); }),
            ErrorCode::kLengthMismatch);
}

TEST(ZeroShares, SumToZero) {
  Prg common(16);
  const auto [u1, u2] = ZeroShares(16, 7, common);
  EXPECT_EQ(Reconstruct({Party::kS1, u1}, {Party::kS2, u2}).elems,
            std::vector<std::uint64_t>(7, 0));
}

SharePair SelectOnce(std::uint64_t alpha, const RingVector& x, const RingVector& y,
                     Prg& prg) {
  const unsigned bw = x.bit_width;
  auto batch = DealerMakeTriples(1, x.size(), TripleForm::kElementwise, bw, prg);
  Prg common = prg.Split(prg());
  return SelectShare(Share(RingVector{bw, 0, {alpha}}, prg), Share(x, prg),
                     Share(y, prg), ZeroShares(bw, x.size(), common), batch.s1[0],
                     batch.s2[0]);
}

TEST(SelectShare, AlphaZeroAndOne) {
  Prg prg(17);
  const RingVector x{16, 1, {1, 2, 3}};
  const RingVector y{16, 1, {9, 8, 7}};
  auto zero = SelectOnce(0, x, y, prg);
  auto one = SelectOnce(1, x, y, prg);
  EXPECT_EQ(Reconstruct(zero.first, zero.second), x);
  EXPECT_EQ(Reconstruct(one.first, one.second), y);
}

TEST(SelectShare, MatchesPlaintextMux) {
  Prg prg(18);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t dim = 1 + prg.UniformBelow(6);
    RingVector x{16, 1, {}};
    RingVector y{16, 1, {}};
    for (std::size_t k = 0; k < dim; ++k) {
      x.elems.push_back(prg.UniformRing(16));
      y.elems.push_back(prg.UniformRing(16));
    }
    const std::uint64_t alpha = t % 2;
    auto out = SelectOnce(alpha, x, y, prg);
    ASSERT_EQ(Reconstruct(out.first, out.second), alpha ? y : x);
  }
}

TEST(SelectShare, RejectsShapeErrors) {
  Prg prg(19);
  const RingVector x{16, 1, {1, 2}};
  const RingVector y{16, 1, {3}};
  EXPECT_EQ(CodeOf([&] { SelectOnce(1, x, y, prg); }), ErrorCode::kDimensionMismatch);
  auto batch = DealerMakeTriples(1, 2, TripleForm::kElementwise, 16, prg);
  Prg common(1);
  EXPECT_EQ(CodeOf([&] {
              SelectShare(Share(RingVector{16, 0, {1, 0}}, prg), Share(x, prg),
                          Share(x, prg), ZeroShares(16, 2, common), batch.s1[0],
                          batch.s2[0]);
            }),
            ErrorCode::kLengthMismatch);
}

TEST(ThreeServer, IdenticalInputsSelectFirstIndices) {
  const Inputs xs(5, std::vector<double>{0.5, -0.25});
  ThreeServerSession session(Config(5, 1, 3), 1);
  const auto r = session.RunRound(xs);
  EXPECT_EQ(r.round.p.p, (std::vector<std::uint64_t>{1, 1, 1, 0, 0}));
  EXPECT_EQ(r.round.update, xs[0]);
  EXPECT_GT(r.comparisons, 0U);
}

TEST(ThreeServer, PlantedOutlierMatchesTwoServer) {
  const Inputs xs{{0.0, 0.0}, {0.25, 0.0}, {0.0, 0.25}, {3.5, -3.5}};
  const RoundConfig cfg = Config(4, 1, 3);
  ThreeServerSession three(cfg, 2);
  TwoServerSession two(cfg, 2);
  const auto r3 = three.RunRound(xs);
  const auto r2 = two.RunRound(xs);
  EXPECT_EQ(r3.round.p.p, (std::vector<std::uint64_t>{1, 1, 1, 0}));
  EXPECT_EQ(r3.round.p, r2.p);
  EXPECT_EQ(r3.round.z, r2.z);
}

TEST(ThreeServer, EquivalentToTwoServerOnRandomInstances) {
  Prg prg(20);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 3 + prg.UniformBelow(4);
    const std::size_t dim = 1 + prg.UniformBelow(8);
    const std::size_t f = prg.UniformBelow(n - 2);
    const std::size_t m = 1 + prg.UniformBelow(n - f);
    const RoundConfig cfg = Config(n, f, m);
    const Inputs xs = RandomInputs(n, dim, cfg.ring.bound, prg);
    ThreeServerSession three(cfg, prg());
    TwoServerSession two(cfg, prg());
    const auto r3 = three.RunRound(xs);
    const auto r2 = two.RunRound(xs);
    ASSERT_EQ(r3.round.z, r2.z) << "instance " << t;
    ASSERT_EQ(r3.round.p, r2.p) << "instance " << t;
    oracle::RuleOracle rule{oracle::RuleKind::kMultiKrum, f, m, 0, 0, 0};
    std::vector<std::vector<std::uint64_t>> enc;
    for (const auto& x : xs) enc.push_back(oracle::Encode(x, 2, 16));
    ASSERT_EQ(r3.round.z.elems, oracle::ExpectedAggregate(enc, rule, 16).z);
  }
}

TEST(ThreeServer, ViewsHideDistancesAndInputs) {
  Prg prg(21);
  const RoundConfig cfg = Config(5, 1, 2);
  ThreeServerSession session(cfg, 3);
  const auto r = session.RunRound(RandomInputs(5, 3, 1.0, prg));
  const auto report = AuditViews(r.round.transcripts, {ProtocolKind::kThreeServer, "multikrum"});
  EXPECT_TRUE(report.Passed()) << report.Summary();
  ASSERT_NE(report.Find("s12_no_distances"), nullptr);
  ASSERT_NE(report.Find("s3_no_inputs"), nullptr);
  for (PartyId id : {PartyId::S1(), PartyId::S2(), PartyId::S3()}) {
    for (const auto& m : r.round.transcripts.Find(id)->received) {
      EXPECT_NE(m.kind, MessageKind::kDistanceReveal);
    }
  }
  for (const auto& m : r.round.transcripts.Find(PartyId::S3())->received) {
    EXPECT_NE(m.kind, MessageKind::kShareUpload);
  }
}

TEST(ThreeServer, LeakedShareToS3FailsAudit) {
  Prg prg(22);
  ThreeServerSession session(Config(4, 1, 2), 4);
  RoundOptions opt;
  opt.fault = Fault::kLeakGradientShareToS3;
  const auto r = session.RunRound(RandomInputs(4, 3, 1.0, prg), opt);
  const auto report = AuditViews(r.round.transcripts, {ProtocolKind::kThreeServer, "multikrum"});
  EXPECT_FALSE(report.Passed());
  EXPECT_FALSE(report.Find("s3_no_inputs")->passed);
}

TEST(ThreeServer, SupportsDropout) {
  Prg prg(23);
  const Inputs xs = RandomInputs(5, 2, 1.0, prg);
  RoundOptions opt;
  opt.drop_at_s2 = {1};
  ThreeServerSession three(Config(5, 1, 2), 5);
  TwoServerSession two(Config(5, 1, 2), 5);
  const auto r3 = three.RunRound(xs, opt);
  const auto r2 = two.RunRound(xs, opt);
  EXPECT_EQ(r3.round.participants, (std::vector<std::size_t>{0, 2, 3, 4}));
  EXPECT_EQ(r3.round.z, r2.z);
  EXPECT_EQ(r3.round.p.p[1], 0U);
}

TEST(ThreeServer, RejectsOtherRulesAndSmallPrimes) {
  RoundConfig mean = Config(4, 0, 1);
  mean.rule = MeanRule{};
  EXPECT_EQ(CodeOf([&] { ThreeServerSession(mean, 1); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { ThreeServerSession(Config(4, 1, 2), 1, 17); }),
            ErrorCode::kFieldOverflow);
  EXPECT_EQ(CodeOf([&] { ThreeServerSession(Config(3, 1, 1), 1); }),
            ErrorCode::kTooFewWorkers);
  Prg prg(24);
  EXPECT_EQ(CodeOf([&] {
              ThreeServerMultiKrum(RandomInputs(4, 40, 1.0, prg), Config(4, 1, 2), prg);
            }),
            ErrorCode::kOverflowRisk);
}

}  // namespace
}  // namespace aegis
