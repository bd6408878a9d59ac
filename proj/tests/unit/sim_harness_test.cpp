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

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "aegis/error.hpp"
#include "aegis/message.hpp"
#include "aegis/prg.hpp"
#include "aegis/sim/attack.hpp"
#include "aegis/sim/bench.hpp"
#include "aegis/sim/config.hpp"
#include "aegis/sim/train.hpp"

namespace aegis::sim {
namespace {

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

RoundConfig Round(std::size_t n, AggregationRule rule, RingConfig ring = {}) {
  RoundConfig cfg;
  cfg.n = n;
  cfg.alpha = 0.2;
  cfg.rule = rule;
  cfg.ring = ring;
  return cfg;
}

AttackSpec Attack(AttackKind kind, std::vector<std::size_t> byz) {
  AttackSpec a;
  a.kind = kind;
  a.byz_indices = std::move(byz);
  return a;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (value == nullptr) {
      ::unsetenv(name);
    } else {
      ::setenv(name, value, 1);
    }
  }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

TEST(Attack, NoneIsIdentity) {
  Prg prg(1);
  const std::vector<double> x{1.0, -2.0};
  EXPECT_EQ(ApplyAttack(x, Attack(AttackKind::kNone, {0}), 0, prg), x);
}

TEST(Attack, SignFlipScales) {
  Prg prg(2);
  AttackSpec a = Attack(AttackKind::kSignFlip, {0});
  a.factor = 10.0;
  const std::vector<double> x{1.0, -2.0};
  EXPECT_EQ(ApplyAttack(x, a, 0, prg), (std::vector<double>{-10.0, 20.0}));
  EXPECT_EQ(ApplyAttack(x, a, 1, prg), x);
}

TEST(Attack, LargeValueSitsExactlyOnTheBound) {
  Prg prg(3);
  const RingConfig ring{};
  AttackSpec a = Attack(AttackKind::kLargeValue, {1});
  a.magnitude = ring.bound;
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto y = ApplyAttack(x, a, 1, prg);
  EXPECT_EQ(y, std::vector<double>(3, ring.bound));
  EXPECT_EQ(DecodeFixed(EncodeFixed(y, ring), ring), y);
  a.magnitude = std::nextafter(ring.bound, 1e9);
  const auto over = ApplyAttack(x, a, 1, prg);
  EXPECT_EQ(CodeOf([&] { EncodeFixed(over, ring); }), ErrorCode::kCoordinateOutOfBound);
}

TEST(Attack, GaussianAndShift) {
  Prg prg(4);
  AttackSpec g = Attack(AttackKind::kRandomGaussian, {0});
  g.sigma = 2.0;
  const std::vector<double> x(20000, 5.0);
  const auto y = ApplyAttack(x, g, 0, prg);
  double sum = 0.0;
  double sq = 0.0;
  for (double v : y) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / y.size();
  EXPECT_NEAR(mean, 0.0, 0.1);
  EXPECT_NEAR(sq / y.size() - mean * mean, 4.0, 0.2);
  AttackSpec s = Attack(AttackKind::kColludeShift, {0});
  s.shift = {1.0, -1.0};
  const std::vector<double> two{0.5, 0.5};
  EXPECT_EQ(ApplyAttack(two, s, 0, prg), (std::vector<double>{1.5, -0.5}));
  s.shift = {1.0};
  EXPECT_EQ(CodeOf([&] { ApplyAttack(two, s, 0, prg); }), ErrorCode::kInvalidConfig);
}

TEST(Attack, ValidateLimitsByzantineCount) {
  EXPECT_NO_THROW(Attack(AttackKind::kSignFlip, {0, 1}).Validate(10, 0.2));
  EXPECT_EQ(CodeOf([] { Attack(AttackKind::kSignFlip, {0, 1, 2}).Validate(10, 0.2); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { Attack(AttackKind::kSignFlip, {10}).Validate(10, 0.3); }),
            ErrorCode::kInvalidConfig);
  for (AttackKind k : {AttackKind::kNone, AttackKind::kSignFlip, AttackKind::kLargeValue,
                       AttackKind::kRandomGaussian, AttackKind::kColludeShift}) {
    EXPECT_EQ(ParseAttackKind(AttackName(k)), k);
  }
  EXPECT_EQ(CodeOf([] { ParseAttackKind("bogus"); }), ErrorCode::kInvalidConfig);
}

TEST(Data, SeededAndLabelSkewed) {
  TrainTask task;
  task.dim = 4;
  task.samples_per_worker = 16;
  Prg a(5);
  Prg b(5);
  const auto da = MakeData(task, 3, a);
  const auto db = MakeData(task, 3, b);
  EXPECT_EQ(da.w_star, db.w_star);
  EXPECT_EQ(da.shards[2].labels, db.shards[2].labels);
  task.sharding = Sharding::kLabelSkew;
  Prg c(5);
  const auto skew = MakeData(task, 4, c);
  ASSERT_EQ(skew.shards.size(), 4U);
  // Sorted labels: the first shard holds the lowest labels.
  for (double v : skew.shards[0].labels) {
    for (double u : skew.shards[3].labels) EXPECT_LE(v, u);
  }
}

TEST(Data, GradientMatchesFiniteDifferences) {
  for (ModelKind model : {ModelKind::kLinearRegression, ModelKind::kLogisticRegression}) {
    TrainTask task;
    task.model = model;
    task.dim = 3;
    Prg prg(6);
    const auto data = MakeData(task, 1, prg);
    const std::vector<double> w{0.1, -0.2, 0.3};
    const auto g = Gradient(model, data.shards[0], w);
    for (std::size_t k = 0; k < 3; ++k) {
      auto hi = w;
      auto lo = w;
      hi[k] += 1e-6;
      lo[k] -= 1e-6;
      const double fd = (Loss(model, data.shards, hi) - Loss(model, data.shards, lo)) / 2e-6;
      EXPECT_NEAR(g[k], fd, 1e-5) << ModelName(model) << " k=" << k;
    }
  }
}

TEST(Train, PlainAndTwoServerTrajectoriesAreIdentical) {
  TrainTask task;
  task.model = ModelKind::kLinearRegression;
  task.dim = 6;
  task.rounds = 8;
  task.eta = 0.1;
  const RoundConfig cfg = Round(5, MeanRule{});
  const AttackSpec none;
  const auto plain = Train(task, cfg, none, ProtocolKind::kPlain, 11);
  const auto two = Train(task, cfg, none, ProtocolKind::kTwoServer, 11);
  ASSERT_EQ(plain.rounds.size(), two.rounds.size());
  for (std::size_t r = 0; r < plain.rounds.size(); ++r) {
    EXPECT_EQ(plain.rounds[r].loss, two.rounds[r].loss) << "round " << r;
  }
  EXPECT_EQ(plain.weights, two.weights);
  EXPECT_TRUE(two.audits_passed);
  EXPECT_LT(two.final_loss, two.initial_loss);
}

TEST(Train, MultiKrumResistsSignFlip) {
  TrainTask task;
  task.rounds = 15;
  RoundConfig cfg = Round(10, MultiKrumRule{2, 7});
  AttackSpec a = Attack(AttackKind::kSignFlip, {0, 1});
  a.factor = 10.0;
  const auto robust = Train(task, cfg, a, ProtocolKind::kTwoServer, 3);
  cfg.rule = MeanRule{};
  const auto mean = Train(task, cfg, a, ProtocolKind::kTwoServer, 3);
  EXPECT_LT(robust.final_loss, mean.final_loss);
  for (const auto& m : robust.rounds) {
    for (std::size_t i : m.selected) EXPECT_GE(i, 2U);
  }
}

TEST(Train, ByzSgdAbortsAreRecordedAndSkipped) {
  TrainTask task;
  task.rounds = 3;
  const RoundConfig cfg =
      Round(5, ByzSgdRule{ByzSgdParams::FromReal(0.0, 0.0, 0.0, RingConfig{})});
  const auto r = Train(task, cfg, AttackSpec{}, ProtocolKind::kTwoServer, 4);
  EXPECT_EQ(r.aborted_rounds, 3U);
  for (const auto& m : r.rounds) {
    EXPECT_TRUE(m.aborted);
    EXPECT_FALSE(m.abort_reason.empty());
    EXPECT_DOUBLE_EQ(m.loss, r.initial_loss);
  }
}

TEST(Train, CsvIsDeterministic) {
  TrainTask task;
  task.rounds = 4;
  const RoundConfig cfg = Round(5, MultiKrumRule{1, 3});
  std::string text[2];
  for (auto& t : text) {
    std::ostringstream out;
    WriteTrainCsvHeader(out);
    WriteTrainCsvRows(out, Train(task, cfg, AttackSpec{}, ProtocolKind::kTwoServer, 9), 9);
    t = out.str();
  }
  EXPECT_EQ(text[0], text[1]);
  EXPECT_EQ(text[0].substr(0, text[0].find('\n')),
            "seed,round,loss,aborted,selected,audit,clipped,max_grad_norm,w2s_bytes,"
            "s2s_bytes");
  EXPECT_EQ(std::count(text[0].begin(), text[0].end(), '\n'), 5);
}

TEST(Train, KeepsTranscriptsOnRequest) {
  TrainTask task;
  task.rounds = 2;
  TrainOptions opt;
  opt.keep_transcripts = true;
  const auto a = Train(task, Round(5, MeanRule{}), AttackSpec{}, ProtocolKind::kTwoServer, 1, opt);
  const auto b = Train(task, Round(5, MeanRule{}), AttackSpec{}, ProtocolKind::kTwoServer, 1, opt);
  EXPECT_FALSE(a.transcripts.parties().empty());
  EXPECT_EQ(a.transcripts, b.transcripts);
}

TEST(Train, ThreeServerMatchesTwoServer) {
  TrainTask task;
  task.rounds = 3;
  task.dim = 4;
  const RoundConfig cfg = Round(5, MultiKrumRule{1, 3}, RingConfig{32, 8, 4.0});
  const auto two = Train(task, cfg, AttackSpec{}, ProtocolKind::kTwoServer, 2);
  const auto three = Train(task, cfg, AttackSpec{}, ProtocolKind::kThreeServer, 2);
  EXPECT_EQ(two.weights, three.weights);
  EXPECT_TRUE(three.audits_passed);
}

TEST(Bench, UplinkIsTwicePlaintextPlusHeaders) {
  BenchConfig cfg;
  cfg.n = 4;
  cfg.dim = 300;
  const BenchReport r = Bench(cfg);
  const std::uint64_t expect = 2 * (Message::kHeaderBytes + kVectorHeaderBytes + 8 * 300);
  EXPECT_EQ(r.worker_uplink_bytes, expect);
  EXPECT_EQ(r.plain_uplink_bytes, 8U * 300U);
  EXPECT_EQ(r.w2s_bytes, 4 * expect);
  EXPECT_DOUBLE_EQ(r.UplinkRatio(), static_cast<double>(expect) / 2400.0);
}

TEST(Bench, BlindedOpensGrowQuadratically) {
  for (std::size_t n : {4UL, 5UL, 7UL}) {
    BenchConfig cfg;
    cfg.n = n;
    cfg.dim = 50;
    cfg.rule = MultiKrumRule{1, 2};
    const BenchReport r = Bench(cfg);
    const std::uint64_t open = Message::kHeaderBytes + 2 * (kVectorHeaderBytes + 8 * 50);
    // Each distance opens 2d elements; each weight product opens 2d more.
    EXPECT_EQ(r.s2s_blinded_open_bytes, (n * (n - 1) / 2 + n) * open) << n;
    EXPECT_GT(r.s2s_bytes, 2 * r.s2s_blinded_open_bytes);
  }
  BenchConfig mean;
  mean.rule = MeanRule{};
  mean.dim = 50;
  EXPECT_EQ(Bench(mean).s2s_blinded_open_bytes, 0U);
}

TEST(Bench, LinkTimesFollowConfiguredRates) {
  BenchConfig cfg;
  cfg.dim = 200;
  cfg.w2s_mbps = 10.0;
  cfg.s2s_mbps = 20.0;
  const BenchReport r = Bench(cfg);
  EXPECT_DOUBLE_EQ(r.t_w2s_s, (r.w2s_bytes + r.s2w_bytes) * 8.0 / 10e6);
  EXPECT_DOUBLE_EQ(r.t_s2s_s, r.s2s_bytes * 8.0 / 20e6);
  cfg.s2s_mbps = 0.0;
  EXPECT_EQ(CodeOf([&] { Bench(cfg); }), ErrorCode::kInvalidConfig);
}

TEST(Bench, ZeroWorkersGiveEmptyReport) {
  BenchConfig cfg;
  cfg.n = 0;
  const BenchReport r = Bench(cfg);
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.w2s_bytes, 0U);
  EXPECT_EQ(r.UplinkRatio(), 0.0);
}

TEST(Bench, CsvWithoutWallClockIsDeterministic) {
  BenchConfig cfg;
  cfg.dim = 100;
  std::string rows[2];
  for (auto& row : rows) {
    std::ostringstream out;
    WriteBenchCsvRow(out, Bench(cfg), false);
    row = out.str();
  }
  EXPECT_EQ(rows[0], rows[1]);
  std::ostringstream header;
  WriteBenchCsvHeader(header);
  EXPECT_EQ(header.str(),
            "protocol,rule,n,d,T_grad,T_compute,T_w2s,T_s2s,w2s_bytes,s2w_bytes,"
            "s2s_bytes,s2s_blinded_open_bytes,worker_uplink_bytes,"
            "plain_uplink_bytes,uplink_ratio\n");
  EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), ','), 14);
  EXPECT_EQ(rows[0].rfind("two_server,multikrum,5,100,0,0,", 0), 0U) << rows[0];
}

TEST(Bench, PlainAndThreeServerProtocols) {
  BenchConfig cfg;
  cfg.dim = 20;
  cfg.protocol = ProtocolKind::kPlain;
  const BenchReport plain = Bench(cfg);
  EXPECT_EQ(plain.worker_uplink_bytes, Message::kHeaderBytes + kVectorHeaderBytes + 160);
  EXPECT_EQ(plain.s2s_bytes, 0U);
  cfg.protocol = ProtocolKind::kThreeServer;
  cfg.ring = {32, 8, 4.0};
  const BenchReport three = Bench(cfg);
  EXPECT_EQ(three.protocol, "three_server");
  EXPECT_GT(three.s2s_bytes, 0U);
}

TEST(Config, ParsesEverySection) {
  const SimConfig cfg = ParseSimConfig(R"(
seed: 42
seeds: [1, 2, 3]
protocol: three_server
n: 7
alpha: 0.3
average: false
ring: {bit_width: 32, frac_bits: 8, bound: 4}
rule: {kind: multikrum, f: 2, m: 3}
attack: {kind: sign_flip, factor: 4, byz_indices: [0, 1]}
task: {model: linear_regression, dim: 3, samples_per_worker: 8, sharding: label_skew,
       eta: 0.2, rounds: 4, clip: 1.5, noise: 0.05}
bandwidth: {w2s_mbps: 50, s2s_mbps: 500}
)");
  EXPECT_EQ(cfg.seed, 42U);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(cfg.protocol, ProtocolKind::kThreeServer);
  EXPECT_EQ(cfg.round.n, 7U);
  EXPECT_DOUBLE_EQ(cfg.round.alpha, 0.3);
  EXPECT_FALSE(cfg.round.average);
  EXPECT_EQ(cfg.round.ring.bit_width, 32U);
  const auto* mk = std::get_if<MultiKrumRule>(&cfg.round.rule);
  ASSERT_NE(mk, nullptr);
  EXPECT_EQ(mk->f, 2U);
  EXPECT_EQ(mk->m, 3U);
  EXPECT_EQ(cfg.attack.kind, AttackKind::kSignFlip);
  EXPECT_EQ(cfg.attack.byz_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(cfg.task.model, ModelKind::kLinearRegression);
  EXPECT_EQ(cfg.task.sharding, Sharding::kLabelSkew);
  EXPECT_EQ(cfg.task.rounds, 4U);
  EXPECT_DOUBLE_EQ(cfg.w2s_mbps, 50.0);
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(Config, ByzSgdThresholdsUseTheRing) {
  const SimConfig cfg = ParseSimConfig(
      "ring: {bit_width: 32, frac_bits: 4, bound: 8}\n"
      "rule: {kind: byzsgd, t_a: 1, t_b: 2, nu: 0.5}\n"
      "ldp: {sigma: 0.1, eta: 0.3}\n");
  const auto* b = std::get_if<ByzSgdRule>(&cfg.round.rule);
  ASSERT_NE(b, nullptr);
  EXPECT_EQ(b->params.t_a, 256U);
  EXPECT_EQ(b->params.t_b_sq, 1024U);
  EXPECT_EQ(b->params.nu_sq, 64U);
  ASSERT_TRUE(cfg.round.ldp.has_value());
  EXPECT_DOUBLE_EQ(cfg.round.ldp->sigma, 0.1);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(CodeOf([] { ParseSimConfig("sed: 1\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { ParseSimConfig("ring: {bits: 8}\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { ParseSimConfig("rule: {kind: median}\n"); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { ParseSimConfig("n: [1, 2\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { ParseSimConfig("n: many\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { ParseSimConfig("protocol: four_server\n"); }),
            ErrorCode::kInvalidConfig);
  const SimConfig three = ParseSimConfig("protocol: three_server\nrule: {kind: mean}\n");
  EXPECT_EQ(CodeOf([&] { three.Validate(); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { LoadSimConfig("/nonexistent/aegis.yaml"); }),
            ErrorCode::kInvalidConfig);
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const SimConfig cfg = ParseSimConfig("");
  EXPECT_EQ(cfg.seed, 1U);
  EXPECT_EQ(cfg.round.n, 5U);
  EXPECT_EQ(cfg.protocol, ProtocolKind::kTwoServer);
  EXPECT_TRUE(std::holds_alternative<MultiKrumRule>(cfg.round.rule));
}

TEST(Config, SeedEnvironmentOverride) {
  SimConfig cfg;
  cfg.seed = 5;
  {
    ScopedEnv env(kSeedEnvVar, nullptr);
    EXPECT_FALSE(ApplySeedEnv(cfg));
    EXPECT_EQ(cfg.seed, 5U);
  }
  {
    ScopedEnv env(kSeedEnvVar, "1234");
    EXPECT_TRUE(ApplySeedEnv(cfg));
    EXPECT_EQ(cfg.seed, 1234U);
  }
  {
    ScopedEnv env(kSeedEnvVar, "12x");
    EXPECT_EQ(CodeOf([&] { ApplySeedEnv(cfg); }), ErrorCode::kInvalidConfig);
  }
}

TEST(Names, RoundTrip) {
  for (ProtocolKind p : {ProtocolKind::kPlain, ProtocolKind::kTwoServer,
                         ProtocolKind::kThreeServer}) {
    EXPECT_EQ(ParseProtocol(ProtocolName(p)), p);
  }
  for (ModelKind m : {ModelKind::kLinearRegression, ModelKind::kLogisticRegression}) {
    EXPECT_EQ(ParseModelKind(ModelName(m)), m);
  }
  for (Sharding s : {Sharding::kIid, Sharding::kLabelSkew}) {
    EXPECT_EQ(ParseSharding(ShardingName(s)), s);
  }
}

}  // namespace
}  // namespace aegis::sim
