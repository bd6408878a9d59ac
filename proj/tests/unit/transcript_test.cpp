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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aegis/error.hpp"
#include "aegis/message.hpp"
#include "aegis/prg.hpp"
#include "aegis/protocol.hpp"
#include "aegis/three_server.hpp"

namespace aegis {
namespace {

namespace fs = std::filesystem;
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

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() /
              ("aegis_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::remove_all(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RoundConfig MultiKrumConfig(std::size_t n) {
  RoundConfig cfg;
  cfg.n = n;
  cfg.alpha = 0.3;
  cfg.rule = MultiKrumRule{1, 2};
  return cfg;
}

Inputs SomeInputs(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Prg prg(seed);
  Inputs xs(n, std::vector<double>(dim));
  for (auto& x : xs) {
    for (double& v : x) v = prg.UniformReal(-1, 1);
  }
  return xs;
}

TEST(Wire, HeaderLayout) {
  const RingVector v{16, 1, {7}};
  const Message m{0x0102030405060708ULL, PartyId::Worker(3), PartyId::S2(),
                  MessageKind::kShareUpload, MakePayload(v)};
  const auto bytes = EncodeWire(m);
  ASSERT_EQ(bytes.size(), 24U + 10U + 8U);
  EXPECT_EQ(m.WireSize(), bytes.size());
  EXPECT_EQ(bytes[0], 0x08);
  EXPECT_EQ(bytes[7], 0x01);
  EXPECT_EQ(bytes[8], 3);
  for (int k = 9; k < 12; ++k) EXPECT_EQ(bytes[k], 0);
  EXPECT_EQ(bytes[12], 0x02);
  EXPECT_EQ(bytes[15], 0xFF);
  EXPECT_EQ(bytes[16], 1);
  for (int k = 17; k < 24; ++k) EXPECT_EQ(bytes[k], 0);
  EXPECT_EQ(DecodeWire(bytes), m);
}

TEST(Wire, EveryKindRoundTrips) {
  for (std::uint8_t k = 1; k <= 8; ++k) {
    const auto kind = static_cast<MessageKind>(k);
    const Message m{9, PartyId::S1(), PartyId::S3(), kind,
                    MakePayload(RingVector{64, 2, {1, 2, 3}})};
    EXPECT_EQ(DecodeWire(EncodeWire(m)), m);
    EXPECT_EQ(ParseKind(KindName(kind)), kind);
  }
}

TEST(Wire, RejectsMalformedBytes) {
  const std::vector<std::uint8_t> short_header(23, 0);
  EXPECT_EQ(CodeOf([&] { DecodeWire(short_header); }), ErrorCode::kMalformedData);
  std::vector<std::uint8_t> bad_kind(24, 0);
  bad_kind[16] = 99;
  EXPECT_EQ(CodeOf([&] { DecodeWire(bad_kind); }), ErrorCode::kMalformedData);
  EXPECT_EQ(CodeOf([] { ParseKind("Gossip"); }), ErrorCode::kMalformedData);
  EXPECT_EQ(CodeOf([] { PartyId::Parse("S9"); }), ErrorCode::kMalformedData);
}

TEST(Payload, ConcatenatesVectors) {
  const std::vector<RingVector> vs{{8, 0, {1, 2}}, {64, 2, {}}, {32, 1, {5}}};
  const auto bytes = MakePayload(vs);
  EXPECT_EQ(bytes.size(), 3 * 10U + 3 * 8U);
  EXPECT_EQ(ParsePayload(bytes), vs);
}

TEST(PartyNames, RoundTrip) {
  for (PartyId id : {PartyId::S1(), PartyId::S2(), PartyId::S3(), PartyId::Worker(0),
                     PartyId::Worker(41)}) {
    EXPECT_EQ(PartyId::Parse(id.Name()), id);
  }
  EXPECT_EQ(PartyId::Worker(7).Name(), "W7");
  EXPECT_TRUE(PartyId::Worker(7).is_worker());
  EXPECT_TRUE(PartyId::S3().is_server());
}

TEST(Hex, RoundTripAndErrors) {
  const std::vector<std::uint8_t> b{0x00, 0xAB, 0x10, 0xFF};
  EXPECT_EQ(ToHex(b), "00ab10ff");
  EXPECT_EQ(FromHex("00ab10ff"), b);
  EXPECT_EQ(FromHex("00AB10FF"), b);
  EXPECT_EQ(CodeOf([] { FromHex("abc"); }), ErrorCode::kMalformedData);
  EXPECT_EQ(CodeOf([] { FromHex("zz"); }), ErrorCode::kMalformedData);
}

TEST(Bus, DeliversInRoundKindSenderReceiverSeqOrder) {
  TranscriptSet ts;
  TrafficStats traffic;
  Bus bus(ts, traffic);
  const auto msg = [](std::uint64_t round, PartyId from, PartyId to,
                      MessageKind kind, std::uint64_t tag) {
    return Message{round, from, to, kind, MakePayload(RingVector{64, 0, {tag}})};
  };
  bus.Send(msg(1, PartyId::Worker(0), PartyId::S1(), MessageKind::kShareUpload, 0));
  bus.Send(msg(0, PartyId::S2(), PartyId::S1(), MessageKind::kAggregateShare, 1));
  bus.Send(msg(0, PartyId::Worker(2), PartyId::S1(), MessageKind::kShareUpload, 2));
  bus.Send(msg(0, PartyId::Worker(1), PartyId::S1(), MessageKind::kShareUpload, 3));
  bus.Send(msg(0, PartyId::Worker(1), PartyId::S1(), MessageKind::kShareUpload, 4));
  bus.Send(msg(0, PartyId::S2(), PartyId::S1(), MessageKind::kBlindedOpen, 5));
  bus.Flush();
  std::vector<std::uint64_t> order;
  for (const auto& m : bus.TakeInbox(PartyId::S1())) {
    order.push_back(ParsePayload(m.payload).at(0).elems.at(0));
  }
  EXPECT_EQ(order, (std::vector<std::uint64_t>{3, 4, 2, 5, 1, 0}));
  EXPECT_TRUE(bus.TakeInbox(PartyId::S1()).empty());
  EXPECT_EQ(ts.Find(PartyId::S1())->received.size(), 6U);
  EXPECT_EQ(ts.Find(PartyId::S2())->sent.size(), 2U);
}

TEST(Bus, DropPendingRemovesOneLink) {
  TranscriptSet ts;
  TrafficStats traffic;
  Bus bus(ts, traffic);
  bus.Send({0, PartyId::Worker(0), PartyId::S1(), MessageKind::kShareUpload, {}});
  bus.Send({0, PartyId::Worker(0), PartyId::S2(), MessageKind::kShareUpload, {}});
  bus.DropPending(PartyId::Worker(0), PartyId::S1());
  bus.Flush();
  EXPECT_TRUE(bus.TakeInbox(PartyId::S1()).empty());
  EXPECT_EQ(bus.TakeInbox(PartyId::S2()).size(), 1U);
  EXPECT_EQ(ts.Find(PartyId::Worker(0))->sent.size(), 2U);
}

TEST(Traffic, CountersByLinkAndKind) {
  TrafficStats t;
  t.Record(PartyId::Worker(0), PartyId::S1(), MessageKind::kShareUpload, 100);
  t.Record(PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen, 40);
  t.Record(PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen, 40);
  t.Record(PartyId::S1(), PartyId::S2(), MessageKind::kDistanceReveal, 7);
  t.Record(PartyId::S1(), PartyId::Worker(0), MessageKind::kModelBroadcast, 9);
  EXPECT_EQ(t.Bytes(PartyId::S1(), PartyId::S2()), 87U);
  EXPECT_EQ(t.Bytes(PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen), 80U);
  EXPECT_EQ(t.Messages(PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen), 2U);
  EXPECT_EQ(t.SentBy(PartyId::S1()), 96U);
  EXPECT_EQ(t.WorkerToServer(), 100U);
  EXPECT_EQ(t.ServerToWorker(), 9U);
  EXPECT_EQ(t.ServerToServer(), 87U);
  TrafficStats u;
  u.Merge(t);
  u.Merge(t);
  EXPECT_EQ(u.ServerToServer(), 174U);
}

TEST(Jsonl, OneLinePerEventWithHexPayload) {
  TwoServerSession session(MultiKrumConfig(4), 1);
  const auto r = session.RunRound(SomeInputs(4, 3, 2));
  const PartyTranscript& s1 = *r.transcripts.Find(PartyId::S1());
  const std::string text = r.transcripts.ToJsonl(PartyId::S1());
  std::istringstream in(text);
  std::string line;
  std::size_t lines = 0;
  std::size_t reveals = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++lines;
    const std::string dir = j.at("dir");
    EXPECT_TRUE(dir == "sent" || dir == "recv" || dir == "reveal") << dir;
    if (dir == "reveal") {
      ++reveals;
      EXPECT_EQ(j.at("label"), "z");
    } else {
      const std::string hex = j.at("payload");
      EXPECT_EQ(hex.find_first_not_of("0123456789abcdef"), std::string::npos);
    }
  }
  EXPECT_EQ(lines, s1.sent.size() + s1.received.size() + s1.reveals.size());
  EXPECT_EQ(reveals, 1U);
}

TEST(Jsonl, DirectoryRoundTrip) {
  TwoServerSession session(MultiKrumConfig(5), 3);
  const auto r = session.RunRound(SomeInputs(5, 4, 4));
  TempDir dir("jsonl");
  r.transcripts.WriteJsonl(dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "S1.jsonl"));
  EXPECT_TRUE(fs::exists(dir.path() / "S2.jsonl"));
  EXPECT_TRUE(fs::exists(dir.path() / "W4.jsonl"));
  EXPECT_EQ(TranscriptSet::ReadJsonl(dir.path()), r.transcripts);
}

TEST(Jsonl, ReadRejectsCorruptLinesAndMissingDirectory) {
  TempDir dir("corrupt");
  fs::create_directories(dir.path());
  std::ofstream(dir.path() / "S1.jsonl") << "{not json\n";
  EXPECT_EQ(CodeOf([&] { TranscriptSet::ReadJsonl(dir.path()); }),
            ErrorCode::kMalformedData);
  EXPECT_EQ(CodeOf([&] { TranscriptSet::ReadJsonl(dir.path() / "absent"); }),
            ErrorCode::kMalformedData);
}

TEST(Determinism, SameSeedSameTranscripts) {
  const Inputs xs = SomeInputs(5, 6, 5);
  TwoServerSession a(MultiKrumConfig(5), 77);
  TwoServerSession b(MultiKrumConfig(5), 77);
  for (int round = 0; round < 3; ++round) {
    const auto ra = a.RunRound(xs);
    const auto rb = b.RunRound(xs);
    ASSERT_EQ(ra.transcripts, rb.transcripts);
    ASSERT_EQ(ra.z, rb.z);
  }
  TwoServerSession c(MultiKrumConfig(5), 78);
  TwoServerSession d(MultiKrumConfig(5), 77);
  EXPECT_NE(c.RunRound(xs).transcripts, d.RunRound(xs).transcripts);
}

TEST(Determinism, ThreeServerTranscriptsRepeat) {
  RoundConfig cfg = MultiKrumConfig(4);
  cfg.ring = {32, 4, 4.0};
  const Inputs xs = SomeInputs(4, 3, 6);
  ThreeServerSession a(cfg, 8);
  ThreeServerSession b(cfg, 8);
  EXPECT_EQ(a.RunRound(xs).round.transcripts, b.RunRound(xs).round.transcripts);
}

TEST(Transcripts, EveryMessageIsLoggedAtBothEnds) {
  TwoServerSession session(MultiKrumConfig(4), 9);
  const auto r = session.RunRound(SomeInputs(4, 2, 7));
  std::size_t sent = 0;
  std::size_t received = 0;
  for (const auto& [id, t] : r.transcripts.parties()) {
    sent += t.sent.size();
    received += t.received.size();
    for (const auto& m : t.sent) EXPECT_EQ(m.from, id);
    for (const auto& m : t.received) EXPECT_EQ(m.to, id);
  }
  EXPECT_EQ(sent, received);
}

}  // namespace
}  // namespace aegis
