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

#ifndef AEGIS_MESSAGE_HPP_
#define AEGIS_MESSAGE_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "aegis/ring.hpp"

namespace aegis {

// Wire-level party identifier. Workers use their index; servers sit at the
// top of the 32-bit range.
struct PartyId {
  std::uint32_t value = 0;

  static constexpr PartyId S1() { return {0xFFFFFF01u}; }
  static constexpr PartyId S2() { return {0xFFFFFF02u}; }
  static constexpr PartyId S3() { return {0xFFFFFF03u}; }
  static constexpr PartyId Worker(std::size_t i) {
    return {static_cast<std::uint32_t>(i)};
  }
  static constexpr PartyId Of(Party p) {
    return p == Party::kS1 ? S1() : S2();
  }

  bool is_worker() const { return value < 0xFFFFFF00u; }
  bool is_server() const { return !is_worker(); }
  std::string Name() const;
  static PartyId Parse(std::string_view name);

  friend auto operator<=>(const PartyId&, const PartyId&) = default;
};

enum class MessageKind : std::uint8_t {
  kShareUpload = 1,
  kBlindedOpen = 2,
  kDistanceReveal = 3,
  kWeightShare = 4,
  kAggregateShare = 5,
  kModelBroadcast = 6,
  kPcResponse = 7,
  kSelectionShare = 8,
};

std::string_view KindName(MessageKind kind);
MessageKind ParseKind(std::string_view name);

struct Message {
  std::uint64_t round = 0;
  PartyId from;
  PartyId to;
  MessageKind kind = MessageKind::kShareUpload;
  std::vector<std::uint8_t> payload;  // concatenated ring vectors

  std::size_t WireSize() const { return kHeaderBytes + payload.size(); }

  // Header: round (8), from (4), to (4), kind (1), zero padding (7), all LE.
  static constexpr std::size_t kHeaderBytes = 24;

  friend bool operator==(const Message&, const Message&) = default;
};

std::vector<std::uint8_t> EncodeWire(const Message& m);
Message DecodeWire(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> MakePayload(std::span<const RingVector> vectors);
std::vector<std::uint8_t> MakePayload(const RingVector& v);
std::vector<RingVector> ParsePayload(std::span<const std::uint8_t> payload);

// A plaintext value a party reconstructs for itself.
struct Reveal {
  std::uint64_t round = 0;
  std::string label;
  RingVector value;

  friend bool operator==(const Reveal&, const Reveal&) = default;
};

struct PartyTranscript {
  PartyId party;
  std::vector<Message> sent;
  std::vector<Message> received;
  std::vector<Reveal> reveals;

  friend bool operator==(const PartyTranscript&,
                         const PartyTranscript&) = default;
};

class TranscriptSet {
 public:
  PartyTranscript& Get(PartyId id);
  const PartyTranscript* Find(PartyId id) const;
  const std::map<PartyId, PartyTranscript>& parties() const { return parties_; }
  void Merge(const TranscriptSet& other);

  // One JSON-lines file per party, named after PartyId::Name().
  void WriteJsonl(const std::filesystem::path& dir) const;
  static TranscriptSet ReadJsonl(const std::filesystem::path& dir);
  std::string ToJsonl(PartyId id) const;

  friend bool operator==(const TranscriptSet&, const TranscriptSet&) = default;

 private:
  std::map<PartyId, PartyTranscript> parties_;
};

// Byte counters keyed by directed link and message kind.
class TrafficStats {
 public:
  void Record(PartyId from, PartyId to, MessageKind kind, std::size_t bytes);
  std::uint64_t Bytes(PartyId from, PartyId to) const;
  std::uint64_t Bytes(PartyId from, PartyId to, MessageKind kind) const;
  std::uint64_t Messages(PartyId from, PartyId to, MessageKind kind) const;
  std::uint64_t SentBy(PartyId from) const;
  std::uint64_t WorkerToServer() const;
  std::uint64_t ServerToWorker() const;
  std::uint64_t ServerToServer() const;
  void Merge(const TrafficStats& other);

 private:
  struct Counter {
    std::uint64_t bytes = 0;
    std::uint64_t messages = 0;
  };
  using Key = std::tuple<PartyId, PartyId, MessageKind>;
  std::map<Key, Counter> counters_;
};

// In-process message fabric. Sends are logged at the sender immediately;
// Flush() delivers everything queued in (round, kind, sender, receiver,
// send order) order, logging at the receivers.
class Bus {
 public:
  Bus(TranscriptSet& transcripts, TrafficStats& traffic)
      : transcripts_(transcripts), traffic_(traffic) {}

  void Send(Message m);
  void Flush();
  std::vector<Message> TakeInbox(PartyId id);
  // Drops queued messages from `from` to `to` before delivery; models a
  // worker whose upload misses the collection deadline.
  void DropPending(PartyId from, PartyId to);

 private:
  TranscriptSet& transcripts_;
  TrafficStats& traffic_;
  std::vector<std::pair<std::uint64_t, Message>> pending_;
  std::map<PartyId, std::vector<Message>> inboxes_;
  std::uint64_t seq_ = 0;
};

std::string ToHex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> FromHex(std::string_view hex);

}  // namespace aegis

#endif  // AEGIS_MESSAGE_HPP_
