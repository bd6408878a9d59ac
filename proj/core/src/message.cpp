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

#include "aegis/message.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "aegis/error.hpp"

namespace aegis {

std::string PartyId::Name() const {
  if (*this == S1()) return "S1";
  if (*this == S2()) return "S2";
  if (*this == S3()) return "S3";
  return "W" + std::to_string(value);
}

PartyId PartyId::Parse(std::string_view name) {
  if (name == "S1") return S1();
  if (name == "S2") return S2();
  if (name == "S3") return S3();
  if (name.size() > 1 && name.front() == 'W') {
    try {
      return Worker(std::stoul(std::string(name.substr(1))));
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kMalformedData,
              "unknown party name '" + std::string(name) + "'");
}

std::string_view KindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kShareUpload: return "ShareUpload";
    case MessageKind::kBlindedOpen: return "BlindedOpen";
    case MessageKind::kDistanceReveal: return "DistanceReveal";
    case MessageKind::kWeightShare: return "WeightShare";
    case MessageKind::kAggregateShare: return "AggregateShare";
    case MessageKind::kModelBroadcast: return "ModelBroadcast";
    case MessageKind::kPcResponse: return "PCResponse";
    case MessageKind::kSelectionShare: return "SelectionShare";
  }
  return "Unknown";
}

MessageKind ParseKind(std::string_view name) {
  for (int k = 1; k <= 8; ++k) {
    const auto kind = static_cast<MessageKind>(k);
    if (KindName(kind) == name) return kind;
  }
  throw Error(ErrorCode::kMalformedData,
              "unknown message kind '" + std::string(name) + "'");
}

std::vector<std::uint8_t> EncodeWire(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(m.WireSize());
  PutLe(out, m.round, 8);
  PutLe(out, m.from.value, 4);
  PutLe(out, m.to.value, 4);
  out.push_back(static_cast<std::uint8_t>(m.kind));
  PutLe(out, 0, 7);
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

Message DecodeWire(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < Message::kHeaderBytes) {
    throw Error(ErrorCode::kMalformedData, "message header truncated");
  }
  Message m;
  m.round = GetLe(bytes, 0, 8);
  m.from = {static_cast<std::uint32_t>(GetLe(bytes, 8, 4))};
  m.to = {static_cast<std::uint32_t>(GetLe(bytes, 12, 4))};
  const auto kind = GetLe(bytes, 16, 1);
  if (kind < 1 || kind > 8) {
    throw Error(ErrorCode::kMalformedData, "unknown message kind byte");
  }
  m.kind = static_cast<MessageKind>(kind);
  m.payload.assign(bytes.begin() + Message::kHeaderBytes, bytes.end());
  return m;
}

std::vector<std::uint8_t> MakePayload(std::span<const RingVector> vectors) {
  std::vector<std::uint8_t> out;
  for (const auto& v : vectors) AppendSerialized(v, out);
  return out;
}

std::vector<std::uint8_t> MakePayload(const RingVector& v) {
  return Serialize(v);
}

std::vector<RingVector> ParsePayload(std::span<const std::uint8_t> payload) {
  std::vector<RingVector> out;
  std::size_t offset = 0;
  while (offset < payload.size()) out.push_back(Deserialize(payload, offset));
  return out;
}

PartyTranscript& TranscriptSet::Get(PartyId id) {
  auto [it, inserted] = parties_.try_emplace(id);
  if (inserted) it->second.party = id;
  return it->second;
}

const PartyTranscript* TranscriptSet::Find(PartyId id) const {
  auto it = parties_.find(id);
  return it == parties_.end() ? nullptr : &it->second;
}

void TranscriptSet::Merge(const TranscriptSet& other) {
  for (const auto& [id, t] : other.parties_) {
    PartyTranscript& mine = Get(id);
    mine.sent.insert(mine.sent.end(), t.sent.begin(), t.sent.end());
    mine.received.insert(mine.received.end(), t.received.begin(),
                         t.received.end());
    mine.reveals.insert(mine.reveals.end(), t.reveals.begin(), t.reveals.end());
  }
}

namespace {

nlohmann::json MessageJson(const Message& m, const char* dir) {
  return {{"dir", dir},
          {"round", m.round},
          {"from", m.from.Name()},
          {"to", m.to.Name()},
          {"kind", std::string(KindName(m.kind))},
          {"payload", ToHex(m.payload)}};
}

}  // namespace

std::string TranscriptSet::ToJsonl(PartyId id) const {
  std::ostringstream out;
  const PartyTranscript* t = Find(id);
  if (t == nullptr) return {};
  for (const auto& m : t->sent) out << MessageJson(m, "sent").dump() << '\n';
  for (const auto& m : t->received) {
    out << MessageJson(m, "recv").dump() << '\n';
  }
  for (const auto& r : t->reveals) {
    nlohmann::json j = {{"dir", "reveal"},
                        {"round", r.round},
                        {"label", r.label},
                        {"payload", ToHex(Serialize(r.value))}};
    out << j.dump() << '\n';
  }
  return out.str();
}

void TranscriptSet::WriteJsonl(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [id, t] : parties_) {
    std::ofstream out(dir / (id.Name() + ".jsonl"), std::ios::binary);
    if (!out) {
      throw Error(ErrorCode::kMalformedData,
                  "cannot write transcript in " + dir.string());
    }
    out << ToJsonl(id);
  }
}

TranscriptSet TranscriptSet::ReadJsonl(const std::filesystem::path& dir) {
  TranscriptSet set;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kMalformedData,
                "transcript directory " + dir.string() + " not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    PartyTranscript& t = set.Get(PartyId::Parse(path.stem().string()));
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kMalformedData,
                    path.string() + ": " + e.what());
      }
      const std::string dir_tag = j.at("dir").get<std::string>();
      const auto payload = FromHex(j.at("payload").get<std::string>());
      if (dir_tag == "reveal") {
        std::size_t offset = 0;
        t.reveals.push_back({j.at("round").get<std::uint64_t>(),
                             j.at("label").get<std::string>(),
                             Deserialize(payload, offset)});
        continue;
      }
      Message m;
      m.round = j.at("round").get<std::uint64_t>();
      m.from = PartyId::Parse(j.at("from").get<std::string>());
      m.to = PartyId::Parse(j.at("to").get<std::string>());
      m.kind = ParseKind(j.at("kind").get<std::string>());
      m.payload = payload;
      (dir_tag == "sent" ? t.sent : t.received).push_back(std::move(m));
    }
  }
  return set;
}

void TrafficStats::Record(PartyId from, PartyId to, MessageKind kind,
                          std::size_t bytes) {
  Counter& c = counters_[{from, to, kind}];
  c.bytes += bytes;
  ++c.messages;
}

std::uint64_t TrafficStats::Bytes(PartyId from, PartyId to) const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) {
    if (std::get<0>(key) == from && std::get<1>(key) == to) total += c.bytes;
  }
  return total;
}

std::uint64_t TrafficStats::Bytes(PartyId from, PartyId to,
                                  MessageKind kind) const {
  auto it = counters_.find({from, to, kind});
  return it == counters_.end() ? 0 : it->second.bytes;
}

std::uint64_t TrafficStats::Messages(PartyId from, PartyId to,
                                     MessageKind kind) const {
  auto it = counters_.find({from, to, kind});
  return it == counters_.end() ? 0 : it->second.messages;
}

std::uint64_t TrafficStats::SentBy(PartyId from) const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) {
    if (std::get<0>(key) == from) total += c.bytes;
  }
  return total;
}

std::uint64_t TrafficStats::WorkerToServer() const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) {
    if (std::get<0>(key).is_worker() && std::get<1>(key).is_server()) {
      total += c.bytes;
    }
  }
  return total;
}

std::uint64_t TrafficStats::ServerToWorker() const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) {
    if (std::get<0>(key).is_server() && std::get<1>(key).is_worker()) {
      total += c.bytes;
    }
  }
  return total;
}

std::uint64_t TrafficStats::ServerToServer() const {
  std::uint64_t total = 0;
  for (const auto& [key, c] : counters_) {
    if (std::get<0>(key).is_server() && std::get<1>(key).is_server()) {
      total += c.bytes;
    }
  }
  return total;
}

void TrafficStats::Merge(const TrafficStats& other) {
  for (const auto& [key, c] : other.counters_) {
    Counter& mine = counters_[key];
    mine.bytes += c.bytes;
    mine.messages += c.messages;
  }
}

void Bus::Send(Message m) {
  transcripts_.Get(m.from).sent.push_back(m);
  traffic_.Record(m.from, m.to, m.kind, m.WireSize());
  pending_.emplace_back(seq_++, std::move(m));
}

void Bus::DropPending(PartyId from, PartyId to) {
  std::erase_if(pending_, [&](const auto& entry) {
    return entry.second.from == from && entry.second.to == to;
  });
}

void Bus::Flush() {
  std::sort(pending_.begin(), pending_.end(),
            [](const auto& a, const auto& b) {
              const Message& x = a.second;
              const Message& y = b.second;
              return std::tie(x.round, x.kind, x.from, x.to, a.first) <
                     std::tie(y.round, y.kind, y.from, y.to, b.first);
            });
  for (auto& [seq, m] : pending_) {
    transcripts_.Get(m.to).received.push_back(m);
    inboxes_[m.to].push_back(std::move(m));
  }
  pending_.clear();
}

std::vector<Message> Bus::TakeInbox(PartyId id) {
  auto it = inboxes_.find(id);
  if (it == inboxes_.end()) return {};
  std::vector<Message> out = std::move(it->second);
  inboxes_.erase(it);
  return out;
}

std::string ToHex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * bytes.size());
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> FromHex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(ErrorCode::kMalformedData, "odd-length hex string");
  }
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw Error(ErrorCode::kMalformedData, "bad hex digit");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 |
                                       nibble(hex[2 * i + 1]));
  }
  return out;
}

}  // namespace aegis
