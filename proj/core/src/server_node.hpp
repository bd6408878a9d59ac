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

#ifndef AEGIS_SRC_SERVER_NODE_HPP_
#define AEGIS_SRC_SERVER_NODE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aegis/error.hpp"
#include "aegis/message.hpp"
#include "aegis/mpc.hpp"
#include "aegis/prg.hpp"
#include "aegis/ring.hpp"

namespace aegis::internal {

inline std::vector<Message> OfKind(std::vector<Message> inbox, MessageKind kind) {
  std::erase_if(inbox, [&](const Message& m) { return m.kind != kind; });
  return inbox;
}

inline RingVector IndexVector(std::span<const std::size_t> indices) {
  RingVector v{64, 0, {}};
  v.elems.assign(indices.begin(), indices.end());
  return v;
}

struct PairIndex {
  std::size_t a;
  std::size_t b;
};

inline std::vector<PairIndex> Pairs(std::size_t k) {
  std::vector<PairIndex> out;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) out.push_back({a, b});
  }
  return out;
}

inline ShareVector Broadcast(const ShareVector& scalar, std::size_t dim) {
  return {scalar.party,
          {scalar.vec.bit_width, scalar.vec.scale,
           std::vector<std::uint64_t>(dim, scalar.vec.elems.at(0))}};
}

// One share-holding server's per-round state. The driver below only moves
// messages between the two instances.
class ServerNode {
 public:
  ServerNode(Party party, Prg prg)
      : party_(party),
        id_(PartyId::Of(party)),
        peer_(PartyId::Of(party == Party::kS1 ? Party::kS2 : Party::kS1)),
        store_(party),
        prg_(std::move(prg)) {}

  Party party() const { return party_; }
  PartyId id() const { return id_; }
  TripleStore& store() { return store_; }
  Prg& prg() { return prg_; }

  void CollectUploads(std::vector<Message> inbox) {
    for (auto& m : OfKind(std::move(inbox), MessageKind::kShareUpload)) {
      if (!m.from.is_worker()) continue;
      auto vectors = ParsePayload(m.payload);
      if (vectors.size() != 1) {
        throw Error(ErrorCode::kMalformedData, "upload carries one vector");
      }
      uploads_[m.from.value] = {party_, std::move(vectors.front())};
    }
  }

  Message IndexSetMessage(std::uint64_t round) const {
    std::vector<std::size_t> have;
    for (const auto& [i, s] : uploads_) have.push_back(i);
    return {round, id_, peer_, MessageKind::kShareUpload,
            MakePayload(IndexVector(have))};
  }

  // Keeps the workers whose shares reached both servers.
  void AgreeOnParticipants(std::vector<Message> inbox) {
    std::vector<std::size_t> theirs;
    for (const auto& m : OfKind(std::move(inbox), MessageKind::kShareUpload)) {
      if (m.from != peer_) continue;
      const RingVector ids = ParsePayload(m.payload).at(0);
      for (std::uint64_t i : ids.elems) {
        theirs.push_back(static_cast<std::size_t>(i));
      }
    }
    participants_.clear();
    for (const auto& [i, s] : uploads_) {
      if (std::find(theirs.begin(), theirs.end(), i) != theirs.end()) {
        participants_.push_back(i);
      }
    }
  }

  const std::vector<std::size_t>& participants() const { return participants_; }

  std::vector<ShareVector> ParticipantShares() const {
    std::vector<ShareVector> out;
    for (std::size_t i : participants_) out.push_back(uploads_.at(i));
    return out;
  }

  // First half of a batch of Beaver products x_k * y_k: blinds with fresh
  // triples and sends this party's contributions to the peer.
  void BeginProducts(std::span<const ShareVector> xs,
                     std::span<const ShareVector> ys, TripleForm form,
                     std::uint64_t round, Bus& bus) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      Pending p{store_.Take(form, xs[k].size()), {}};
      p.mine = BeaverOpen(xs[k], ys[k], p.triple);
      const RingVector parts[] = {p.mine.x_minus_a, p.mine.y_minus_b};
      bus.Send({round, id_, peer_, MessageKind::kBlindedOpen,
                MakePayload(parts)});
      pending_.push_back(std::move(p));
    }
  }

  // Second half: opens x - a and y - b from both contributions and returns
  // this party's shares of the products, in request order.
  std::vector<ShareVector> FinishProducts(std::vector<Message> inbox) {
    auto opens = OfKind(std::move(inbox), MessageKind::kBlindedOpen);
    std::erase_if(opens, [&](const Message& m) { return m.from != peer_; });
    if (opens.size() != pending_.size()) {
      throw Error(ErrorCode::kMalformedData,
                  "expected " + std::to_string(pending_.size()) +
                      " blinded opens, got " + std::to_string(opens.size()));
    }
    std::vector<ShareVector> out;
    out.reserve(pending_.size());
    for (std::size_t k = 0; k < pending_.size(); ++k) {
      auto parts = ParsePayload(opens[k].payload);
      if (parts.size() != 2) {
        throw Error(ErrorCode::kMalformedData, "blinded open carries two vectors");
      }
      const BlindedOpen theirs{pending_[k].triple.id, std::move(parts[0]),
                               std::move(parts[1])};
      const BlindedOpen opened = OpenBlinded(pending_[k].mine, theirs);
      out.push_back(
          BeaverCombine(opened, pending_[k].triple, CrossTermFor(party_)));
    }
    pending_.clear();
    return out;
  }

 private:
  struct Pending {
    BeaverTripleShare triple;
    BlindedOpen mine;
  };

  Party party_;
  PartyId id_;
  PartyId peer_;
  TripleStore store_;
  Prg prg_;
  std::map<std::size_t, ShareVector> uploads_;
  std::vector<std::size_t> participants_;
  std::vector<Pending> pending_;
};

// Runs a batch of products on both servers through the bus.
inline std::pair<std::vector<ShareVector>, std::vector<ShareVector>> Multiply(
    ServerNode& s1, ServerNode& s2, std::span<const ShareVector> x1,
    std::span<const ShareVector> y1, std::span<const ShareVector> x2,
    std::span<const ShareVector> y2, TripleForm form, std::uint64_t round,
    Bus& bus) {
  s1.BeginProducts(x1, y1, form, round, bus);
  s2.BeginProducts(x2, y2, form, round, bus);
  bus.Flush();
  auto z1 = s1.FinishProducts(bus.TakeInbox(s1.id()));
  auto z2 = s2.FinishProducts(bus.TakeInbox(s2.id()));
  return {std::move(z1), std::move(z2)};
}

}  // namespace aegis::internal

#endif  // AEGIS_SRC_SERVER_NODE_HPP_
