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

#include "aegis/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "aegis/error.hpp"
#include "server_node.hpp"

namespace aegis {

void RoundConfig::Validate() const {
  ring.Validate();
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "n must be positive");
  if (!(alpha >= 0.0 && alpha < 0.5)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must lie in [0, 0.5)");
  }
  if (const auto* mk = std::get_if<MultiKrumRule>(&rule)) {
    if (n < mk->f + 3) {
      throw Error(ErrorCode::kTooFewWorkers,
                  "Multi-Krum needs n >= f + 3");
    }
    if (mk->m < 1 || mk->m > n - mk->f) {
      throw Error(ErrorCode::kInvalidConfig,
                  "Multi-Krum needs 1 <= m <= n - f");
    }
  }
  if (ldp && !(ldp->sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "LDP sigma must be non-negative");
  }
}

std::size_t RoundConfig::MaxByzantine() const {
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
}

std::array<Message, 2> WorkerSubmit(std::size_t worker, std::span<const double> x,
                                    const RingConfig& ring, std::uint64_t round,
                                    Prg& prg) {
  const RingVector encoded = EncodeFixed(x, ring);
  auto [s1, s2] = Share(encoded, prg);
  const PartyId self = PartyId::Worker(worker);
  return {Message{round, self, PartyId::S1(), MessageKind::kShareUpload,
                  MakePayload(s1.vec)},
          Message{round, self, PartyId::S2(), MessageKind::kShareUpload,
                  MakePayload(s2.vec)}};
}

std::vector<double> Worker::Pull(const Message& broadcast,
                                 const RingConfig& ring) const {
  if (broadcast.kind != MessageKind::kModelBroadcast ||
      broadcast.to != PartyId::Worker(index_)) {
    throw Error(ErrorCode::kMalformedData, "not a model broadcast for us");
  }
  const auto vectors = ParsePayload(broadcast.payload);
  if (vectors.size() != 1) {
    throw Error(ErrorCode::kMalformedData, "broadcast carries one vector");
  }
  return DecodeFixed(vectors.front(), ring);
}

namespace {

using internal::Broadcast;
using internal::Multiply;
using internal::OfKind;
using internal::Pairs;
using internal::ServerNode;

// S1 hands its shares of scalars to S2, which reconstructs them. Returns the
// plaintext values on S2.
std::vector<std::uint64_t> RevealToS2(std::span<const ShareVector> on_s1,
                                      std::span<const ShareVector> on_s2,
                                      std::uint64_t round, Bus& bus) {
  if (on_s1.empty()) return {};
  RingVector batch{on_s1.front().vec.bit_width, on_s1.front().vec.scale, {}};
  for (const auto& s : on_s1) batch.elems.push_back(s.vec.elems.at(0));
  bus.Send({round, PartyId::S1(), PartyId::S2(), MessageKind::kDistanceReveal,
            MakePayload(batch)});
  bus.Flush();
  auto inbox = OfKind(bus.TakeInbox(PartyId::S2()),
                      MessageKind::kDistanceReveal);
  if (inbox.size() != 1) {
    throw Error(ErrorCode::kMalformedData, "expected one reveal batch on S2");
  }
  const RingVector received = ParsePayload(inbox.front().payload).at(0);
  if (received.size() != on_s2.size()) {
    throw Error(ErrorCode::kMalformedData, "reveal batch length mismatch");
  }
  const Ring ring = received.ring();
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < on_s2.size(); ++k) {
    out.push_back(ring.Add(received.elems[k], on_s2[k].vec.elems.at(0)));
  }
  return out;
}

// Pairwise squared distances of shared vectors, revealed to S2 only.
DistanceSet SecureDistances(ServerNode& s1, ServerNode& s2,
                            std::span<const ShareVector> v1,
                            std::span<const ShareVector> v2,
                            std::span<const std::size_t> worker_ids,
                            const char* label, std::uint64_t round,
                            unsigned bit_width, Bus& bus,
                            TranscriptSet& transcripts) {
  const auto pairs = Pairs(v1.size());
  std::vector<ShareVector> d1;
  std::vector<ShareVector> d2;
  for (const auto& [a, b] : pairs) {
    d1.push_back(Sub(v1[a], v1[b]));
    d2.push_back(Sub(v2[a], v2[b]));
  }
  auto [n1, n2] =
      Multiply(s1, s2, d1, d1, d2, d2, TripleForm::kInner, round, bus);
  const auto values = RevealToS2(n1, n2, round, bus);
  DistanceSet out(v1.size(), bit_width);
  auto& s2_log = transcripts.Get(PartyId::S2()).reveals;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.Set(pairs[k].a, pairs[k].b, values[k]);
    s2_log.push_back({round,
                      std::string(label) + ":" +
                          std::to_string(worker_ids[pairs[k].a]) + "," +
                          std::to_string(worker_ids[pairs[k].b]),
                      RingVector{bit_width, 2, {values[k]}}});
  }
  return out;
}

}  // namespace

TwoServerSession::TwoServerSession(RoundConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), root_(seed) {
  cfg_.Validate();
}

void TwoServerSession::SetModelDelta(std::vector<double> w_minus_w0) {
  model_delta_ = std::move(w_minus_w0);
}

RoundResult TwoServerSession::RunRound(
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
  const unsigned bits = cfg_.ring.bit_width;
  const bool robust = IsRobust(cfg_.rule);
  const bool byzsgd = std::holds_alternative<ByzSgdRule>(cfg_.rule);
  if (robust) cfg_.ring.CheckDistanceCapacity(dim);

  const std::uint64_t round = round_++;
  const Prg round_prg = root_.Split(round);

  RoundResult res;
  res.round = round;
  Bus bus(res.transcripts, res.traffic);
  ServerNode s1(Party::kS1, round_prg.Split(kS1Stream));
  ServerNode s2(Party::kS2, round_prg.Split(kS2Stream));

  // Offline phase: the dealer provisions triples for the configured n
  // before any input exists.
  if (robust) {
    Prg dealer = round_prg.Split(kDealerStream);
    const std::size_t n = cfg_.n;
    const std::size_t pair_count = n * (n - 1) / 2;
    std::size_t inner = byzsgd ? n + 2 * pair_count : pair_count;
    inner -= std::min(inner, options.triple_shortfall);
    if (inner > 0) {
      auto batch =
          DealerMakeTriples(inner, dim, TripleForm::kInner, bits, dealer, 0);
      s1.store().Add(std::move(batch.s1));
      s2.store().Add(std::move(batch.s2));
    }
    auto batch = DealerMakeTriples(n, dim, TripleForm::kElementwise, bits,
                                   dealer, inner);
    s1.store().Add(std::move(batch.s1));
    s2.store().Add(std::move(batch.s2));
  }

  // WorkerSecretSharing.
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Prg worker_prg = round_prg.Split(kWorkerStreamBase + i);
    for (auto& m : WorkerSubmit(i, inputs[i], cfg_.ring, round, worker_prg)) {
      bus.Send(std::move(m));
    }
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

  // Collection deadline: agree on the workers whose shares reached both.
  bus.Send(s1.IndexSetMessage(round));
  bus.Send(s2.IndexSetMessage(round));
  bus.Flush();
  s1.AgreeOnParticipants(bus.TakeInbox(s1.id()));
  s2.AgreeOnParticipants(bus.TakeInbox(s2.id()));
  const std::vector<std::size_t> ids = s1.participants();
  if (ids != s2.participants()) {
    throw Error(ErrorCode::kMalformedData, "servers disagree on participants");
  }
  const std::size_t k = ids.size();
  if (k == 0) {
    throw Error(ErrorCode::kTooFewWorkers, "no worker reached both servers");
  }
  res.participants = ids;
  for (std::size_t i : ids) {
    res.encoded_inputs.push_back(EncodeFixed(inputs[i], cfg_.ring));
  }

  const std::vector<ShareVector> x1 = s1.ParticipantShares();
  const std::vector<ShareVector> x2 = s2.ParticipantShares();
  ShareVector z1{Party::kS1, RingVector::Zeros(bits, 1, dim)};
  ShareVector z2{Party::kS2, RingVector::Zeros(bits, 1, dim)};
  WeightVector p_local{std::vector<std::uint64_t>(k, 1)};
  std::vector<std::uint64_t> a_new;
  std::vector<ShareVector> b1;
  std::vector<ShareVector> b2;

  if (!robust) {
    // AggregationAndUpdate, non-robust: local sums.
    for (std::size_t t = 0; t < k; ++t) {
      z1 = Add(z1, x1[t]);
      z2 = Add(z2, x2[t]);
    }
  } else {
    auto& s2_reveals = res.transcripts.Get(PartyId::S2()).reveals;
    DistanceSet dist_b;
    if (byzsgd) {
      if (byz_.a_old.empty()) {
        byz_.a_old.assign(cfg_.n, 0);
        byz_.b_old_s1.assign(cfg_.n,
                             {Party::kS1, RingVector::Zeros(bits, 1, dim)});
        byz_.b_old_s2.assign(cfg_.n,
                             {Party::kS2, RingVector::Zeros(bits, 1, dim)});
      }
      std::vector<double> delta = model_delta_;
      if (delta.empty()) delta.assign(dim, 0.0);
      if (delta.size() != dim) {
        throw Error(ErrorCode::kLengthMismatch, "model delta has wrong length");
      }
      // S1 shares the public w - w0 so that the inner products stay blinded.
      auto [d1, d2] = Share(EncodeFixed(delta, cfg_.ring), s1.prg());
      bus.Send({round, PartyId::S1(), PartyId::S2(), MessageKind::kShareUpload,
                MakePayload(d2.vec)});
      bus.Flush();
      auto delta_msgs =
          OfKind(bus.TakeInbox(PartyId::S2()), MessageKind::kShareUpload);
      const ShareVector delta_on_s2{Party::kS2,
                                    ParsePayload(delta_msgs.at(0).payload).at(0)};
      const std::vector<ShareVector> dl1(k, d1);
      const std::vector<ShareVector> dl2(k, delta_on_s2);
      auto [a1, a2] = Multiply(s1, s2, x1, dl1, x2, dl2, TripleForm::kInner,
                               round, bus);
      const auto a_plain = RevealToS2(a1, a2, round, bus);
      const Ring ring(bits);
      for (std::size_t t = 0; t < k; ++t) {
        a_new.push_back(ring.Add(a_plain[t], byz_.a_old[ids[t]]));
        s2_reveals.push_back({round, "A:" + std::to_string(ids[t]),
                              RingVector{bits, 2, {a_new.back()}}});
        b1.push_back(Add(x1[t], byz_.b_old_s1[ids[t]]));
        b2.push_back(Add(x2[t], byz_.b_old_s2[ids[t]]));
      }
      dist_b = SecureDistances(s1, s2, b1, b2, ids, "dB", round, bits, bus,
                               res.transcripts);
    }

    // RobustWeightSelection.
    const DistanceSet dist = SecureDistances(s1, s2, x1, x2, ids, "d2", round,
                                             bits, bus, res.transcripts);
    if (options.fault == Fault::kLeakDistancesToS1) {
      RingVector leaked{bits, 2, {}};
      for (const auto& [a, b] : Pairs(k)) leaked.elems.push_back(dist.At(a, b));
      bus.Send({round, PartyId::S2(), PartyId::S1(),
                MessageKind::kDistanceReveal, MakePayload(leaked)});
    }
    if (const auto* mk = std::get_if<MultiKrumRule>(&cfg_.rule)) {
      p_local = MultiKrum(dist, mk->f, mk->m);
    } else {
      const auto& params = std::get<ByzSgdRule>(cfg_.rule).params;
      std::vector<std::size_t> good(k);
      for (std::size_t t = 0; t < k; ++t) good[t] = t;
      try {
        p_local = ByzantineSgdSelect(a_new, dist_b, dist, params, good, bits);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoMedianCandidate) throw;
        throw Error(ErrorCode::kOracleAbort, e.what());
      }
      if (p_local.Count() < 2) {
        throw Error(ErrorCode::kOracleAbort,
                    "ByzantineSGD kept fewer than two workers");
      }
    }
    RingVector p_vec{bits, 0, p_local.p};
    s2_reveals.push_back({round, "p", p_vec});

    // S2 secret-shares p with S1.
    auto [p1, p2] = Share(p_vec, s2.prg());
    bus.Send({round, PartyId::S2(), PartyId::S1(), MessageKind::kWeightShare,
              MakePayload(p1.vec)});
    bus.Flush();
    auto weight_msgs =
        OfKind(bus.TakeInbox(PartyId::S1()), MessageKind::kWeightShare);
    const RingVector p_on_s1 = ParsePayload(weight_msgs.at(0).payload).at(0);

    // AggregationAndUpdate: <p_i x_i> with one elementwise triple per worker.
    std::vector<ShareVector> w1;
    std::vector<ShareVector> w2;
    for (std::size_t t = 0; t < k; ++t) {
      w1.push_back(Broadcast({Party::kS1, {bits, 0, {p_on_s1.elems.at(t)}}}, dim));
      w2.push_back(Broadcast({Party::kS2, {bits, 0, {p2.vec.elems.at(t)}}}, dim));
    }
    auto [px1, px2] = Multiply(s1, s2, w1, x1, w2, x2,
                               TripleForm::kElementwise, round, bus);
    for (std::size_t t = 0; t < k; ++t) {
      z1 = Add(z1, px1[t]);
      z2 = Add(z2, px2[t]);
    }
  }

  // S2 sends its share of the aggregate; S1 reveals z.
  bus.Send({round, PartyId::S2(), PartyId::S1(), MessageKind::kAggregateShare,
            MakePayload(z2.vec)});
  bus.Flush();
  auto agg = OfKind(bus.TakeInbox(PartyId::S1()), MessageKind::kAggregateShare);
  if (agg.size() != 1) {
    throw Error(ErrorCode::kMalformedData, "expected one aggregate share");
  }
  const ShareVector z_from_s2{Party::kS2, ParsePayload(agg.front().payload).at(0)};
  res.z = Reconstruct(z1, z_from_s2);
  res.transcripts.Get(PartyId::S1()).reveals.push_back({round, "z", res.z});

  res.p.p.assign(cfg_.n, 0);
  for (std::size_t t = 0; t < k; ++t) res.p.p[ids[t]] = p_local.p[t];
  const std::size_t selected = p_local.Count();
  res.update = DecodeFixed(res.z, cfg_.ring);
  if (cfg_.average && selected > 0) {
    for (double& v : res.update) v /= static_cast<double>(selected);
  }

  // WorkerPullModel.
  for (std::size_t i = 0; i < cfg_.n; ++i) {
    bus.Send({round, PartyId::S1(), PartyId::Worker(i),
              MessageKind::kModelBroadcast, MakePayload(res.z)});
  }
  bus.Flush();
  for (std::size_t i = 0; i < cfg_.n; ++i) bus.TakeInbox(PartyId::Worker(i));

  if (byzsgd) {
    for (std::size_t t = 0; t < k; ++t) {
      byz_.a_old[ids[t]] = a_new[t];
      byz_.b_old_s1[ids[t]] = b1[t];
      byz_.b_old_s2[ids[t]] = b2[t];
    }
  }
  return res;
}

RoundResult RunRoundNonRobust(std::span<const std::vector<double>> inputs,
                              const RoundConfig& cfg, Prg& prg,
                              const RoundOptions& options) {
  if (IsRobust(cfg.rule)) {
    throw Error(ErrorCode::kInvalidConfig,
                "non-robust round requires the mean rule");
  }
  TwoServerSession session(cfg, prg());
  return session.RunRound(inputs, options);
}

RoundResult RunRoundRobust(std::span<const std::vector<double>> inputs,
                           const RoundConfig& cfg, Prg& prg,
                           const RoundOptions& options) {
  if (!IsRobust(cfg.rule)) {
    throw Error(ErrorCode::kInvalidConfig,
                "robust round requires multikrum or byzsgd");
  }
  TwoServerSession session(cfg, prg());
  return session.RunRound(inputs, options);
}

LdpResult LdpAggregate(std::span<const std::vector<double>> inputs,
                       double sigma, const RoundConfig& cfg, Prg& prg) {
  if (IsRobust(cfg.rule)) {
    throw Error(ErrorCode::kInvalidConfig, "LDP noise applies to the mean rule");
  }
  if (!(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "sigma must be non-negative");
  }
  if (inputs.empty()) {
    throw Error(ErrorCode::kTooFewWorkers, "no inputs");
  }
  const std::uint64_t seed = prg();
  Prg noise_prg = Prg(seed).Split(kNoiseStream);
  LdpResult out;
  out.noise.resize(inputs.front().size());
  for (double& v : out.noise) v = noise_prg.Gaussian(sigma);

  std::vector<std::vector<double>> noised(inputs.begin(), inputs.end());
  const double n = static_cast<double>(inputs.size());
  for (std::size_t k = 0; k < out.noise.size(); ++k) {
    noised[0][k] += n * out.noise[k];
  }
  TwoServerSession session(cfg, seed);
  out.round = session.RunRound(noised);
  return out;
}

}  // namespace aegis
