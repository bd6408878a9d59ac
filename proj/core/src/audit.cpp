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

#include "aegis/audit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace aegis {

bool AuditReport::Passed() const {
  return std::all_of(clauses.begin(), clauses.end(),
                     [](const AuditClause& c) { return c.passed; });
}

const AuditClause* AuditReport::Find(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string AuditReport::Summary() const {
  std::ostringstream out;
  for (const auto& c : clauses) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << '\n';
  }
  for (const auto& n : notes) out << "note: " << n << '\n';
  return out.str();
}

namespace {

bool StartsWith(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

void Fail(AuditClause& c, const std::string& why) {
  if (c.passed) c.detail = why;
  c.passed = false;
}

AuditClause CheckReceivedKinds(const PartyTranscript* t, const char* name,
                               const std::set<MessageKind>& allowed) {
  AuditClause c{name, true, {}};
  if (t == nullptr) return c;
  for (const auto& m : t->received) {
    if (!allowed.contains(m.kind)) {
      Fail(c, t->party.Name() + " received " + std::string(KindName(m.kind)) +
                  " from " + m.from.Name());
    }
  }
  return c;
}

void CheckOnlyZ(const PartyTranscript* t, AuditClause& c) {
  if (t == nullptr) return;
  for (const auto& r : t->reveals) {
    if (r.label != "z") {
      Fail(c, t->party.Name() + " revealed '" + r.label + "'");
    }
  }
}

// Inputs and S1 shares per round, rebuilt from the servers' received uploads.
std::map<std::uint64_t, std::vector<RingVector>> SensitiveValues(
    const TranscriptSet& ts) {
  std::map<std::uint64_t, std::map<std::uint32_t, RingVector>> s1_shares;
  std::map<std::uint64_t, std::map<std::uint32_t, RingVector>> s2_shares;
  auto collect = [](const PartyTranscript* t, auto& into) {
    if (t == nullptr) return;
    for (const auto& m : t->received) {
      if (m.kind != MessageKind::kShareUpload || !m.from.is_worker()) continue;
      auto vs = ParsePayload(m.payload);
      if (vs.size() == 1) into[m.round][m.from.value] = vs.front();
    }
  };
  collect(ts.Find(PartyId::S1()), s1_shares);
  collect(ts.Find(PartyId::S2()), s2_shares);
  std::map<std::uint64_t, std::vector<RingVector>> out;
  for (const auto& [round, shares] : s1_shares) {
    for (const auto& [w, share] : shares) {
      out[round].push_back(share);
      auto it = s2_shares[round].find(w);
      if (it != s2_shares[round].end() && it->second.size() == share.size() &&
          it->second.bit_width == share.bit_width) {
        out[round].push_back(Add(share, it->second));
      }
    }
  }
  return out;
}

}  // namespace

AuditReport AuditViews(const TranscriptSet& ts, const AuditContext& ctx) {
  AuditReport report;
  const PartyTranscript* s1 = ts.Find(PartyId::S1());
  const PartyTranscript* s2 = ts.Find(PartyId::S2());
  const PartyTranscript* s3 = ts.Find(PartyId::S3());

  if (ctx.protocol == ProtocolKind::kThreeServer) {
    AuditClause s12{"s12_no_distances", true, {}};
    const std::set<MessageKind> allowed = {
        MessageKind::kShareUpload, MessageKind::kBlindedOpen,
        MessageKind::kSelectionShare, MessageKind::kAggregateShare};
    for (const auto* t : {s1, s2}) {
      const AuditClause kinds = CheckReceivedKinds(t, "kinds", allowed);
      if (!kinds.passed) Fail(s12, kinds.detail);
      CheckOnlyZ(t, s12);
    }
    report.clauses.push_back(s12);

    AuditClause s3c{"s3_no_inputs", true, {}};
    if (s3 != nullptr) {
      for (const auto& m : s3->received) {
        if (m.kind == MessageKind::kShareUpload) {
          Fail(s3c, "S3 received a ShareUpload from " + m.from.Name());
        }
      }
      if (!s3->reveals.empty()) {
        Fail(s3c, "S3 revealed '" + s3->reveals.front().label + "'");
      }
    }
    report.clauses.push_back(s3c);
  } else {
    AuditClause s1c = CheckReceivedKinds(
        s1, "s1_view",
        {MessageKind::kShareUpload, MessageKind::kBlindedOpen,
         MessageKind::kWeightShare, MessageKind::kAggregateShare});
    CheckOnlyZ(s1, s1c);
    if (s1 != nullptr &&
        std::none_of(s1->reveals.begin(), s1->reveals.end(),
                     [](const Reveal& r) { return r.label == "z"; })) {
      Fail(s1c, "S1 never revealed z");
    }
    report.clauses.push_back(s1c);

    AuditClause s2c{"s2_view", true, {}};
    const bool robust = ctx.rule != "mean";
    const bool byzsgd = ctx.rule == "byzsgd";
    if (s2 != nullptr) {
      const auto sensitive = SensitiveValues(ts);
      for (const auto& r : s2->reveals) {
        const bool allowed =
            robust && (r.label == "p" || StartsWith(r.label, "d2:") ||
                       (byzsgd && (StartsWith(r.label, "A:") ||
                                   StartsWith(r.label, "dB:"))));
        if (!allowed) Fail(s2c, "S2 revealed '" + r.label + "'");
        auto it = sensitive.find(r.round);
        if (it == sensitive.end()) continue;
        for (const auto& v : it->second) {
          if (v == r.value) {
            Fail(s2c, "S2 reveal '" + r.label +
                          "' equals a worker input or its S1 share");
          }
        }
      }
      if (robust) {
        std::set<std::uint64_t> rounds_with_p;
        for (const auto& r : s2->reveals) {
          if (r.label == "p") rounds_with_p.insert(r.round);
        }
        for (const auto& [round, values] : sensitive) {
          if (!rounds_with_p.contains(round)) {
            Fail(s2c, "round " + std::to_string(round) +
                          " has no weight selection on S2");
          }
        }
      }
    }
    report.clauses.push_back(s2c);
    if (byzsgd) {
      report.notes.push_back(
          "byzsgd: S2 sees accumulated inner products A_i and distances of "
          "accumulated updates B_i; these are whitelisted, not proven private");
    }
  }

  AuditClause workers{"worker_view", true, {}};
  for (const auto& [id, t] : ts.parties()) {
    if (!id.is_worker()) continue;
    for (const auto& m : t.received) {
      if (m.kind != MessageKind::kModelBroadcast) {
        Fail(workers, id.Name() + " received " + std::string(KindName(m.kind)));
      }
    }
    if (!t.reveals.empty()) Fail(workers, id.Name() + " holds reveals");
  }
  report.clauses.push_back(workers);
  return report;
}

}  // namespace aegis
