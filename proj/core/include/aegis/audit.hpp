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

#ifndef AEGIS_AUDIT_HPP_
#define AEGIS_AUDIT_HPP_

#include <string>
#include <vector>

#include "aegis/message.hpp"

namespace aegis {

enum class ProtocolKind { kPlain, kTwoServer, kThreeServer };

struct AuditContext {
  ProtocolKind protocol = ProtocolKind::kTwoServer;
  std::string rule = "mean";  // mean | multikrum | byzsgd
};

struct AuditClause {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditClause> clauses;
  std::vector<std::string> notes;

  bool Passed() const;
  const AuditClause* Find(const std::string& name) const;
  std::string Summary() const;
};

// Checks every party's observed messages and local reveals against the view
// each is allowed to have. Two-server clauses:
//   s1_view     S1 receives only ShareUpload/BlindedOpen/WeightShare/
//               AggregateShare and reveals only z;
//   s2_view     S2 reveals only pairwise distances and p (plus A_i and the
//               B-distances under byzsgd), none equal to an input or its S1
//               share;
//   worker_view workers receive only ModelBroadcast.
// Three-server clauses replace s1_view/s2_view with s12_no_distances and
// s3_no_inputs.
AuditReport AuditViews(const TranscriptSet& transcripts,
                       const AuditContext& ctx);

}  // namespace aegis

#endif  // AEGIS_AUDIT_HPP_
