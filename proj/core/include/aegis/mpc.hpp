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

#ifndef AEGIS_MPC_HPP_
#define AEGIS_MPC_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "aegis/prg.hpp"
#include "aegis/ring.hpp"

namespace aegis {

enum class TripleForm : std::uint8_t {
  kElementwise = 0,  // c = a (.) b, all of length dim
  kInner = 1,        // c = <a, b>, a scalar
};

// One party's share of a Beaver triple. The two shares of a triple carry the
// same id; consumption is tracked per share.
struct BeaverTripleShare {
  Party party = Party::kS1;
  TripleForm form = TripleForm::kElementwise;
  std::uint64_t id = 0;
  RingVector a;
  RingVector b;
  RingVector c;
  bool consumed = false;

  std::size_t dim() const { return a.size(); }
};

// Either one party's local contribution (x_i - a_i, y_i - b_i) or, after
// OpenBlinded(), the public values x - a and y - b.
struct BlindedOpen {
  std::uint64_t triple_id = 0;
  RingVector x_minus_a;
  RingVector y_minus_b;
};

struct TripleBatch {
  std::vector<BeaverTripleShare> s1;
  std::vector<BeaverTripleShare> s2;
};

// Trusted dealer. a and b are uniform; c is re-shared with a fresh mask.
TripleBatch DealerMakeTriples(std::size_t count, std::size_t dim,
                              TripleForm form, unsigned bit_width, Prg& prg,
                              std::uint64_t first_id = 0);

// Reconstruction check of the c = ab (or c = <a,b>) relation.
bool TripleIsValid(const BeaverTripleShare& s1, const BeaverTripleShare& s2);

// Local step: returns this party's contribution and marks the triple used.
// x and y must be shares of the same party as the triple; in the inner form
// both have length dim, in the elementwise form too.
BlindedOpen BeaverOpen(const ShareVector& x, const ShareVector& y,
                       BeaverTripleShare& triple);

// Sums two parties' contributions into the public opened values.
BlindedOpen OpenBlinded(const BlindedOpen& mine, const BlindedOpen& theirs);

enum class CrossTerm : bool { kOmit = false, kAdd = true };

// z_i = c_i + (x-a) b_i + (y-b) a_i, plus (x-a)(y-b) for the party that adds
// the cross term (S1 by convention). The output scale is the sum of the input
// scales.
ShareVector BeaverCombine(const BlindedOpen& opened,
                          const BeaverTripleShare& triple, CrossTerm role);

inline CrossTerm CrossTermFor(Party p) {
  return p == Party::kS1 ? CrossTerm::kAdd : CrossTerm::kOmit;
}

struct SquaredNormOutcome {
  RingVector value;        // length 1, scale 2
  BlindedOpen opened;      // what the non-revealing party sees
  ShareVector share_s1;    // S1's share of the norm before reveal
  ShareVector share_s2;
};

// Both parties' halves of the squared-norm protocol run back to back, for
// tests and single-process callers. The protocol layer drives the same steps
// through messages.
SquaredNormOutcome SecureSquaredNorm(const ShareVector& diff_s1,
                                     const ShareVector& diff_s2,
                                     BeaverTripleShare& triple_s1,
                                     BeaverTripleShare& triple_s2,
                                     const RingConfig& cfg);

// Elementwise or inner product of two shared vectors, both halves run locally.
SharePair SecureMultiply(const SharePair& x, const SharePair& y,
                         BeaverTripleShare& triple_s1,
                         BeaverTripleShare& triple_s2);

// FIFO inventory of one party's triples. Both parties pull in the same order,
// so ids stay aligned.
class TripleStore {
 public:
  explicit TripleStore(Party party) : party_(party) {}

  void Add(std::vector<BeaverTripleShare> triples);
  BeaverTripleShare Take(TripleForm form, std::size_t dim);
  std::size_t Remaining(TripleForm form) const;
  Party party() const { return party_; }

 private:
  Party party_;
  std::deque<BeaverTripleShare> elementwise_;
  std::deque<BeaverTripleShare> inner_;
};

// Triple file: 16-byte header (form: 1, count: 8 LE, dim: 4 LE,
// bit_width: 1, 2 bytes zero padding) followed by a || b || c per triple in
// the ring vector layout.
inline constexpr std::size_t kTripleFileHeaderBytes = 16;
void WriteTripleFile(std::ostream& out,
                     std::span<const BeaverTripleShare> triples);
std::vector<BeaverTripleShare> ReadTripleFile(std::istream& in, Party party);

}  // namespace aegis

#endif  // AEGIS_MPC_HPP_
