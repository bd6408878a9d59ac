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

#ifndef AEGIS_SIM_BENCH_HPP_
#define AEGIS_SIM_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>

#include "aegis/audit.hpp"
#include "aegis/oracles.hpp"
#include "aegis/ring.hpp"

namespace aegis::sim {

struct BenchConfig {
  ProtocolKind protocol = ProtocolKind::kTwoServer;
  AggregationRule rule = MultiKrumRule{1, 3};
  std::size_t n = 5;
  std::size_t dim = 1000;
  RingConfig ring{64, 16, 16.0};
  double w2s_mbps = 100.0;
  double s2s_mbps = 1000.0;
  std::uint64_t seed = 1;
};

struct BenchReport {
  std::string protocol;
  std::string rule;
  std::size_t n = 0;
  std::size_t d = 0;
  bool empty = true;
  double t_grad_s = 0.0;     // wall clock, one worker gradient
  double t_compute_s = 0.0;  // wall clock, the whole aggregation round
  std::uint64_t w2s_bytes = 0;
  std::uint64_t s2w_bytes = 0;
  std::uint64_t s2s_bytes = 0;
  std::uint64_t s2s_blinded_open_bytes = 0;  // S1 -> S2 only
  std::uint64_t worker_uplink_bytes = 0;     // worker 0, all messages
  std::uint64_t plain_uplink_bytes = 0;      // 8 * d raw elements
  double t_w2s_s = 0.0;  // (w2s + s2w) bytes over the worker link rate
  double t_s2s_s = 0.0;  // s2s bytes over the server link rate

  double UplinkRatio() const;
};

// One aggregation round over synthetic updates in [-1, 1]^d.
BenchReport Bench(const BenchConfig& cfg);

void WriteBenchCsvHeader(std::ostream& out);
// wall_clock = false writes 0 for the two measured timing columns, so the
// row is a pure function of the configuration.
void WriteBenchCsvRow(std::ostream& out, const BenchReport& report,
                      bool wall_clock = true);

}  // namespace aegis::sim

#endif  // AEGIS_SIM_BENCH_HPP_
