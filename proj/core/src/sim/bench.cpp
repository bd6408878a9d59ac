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

#include "aegis/sim/bench.hpp"

#include <chrono>
#include <iomanip>
#include <vector>

#include "aegis/error.hpp"
#include "aegis/protocol.hpp"
#include "aegis/sim/train.hpp"
#include "aegis/three_server.hpp"

namespace aegis::sim {

double BenchReport::UplinkRatio() const {
  return plain_uplink_bytes == 0
             ? 0.0
             : static_cast<double>(worker_uplink_bytes) /
                   static_cast<double>(plain_uplink_bytes);
}

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

double LinkSeconds(std::uint64_t bytes, double mbps) {
  return static_cast<double>(bytes) * 8.0 / (mbps * 1e6);
}

}  // namespace

BenchReport Bench(const BenchConfig& cfg) {
  BenchReport report;
  report.protocol = std::string(ProtocolName(cfg.protocol));
  report.rule = RuleName(cfg.rule);
  report.n = cfg.n;
  report.d = cfg.dim;
  if (cfg.n == 0 || cfg.dim == 0) return report;
  if (!(cfg.w2s_mbps > 0.0) || !(cfg.s2s_mbps > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "link rates must be positive");
  }
  report.empty = false;

  Prg root(cfg.seed);
  Prg input_prg = root.Split(1);
  std::vector<std::vector<double>> inputs(cfg.n, std::vector<double>(cfg.dim));
  for (auto& x : inputs) {
    for (double& v : x) v = input_prg.UniformReal(-1.0, 1.0);
  }

  // T_grad: one linear-regression gradient over a 32-sample shard.
  TrainTask task;
  task.model = ModelKind::kLinearRegression;
  task.dim = cfg.dim;
  task.samples_per_worker = 32;
  Prg data_prg = root.Split(2);
  const SyntheticData data = MakeData(task, 1, data_prg);
  const std::vector<double> w(cfg.dim, 0.0);
  const auto g0 = Clock::now();
  const std::vector<double> g = Gradient(task.model, data.shards[0], w);
  report.t_grad_s = Seconds(Clock::now() - g0);

  RoundConfig round;
  round.n = cfg.n;
  round.rule = cfg.rule;
  round.ring = cfg.ring;
  TrafficStats traffic;
  const auto c0 = Clock::now();
  switch (cfg.protocol) {
    case ProtocolKind::kPlain: {
      std::vector<RingVector> xs;
      for (const auto& x : inputs) xs.push_back(EncodeFixed(x, cfg.ring));
      ByzSgdPlainState state;
      const RingVector delta = RingVector::Zeros(cfg.ring.bit_width, 1, cfg.dim);
      ReferenceRobustAggregate(xs, cfg.rule, &state, &delta);
      for (std::size_t i = 0; i < cfg.n; ++i) {
        traffic.Record(PartyId::Worker(i), PartyId::S1(),
                       MessageKind::kShareUpload,
                       Message::kHeaderBytes + SerializedSize(cfg.dim));
        traffic.Record(PartyId::S1(), PartyId::Worker(i),
                       MessageKind::kModelBroadcast,
                       Message::kHeaderBytes + SerializedSize(cfg.dim));
      }
      break;
    }
    case ProtocolKind::kTwoServer: {
      TwoServerSession session(round, root.Split(3)());
      traffic = session.RunRound(inputs).traffic;
      break;
    }
    case ProtocolKind::kThreeServer: {
      ThreeServerSession session(round, root.Split(3)());
      traffic = session.RunRound(inputs).round.traffic;
      break;
    }
  }
  report.t_compute_s = Seconds(Clock::now() - c0);

  report.w2s_bytes = traffic.WorkerToServer();
  report.s2w_bytes = traffic.ServerToWorker();
  report.s2s_bytes = traffic.ServerToServer();
  report.s2s_blinded_open_bytes =
      traffic.Bytes(PartyId::S1(), PartyId::S2(), MessageKind::kBlindedOpen);
  report.worker_uplink_bytes = traffic.SentBy(PartyId::Worker(0));
  report.plain_uplink_bytes = 8 * static_cast<std::uint64_t>(cfg.dim);
  report.t_w2s_s = LinkSeconds(report.w2s_bytes + report.s2w_bytes, cfg.w2s_mbps);
  report.t_s2s_s = LinkSeconds(report.s2s_bytes, cfg.s2s_mbps);
  return report;
}

void WriteBenchCsvHeader(std::ostream& out) {
  out << "protocol,rule,n,d,T_grad,T_compute,T_w2s,T_s2s,w2s_bytes,s2w_bytes,"
         "s2s_bytes,s2s_blinded_open_bytes,worker_uplink_bytes,"
         "plain_uplink_bytes,uplink_ratio\n";
}

void WriteBenchCsvRow(std::ostream& out, const BenchReport& r,
                      bool wall_clock) {
  out << r.protocol << ',' << r.rule << ',' << r.n << ',' << r.d << ','
      << std::setprecision(9) << (wall_clock ? r.t_grad_s : 0.0) << ','
      << (wall_clock ? r.t_compute_s : 0.0) << ',' << r.t_w2s_s << ','
      << r.t_s2s_s << ',' << r.w2s_bytes << ',' << r.s2w_bytes << ','
      << r.s2s_bytes << ',' << r.s2s_blinded_open_bytes << ','
      << r.worker_uplink_bytes << ',' << r.plain_uplink_bytes << ','
      << r.UplinkRatio() << '\n';
}

}  // namespace aegis::sim
