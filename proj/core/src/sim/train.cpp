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

#include "aegis/sim/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "aegis/error.hpp"
#include "aegis/three_server.hpp"

namespace aegis::sim {

std::string_view ModelName(ModelKind kind) {
  return kind == ModelKind::kLinearRegression ? "linear_regression"
                                              : "logistic_regression";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "linear_regression") return ModelKind::kLinearRegression;
  if (name == "logistic_regression") return ModelKind::kLogisticRegression;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown model '" + std::string(name) + "'");
}

std::string_view ShardingName(Sharding kind) {
  return kind == Sharding::kIid ? "iid" : "label_skew";
}

Sharding ParseSharding(std::string_view name) {
  if (name == "iid") return Sharding::kIid;
  if (name == "label_skew") return Sharding::kLabelSkew;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown sharding '" + std::string(name) + "'");
}

std::string_view ProtocolName(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kPlain:
      return "plain";
    case ProtocolKind::kTwoServer:
      return "two_server";
    case ProtocolKind::kThreeServer:
      return "three_server";
  }
  return "plain";
}

ProtocolKind ParseProtocol(std::string_view name) {
  for (ProtocolKind k : {ProtocolKind::kPlain, ProtocolKind::kTwoServer,
                         ProtocolKind::kThreeServer}) {
    if (ProtocolName(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown protocol '" + std::string(name) + "'");
}

namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double Sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

}  // namespace

SyntheticData MakeData(const TrainTask& task, std::size_t n, Prg& prg) {
  if (task.dim == 0 || task.samples_per_worker == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "task needs positive dim and samples per worker");
  }
  SyntheticData data;
  data.w_star.resize(task.dim);
  for (double& v : data.w_star) v = prg.Gaussian(1.0);

  struct Sample {
    std::vector<double> x;
    double y;
  };
  std::vector<Sample> pool(n * task.samples_per_worker);
  for (auto& s : pool) {
    s.x.resize(task.dim);
    for (double& v : s.x) v = prg.Gaussian(1.0);
    const double t = Dot(s.x, data.w_star);
    if (task.model == ModelKind::kLinearRegression) {
      s.y = t + prg.Gaussian(task.noise);
    } else {
      s.y = prg.UniformReal(0.0, 1.0) < Sigmoid(t) ? 1.0 : 0.0;
    }
  }
  if (task.sharding == Sharding::kLabelSkew) {
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Sample& a, const Sample& b) { return a.y < b.y; });
  }
  data.shards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < task.samples_per_worker; ++k) {
      auto& s = pool[i * task.samples_per_worker + k];
      data.shards[i].features.push_back(std::move(s.x));
      data.shards[i].labels.push_back(s.y);
    }
  }
  return data;
}

double Loss(ModelKind model, std::span<const Shard> shards,
            std::span<const double> w) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& shard : shards) {
    for (std::size_t k = 0; k < shard.labels.size(); ++k) {
      const double t = Dot(shard.features[k], w);
      const double y = shard.labels[k];
      if (model == ModelKind::kLinearRegression) {
        total += 0.5 * (t - y) * (t - y);
      } else {
        // log(1 + e^t) - y t, evaluated stably.
        total += std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))) - y * t;
      }
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::vector<double> Gradient(ModelKind model, const Shard& shard,
                             std::span<const double> w) {
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t k = 0; k < shard.labels.size(); ++k) {
    const double t = Dot(shard.features[k], w);
    const double r = model == ModelKind::kLinearRegression
                         ? t - shard.labels[k]
                         : Sigmoid(t) - shard.labels[k];
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] += r * shard.features[k][j];
    }
  }
  if (!shard.labels.empty()) {
    for (double& v : g) v /= static_cast<double>(shard.labels.size());
  }
  return g;
}

namespace {

// Aggregation of one round's (post-attack) inputs.
struct Aggregated {
  std::vector<double> update;
  WeightVector p;
  TranscriptSet transcripts;
  TrafficStats traffic;
};

class Aggregator {
 public:
  Aggregator(const RoundConfig& cfg, ProtocolKind protocol, std::uint64_t seed)
      : cfg_(cfg), protocol_(protocol) {
    switch (protocol) {
      case ProtocolKind::kPlain:
        break;
      case ProtocolKind::kTwoServer:
        two_.emplace(cfg, seed);
        break;
      case ProtocolKind::kThreeServer:
        three_.emplace(cfg, seed);
        break;
    }
  }

  Aggregated Run(std::span<const std::vector<double>> inputs,
                 std::span<const double> model_delta) {
    Aggregated out;
    if (protocol_ == ProtocolKind::kTwoServer) {
      two_->SetModelDelta({model_delta.begin(), model_delta.end()});
      RoundResult r = two_->RunRound(inputs);
      out.update = std::move(r.update);
      out.p = std::move(r.p);
      out.transcripts = std::move(r.transcripts);
      out.traffic = std::move(r.traffic);
      return out;
    }
    if (protocol_ == ProtocolKind::kThreeServer) {
      ThreeServerResult r = three_->RunRound(inputs);
      out.update = std::move(r.round.update);
      out.p = std::move(r.round.p);
      out.transcripts = std::move(r.round.transcripts);
      out.traffic = std::move(r.round.traffic);
      return out;
    }
    std::vector<RingVector> xs;
    for (const auto& x : inputs) xs.push_back(EncodeFixed(x, cfg_.ring));
    const RingVector delta = EncodeFixed(model_delta, cfg_.ring);
    ReferenceResult ref =
        ReferenceRobustAggregate(xs, cfg_.rule, &plain_state_, &delta);
    out.update = DecodeFixed(ref.z, cfg_.ring);
    const std::size_t selected = ref.p.Count();
    if (cfg_.average && selected > 0) {
      for (double& v : out.update) v /= static_cast<double>(selected);
    }
    out.p = std::move(ref.p);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      out.traffic.Record(PartyId::Worker(i), PartyId::S1(),
                         MessageKind::kShareUpload,
                         Message::kHeaderBytes + SerializedSize(inputs[i].size()));
    }
    return out;
  }

 private:
  RoundConfig cfg_;
  ProtocolKind protocol_;
  std::optional<TwoServerSession> two_;
  std::optional<ThreeServerSession> three_;
  ByzSgdPlainState plain_state_;
};

}  // namespace

TrainResult Train(const TrainTask& task, const RoundConfig& cfg,
                  const AttackSpec& attack, ProtocolKind protocol,
                  std::uint64_t seed, const TrainOptions& options) {
  cfg.Validate();
  attack.Validate(cfg.n, cfg.alpha);
  if (task.rounds == 0) {
    throw Error(ErrorCode::kInvalidConfig, "task needs at least one round");
  }
  const Prg root(seed);
  Prg data_prg = root.Split(1);
  const SyntheticData data = MakeData(task, cfg.n, data_prg);
  const double bound = cfg.ring.bound;
  const double clip = task.clip > 0.0 ? task.clip : bound;
  double eta = task.eta;
  if (cfg.ldp && cfg.ldp->eta > 0.0) eta = cfg.ldp->eta;
  const bool ldp = cfg.ldp && cfg.ldp->sigma > 0.0;
  if (ldp && IsRobust(cfg.rule)) {
    throw Error(ErrorCode::kInvalidConfig, "LDP noise applies to the mean rule");
  }

  std::vector<Shard> honest;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    if (!attack.IsByzantine(i)) honest.push_back(data.shards[i]);
  }

  Aggregator aggregator(cfg, protocol, root.Split(4)());
  const std::string rule_name = RuleName(cfg.rule);
  TrainResult result;
  std::vector<double> w(task.dim, 0.0);
  const std::vector<double> w0 = w;
  result.initial_loss = Loss(task.model, honest, w);

  for (std::size_t round = 0; round < task.rounds; ++round) {
    RoundMetrics metrics;
    metrics.round = round;
    Prg round_prg = root.Split(100 + round);
    Prg attack_prg = round_prg.Split(1);
    Prg noise_prg = round_prg.Split(2);

    std::vector<std::vector<double>> inputs(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      std::vector<double> g = Gradient(task.model, data.shards[i], w);
      const double norm = Norm(g);
      if (!attack.IsByzantine(i)) {
        metrics.max_grad_norm = std::max(metrics.max_grad_norm, norm);
        if (norm > clip) {
          for (double& v : g) v *= clip / norm;
          ++metrics.clipped;
        }
      }
      g = ApplyAttack(g, attack, i, attack_prg);
      if (i == 0 && ldp) {
        const double scale = static_cast<double>(cfg.n);
        for (double& v : g) v += scale * noise_prg.Gaussian(cfg.ldp->sigma);
      }
      for (double& v : g) v = std::clamp(v, -bound, bound);
      inputs[i] = std::move(g);
    }
    std::vector<double> delta(task.dim);
    for (std::size_t k = 0; k < task.dim; ++k) {
      delta[k] = std::clamp(w[k] - w0[k], -bound, bound);
    }

    try {
      Aggregated agg = aggregator.Run(inputs, delta);
      for (std::size_t k = 0; k < task.dim; ++k) w[k] -= eta * agg.update[k];
      metrics.selected = agg.p.Selected();
      metrics.w2s_bytes = agg.traffic.WorkerToServer();
      metrics.s2s_bytes = agg.traffic.ServerToServer();
      if (options.audit && protocol != ProtocolKind::kPlain) {
        const AuditReport report =
            AuditViews(agg.transcripts, {protocol, rule_name});
        metrics.audit_passed = report.Passed();
        result.audits_passed = result.audits_passed && report.Passed();
      }
      if (options.keep_transcripts) result.transcripts.Merge(agg.transcripts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOracleAbort) throw;
      metrics.aborted = true;
      metrics.abort_reason = e.what();
      ++result.aborted_rounds;
    }
    metrics.loss = Loss(task.model, honest, w);
    result.rounds.push_back(std::move(metrics));
  }
  result.weights = w;
  result.final_loss = result.rounds.back().loss;
  return result;
}

void WriteTrainCsvHeader(std::ostream& out) {
  out << "seed,round,loss,aborted,selected,audit,clipped,max_grad_norm,"
         "w2s_bytes,s2s_bytes\n";
}

void WriteTrainCsvRows(std::ostream& out, const TrainResult& result,
                       std::uint64_t seed) {
  for (const auto& m : result.rounds) {
    std::ostringstream sel;
    for (std::size_t k = 0; k < m.selected.size(); ++k) {
      if (k > 0) sel << ' ';
      sel << m.selected[k];
    }
    const char* audit =
        !m.audit_passed ? "na" : (*m.audit_passed ? "pass" : "fail");
    out << seed << ',' << m.round << ',' << std::setprecision(17) << m.loss << ','
        << (m.aborted ? 1 : 0) << ',' << sel.str() << ',' << audit << ','
        << m.clipped << ',' << m.max_grad_norm << ',' << m.w2s_bytes << ','
        << m.s2s_bytes << '\n';
  }
}

}  // namespace aegis::sim
