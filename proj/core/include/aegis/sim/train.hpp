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

#ifndef AEGIS_SIM_TRAIN_HPP_
#define AEGIS_SIM_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aegis/audit.hpp"
#include "aegis/message.hpp"
#include "aegis/prg.hpp"
#include "aegis/protocol.hpp"
#include "aegis/sim/attack.hpp"

namespace aegis::sim {

enum class ModelKind { kLinearRegression, kLogisticRegression };
enum class Sharding { kIid, kLabelSkew };

std::string_view ModelName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);
std::string_view ShardingName(Sharding kind);
Sharding ParseSharding(std::string_view name);
std::string_view ProtocolName(ProtocolKind kind);
ProtocolKind ParseProtocol(std::string_view name);

struct TrainTask {
  ModelKind model = ModelKind::kLogisticRegression;
  std::size_t dim = 10;
  std::size_t samples_per_worker = 64;
  Sharding sharding = Sharding::kIid;
  double eta = 0.5;
  std::size_t rounds = 30;
  // L2 clip applied to honest gradients; 0 selects the ring bound B.
  double clip = 0.0;
  // Linear regression label noise standard deviation.
  double noise = 0.1;
};

struct Shard {
  std::vector<std::vector<double>> features;
  std::vector<double> labels;
};

struct SyntheticData {
  std::vector<double> w_star;
  std::vector<Shard> shards;
};

// Seeded shards for n workers. Label skew sorts the pooled samples by label
// before dealing contiguous blocks.
SyntheticData MakeData(const TrainTask& task, std::size_t n, Prg& prg);

// Mean squared error / 2 or mean cross-entropy over the samples.
double Loss(ModelKind model, std::span<const Shard> shards,
            std::span<const double> w);
std::vector<double> Gradient(ModelKind model, const Shard& shard,
                             std::span<const double> w);

struct RoundMetrics {
  std::size_t round = 0;
  double loss = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::size_t> selected;
  std::optional<bool> audit_passed;
  std::size_t clipped = 0;      // honest gradients shortened by the L2 clip
  double max_grad_norm = 0.0;   // largest honest norm before clipping
  std::uint64_t w2s_bytes = 0;
  std::uint64_t s2s_bytes = 0;
};

struct TrainResult {
  std::vector<RoundMetrics> rounds;
  std::vector<double> weights;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t aborted_rounds = 0;
  bool audits_passed = true;
  // Every round's transcripts, when TrainOptions::keep_transcripts is set.
  TranscriptSet transcripts;
};

struct TrainOptions {
  bool audit = true;
  bool keep_transcripts = false;
};

// Workers compute full-batch gradients on their shards, Byzantine workers
// transform theirs, the chosen protocol aggregates and the model takes
// w <- w - eta * update. Loss is measured on the honest shards.
TrainResult Train(const TrainTask& task, const RoundConfig& cfg,
                  const AttackSpec& attack, ProtocolKind protocol,
                  std::uint64_t seed, const TrainOptions& options = {});

void WriteTrainCsvHeader(std::ostream& out);
void WriteTrainCsvRows(std::ostream& out, const TrainResult& result,
                       std::uint64_t seed);

}  // namespace aegis::sim

#endif  // AEGIS_SIM_TRAIN_HPP_
