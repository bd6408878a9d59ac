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

#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "aegis/audit.hpp"
#include "aegis/error.hpp"
#include "aegis/mpc.hpp"
#include "aegis/protocol.hpp"
#include "aegis/sim/bench.hpp"
#include "aegis/sim/config.hpp"
#include "aegis/sim/train.hpp"
#include "aegis/three_server.hpp"

namespace aegis::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kCoordinateOutOfBound:
    case ErrorCode::kOverflowRisk:
    case ErrorCode::kTooFewWorkers:
    case ErrorCode::kFieldOverflow:
    case ErrorCode::kMalformedData:
      return kExitConfigError;
    default:
      return kExitProtocolError;
  }
}

// Flags shared by round, train and bench; unset flags leave the config
// file (or its defaults) alone.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> protocol;
  std::optional<std::string> rule;
  std::optional<std::size_t> n;
  std::optional<std::size_t> f;
  std::optional<std::size_t> m;
  std::optional<double> alpha;
  std::optional<double> t_a;
  std::optional<double> t_b;
  std::optional<double> nu;
  std::optional<unsigned> bit_width;
  std::optional<unsigned> frac_bits;
  std::optional<double> bound;
  std::optional<std::uint64_t> seed;
  bool sum = false;
};

void AddOverrides(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "YAML configuration file");
  app->add_option("--protocol", o.protocol, "plain | two_server | three_server");
  app->add_option("--rule", o.rule, "mean | multikrum | byzsgd");
  app->add_option("--n", o.n, "number of workers");
  app->add_option("--f", o.f, "Multi-Krum: assumed Byzantine count");
  app->add_option("--m", o.m, "Multi-Krum: workers selected");
  app->add_option("--alpha", o.alpha, "Byzantine fraction bound");
  app->add_option("--t-a", o.t_a, "ByzantineSGD threshold on A");
  app->add_option("--t-b", o.t_b, "ByzantineSGD threshold on B");
  app->add_option("--nu", o.nu, "ByzantineSGD gradient deviation bound");
  app->add_option("--bit-width", o.bit_width, "ring bit width");
  app->add_option("--frac-bits", o.frac_bits, "fixed-point fractional bits");
  app->add_option("--bound", o.bound, "coordinate bound B");
  app->add_option("--seed", o.seed, "root seed (overrides AEGIS_SEED)");
  app->add_flag("--sum", o.sum, "apply the weighted sum instead of the average");
}

sim::SimConfig Resolve(const Overrides& o) {
  sim::SimConfig cfg =
      o.config ? sim::LoadSimConfig(*o.config) : sim::SimConfig{};
  sim::ApplySeedEnv(cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.protocol) cfg.protocol = sim::ParseProtocol(*o.protocol);
  if (o.n) cfg.round.n = *o.n;
  if (o.alpha) cfg.round.alpha = *o.alpha;
  if (o.bit_width) cfg.round.ring.bit_width = *o.bit_width;
  if (o.frac_bits) cfg.round.ring.frac_bits = *o.frac_bits;
  if (o.bound) cfg.round.ring.bound = *o.bound;
  if (o.rule) cfg.rule.kind = *o.rule;
  if (o.f) cfg.rule.f = *o.f;
  if (o.m) cfg.rule.m = *o.m;
  if (o.t_a) cfg.rule.t_a = *o.t_a;
  if (o.t_b) cfg.rule.t_b = *o.t_b;
  if (o.nu) cfg.rule.nu = *o.nu;
  if (o.sum) cfg.round.average = false;
  cfg.BuildRule();
  return cfg;
}

std::vector<std::vector<double>> ReadInputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedData, path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("inputs")) doc = doc["inputs"];
  if (!doc.is_array() || doc.empty()) {
    throw Error(ErrorCode::kMalformedData,
                path + ": expected a non-empty array of vectors");
  }
  try {
    return doc.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedData, path + ": " + e.what());
  }
}

void WriteManifest(const fs::path& dir, const sim::SimConfig& cfg,
                   std::size_t rounds) {
  json manifest = {{"protocol", sim::ProtocolName(cfg.protocol)},
                   {"rule", RuleName(cfg.round.rule)},
                   {"n", cfg.round.n},
                   {"rounds", rounds},
                   {"seed", cfg.seed}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

json AuditJson(const AuditReport& report) {
  json clauses = json::array();
  for (const auto& c : report.clauses) {
    clauses.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"passed", report.Passed()},
          {"clauses", clauses},
          {"notes", report.notes}};
}

std::vector<std::uint64_t> RawElems(const RingVector& v) { return v.elems; }

// --- round -----------------------------------------------------------------

struct RoundArgs {
  Overrides o;
  std::string input;
  std::vector<std::size_t> drop_s1;
  std::vector<std::size_t> drop_s2;
  std::optional<double> sigma;
  std::optional<std::string> transcripts;
  bool audit = false;
};

int RunRound(const RoundArgs& a, std::ostream& out, std::ostream& err) {
  sim::SimConfig cfg = Resolve(a.o);
  const auto inputs = ReadInputs(a.input);
  if (a.o.n && *a.o.n != inputs.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "--n is " + std::to_string(*a.o.n) + " but the input has " +
                    std::to_string(inputs.size()) + " vectors");
  }
  cfg.round.n = inputs.size();
  if (!a.o.alpha && !a.o.config) cfg.round.alpha = 0.49;
  cfg.round.Validate();

  RoundOptions options;
  options.drop_at_s1 = a.drop_s1;
  options.drop_at_s2 = a.drop_s2;
  const std::string rule = RuleName(cfg.round.rule);
  json result = {{"protocol", sim::ProtocolName(cfg.protocol)},
                 {"rule", rule},
                 {"n", cfg.round.n},
                 {"seed", cfg.seed}};
  Prg prg(cfg.seed);
  RoundResult round;
  if (a.sigma && *a.sigma > 0.0) {
    if (cfg.protocol != ProtocolKind::kTwoServer) {
      throw Error(ErrorCode::kInvalidConfig,
                  "LDP noise runs on the two-server protocol");
    }
    LdpResult ldp = LdpAggregate(inputs, *a.sigma, cfg.round, prg);
    result["noise"] = ldp.noise;
    round = std::move(ldp.round);
  } else if (cfg.protocol == ProtocolKind::kPlain) {
    std::vector<RingVector> xs;
    for (const auto& x : inputs) xs.push_back(EncodeFixed(x, cfg.round.ring));
    ByzSgdPlainState state;
    const RingVector delta =
        RingVector::Zeros(cfg.round.ring.bit_width, 1, inputs.front().size());
    ReferenceResult ref =
        ReferenceRobustAggregate(xs, cfg.round.rule, &state, &delta);
    round.z = ref.z;
    round.p = ref.p;
    round.update = DecodeFixed(ref.z, cfg.round.ring);
    if (cfg.round.average && ref.p.Count() > 0) {
      for (double& v : round.update) v /= static_cast<double>(ref.p.Count());
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) round.participants.push_back(i);
  } else if (cfg.protocol == ProtocolKind::kTwoServer) {
    TwoServerSession session(cfg.round, prg());
    round = session.RunRound(inputs, options);
  } else {
    ThreeServerSession session(cfg.round, prg());
    round = session.RunRound(inputs, options).round;
  }

  result["z"] = DecodeFixed(round.z, cfg.round.ring);
  result["z_ring"] = RawElems(round.z);
  result["update"] = round.update;
  result["p"] = round.p.p;
  result["participants"] = round.participants;
  result["bytes"] = {{"worker_to_server", round.traffic.WorkerToServer()},
                     {"server_to_server", round.traffic.ServerToServer()},
                     {"server_to_worker", round.traffic.ServerToWorker()}};
  int code = kExitOk;
  if (cfg.protocol != ProtocolKind::kPlain) {
    if (a.transcripts) {
      const fs::path dir(*a.transcripts);
      round.transcripts.WriteJsonl(dir);
      WriteManifest(dir, cfg, 1);
    }
    if (a.audit) {
      const AuditReport report =
          AuditViews(round.transcripts, {cfg.protocol, rule});
      result["audit"] = AuditJson(report);
      if (!report.Passed()) {
        err << "audit failed:\n" << report.Summary();
        code = kExitAuditFailure;
      }
    }
  }
  out << result.dump(2) << '\n';
  return code;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  Overrides o;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> dim;
  std::optional<std::string> model;
  std::optional<std::string> sharding;
  std::optional<double> eta;
  std::optional<std::string> attack;
  std::optional<std::vector<std::size_t>> byz;
  std::optional<double> factor;
  std::optional<double> magnitude;
  std::optional<double> attack_sigma;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> csv;
  std::optional<std::string> transcripts;
};

int RunTrain(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  sim::SimConfig cfg = Resolve(a.o);
  if (a.rounds) cfg.task.rounds = *a.rounds;
  if (a.dim) cfg.task.dim = *a.dim;
  if (a.model) cfg.task.model = sim::ParseModelKind(*a.model);
  if (a.sharding) cfg.task.sharding = sim::ParseSharding(*a.sharding);
  if (a.eta) cfg.task.eta = *a.eta;
  if (a.attack) cfg.attack.kind = sim::ParseAttackKind(*a.attack);
  if (a.byz) cfg.attack.byz_indices = *a.byz;
  if (a.factor) cfg.attack.factor = *a.factor;
  if (a.magnitude) cfg.attack.magnitude = *a.magnitude;
  if (a.attack_sigma) cfg.attack.sigma = *a.attack_sigma;
  if (a.seeds) cfg.seeds = *a.seeds;
  cfg.Validate();

  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (seeds.empty() || a.o.seed) seeds = {cfg.seed};
  std::ofstream csv;
  if (a.csv) {
    csv.open(*a.csv);
    if (!csv) throw Error(ErrorCode::kInvalidConfig, "cannot write " + *a.csv);
    sim::WriteTrainCsvHeader(csv);
  }
  json runs = json::array();
  std::vector<double> finals;
  bool audits = true;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    sim::TrainOptions options;
    options.keep_transcripts = a.transcripts.has_value() && k == 0;
    const sim::TrainResult r = sim::Train(cfg.task, cfg.round, cfg.attack,
                                          cfg.protocol, seeds[k], options);
    if (a.csv) sim::WriteTrainCsvRows(csv, r, seeds[k]);
    if (options.keep_transcripts) {
      const fs::path dir(*a.transcripts);
      r.transcripts.WriteJsonl(dir);
      sim::SimConfig first = cfg;
      first.seed = seeds[k];
      WriteManifest(dir, first, cfg.task.rounds);
    }
    finals.push_back(r.final_loss);
    audits = audits && r.audits_passed;
    runs.push_back({{"seed", seeds[k]},
                    {"initial_loss", r.initial_loss},
                    {"final_loss", r.final_loss},
                    {"aborted_rounds", r.aborted_rounds},
                    {"audits_passed", r.audits_passed},
                    {"weights", r.weights}});
  }
  std::vector<double> sorted = finals;
  std::sort(sorted.begin(), sorted.end());
  json result = {{"protocol", sim::ProtocolName(cfg.protocol)},
                 {"rule", RuleName(cfg.round.rule)},
                 {"model", sim::ModelName(cfg.task.model)},
                 {"attack", sim::AttackName(cfg.attack.kind)},
                 {"rounds", cfg.task.rounds},
                 {"median_final_loss", sorted[(sorted.size() - 1) / 2]},
                 {"runs", runs}};
  out << result.dump(2) << '\n';
  if (!audits) {
    err << "audit failed in at least one round\n";
    return kExitAuditFailure;
  }
  return kExitOk;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  Overrides o;
  std::size_t dim = 1000;
  std::optional<std::string> csv;
  std::optional<double> w2s_mbps;
  std::optional<double> s2s_mbps;
  bool no_wallclock = false;
};

int RunBench(const BenchArgs& a, std::ostream& out, std::ostream&) {
  Overrides o = a.o;
  if (!o.bound && !o.config) o.bound = 16.0;
  const sim::SimConfig cfg = Resolve(o);
  sim::BenchConfig bc;
  bc.protocol = cfg.protocol;
  bc.rule = cfg.round.rule;
  bc.n = cfg.round.n;
  bc.dim = a.dim;
  bc.ring = cfg.round.ring;
  bc.w2s_mbps = a.w2s_mbps.value_or(cfg.w2s_mbps);
  bc.s2s_mbps = a.s2s_mbps.value_or(cfg.s2s_mbps);
  bc.seed = cfg.seed;
  const sim::BenchReport r = sim::Bench(bc);
  if (a.csv) {
    std::ofstream csv(*a.csv);
    if (!csv) throw Error(ErrorCode::kInvalidConfig, "cannot write " + *a.csv);
    sim::WriteBenchCsvHeader(csv);
    if (!r.empty) sim::WriteBenchCsvRow(csv, r, !a.no_wallclock);
  }
  const bool wall = !a.no_wallclock;
  json result = {{"protocol", r.protocol},
                 {"rule", r.rule},
                 {"n", r.n},
                 {"d", r.d},
                 {"empty", r.empty},
                 {"T_grad", wall ? r.t_grad_s : 0.0},
                 {"T_compute", wall ? r.t_compute_s : 0.0},
                 {"T_w2s", r.t_w2s_s},
                 {"T_s2s", r.t_s2s_s},
                 {"w2s_bytes", r.w2s_bytes},
                 {"s2w_bytes", r.s2w_bytes},
                 {"s2s_bytes", r.s2s_bytes},
                 {"worker_uplink_bytes", r.worker_uplink_bytes},
                 {"plain_uplink_bytes", r.plain_uplink_bytes},
                 {"uplink_ratio", r.UplinkRatio()}};
  out << result.dump(2) << '\n';
  return kExitOk;
}

// --- audit -----------------------------------------------------------------

struct AuditArgs {
  std::string dir;
  std::optional<std::string> protocol;
  std::optional<std::string> rule;
};

int RunAudit(const AuditArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir(a.dir);
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kInvalidConfig, "no transcript directory " + a.dir);
  }
  AuditContext ctx;
  if (fs::exists(dir / "manifest.json")) {
    std::ifstream in(dir / "manifest.json");
    try {
      const json manifest = json::parse(in);
      ctx.protocol =
          sim::ParseProtocol(manifest.value("protocol", std::string("two_server")));
      ctx.rule = manifest.value("rule", std::string("mean"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedData,
                  std::string("manifest.json: ") + e.what());
    }
  }
  if (a.protocol) ctx.protocol = sim::ParseProtocol(*a.protocol);
  if (a.rule) ctx.rule = *a.rule;
  const TranscriptSet ts = TranscriptSet::ReadJsonl(dir);
  const AuditReport report = AuditViews(ts, ctx);
  out << AuditJson(report).dump(2) << '\n';
  if (!report.Passed()) {
    err << "audit failed:\n" << report.Summary();
    return kExitAuditFailure;
  }
  return kExitOk;
}

// --- dealer ----------------------------------------------------------------

struct DealerArgs {
  std::size_t count = 1;
  std::size_t dim = 1;
  std::string form = "inner";
  unsigned bit_width = 64;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

int RunDealer(const DealerArgs& a, std::ostream& out, std::ostream&) {
  if (a.count == 0 || a.dim == 0) {
    throw Error(ErrorCode::kInvalidConfig, "count and dim must be positive");
  }
  if (a.bit_width < 2 || a.bit_width > 64) {
    throw Error(ErrorCode::kInvalidConfig, "bit width must lie in [2, 64]");
  }
  TripleForm form;
  if (a.form == "inner") {
    form = TripleForm::kInner;
  } else if (a.form == "elementwise") {
    form = TripleForm::kElementwise;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "form must be inner or elementwise");
  }
  sim::SimConfig cfg;
  sim::ApplySeedEnv(cfg);
  if (a.seed) cfg.seed = *a.seed;
  Prg prg(cfg.seed);
  const TripleBatch batch =
      DealerMakeTriples(a.count, a.dim, form, a.bit_width, prg, 0);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const fs::path f1 = dir / "S1.triples";
  const fs::path f2 = dir / "S2.triples";
  {
    std::ofstream o1(f1, std::ios::binary);
    std::ofstream o2(f2, std::ios::binary);
    if (!o1 || !o2) {
      throw Error(ErrorCode::kInvalidConfig, "cannot write into " + a.out_dir);
    }
    WriteTripleFile(o1, batch.s1);
    WriteTripleFile(o2, batch.s2);
  }
  json result = {{"count", a.count},
                 {"dim", a.dim},
                 {"form", a.form},
                 {"bit_width", a.bit_width},
                 {"seed", cfg.seed},
                 {"files", {f1.string(), f2.string()}}};
  out << result.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"aegis: secure Byzantine-robust aggregation simulator", "aegis"};
  app.require_subcommand(1);

  RoundArgs round;
  CLI::App* round_cmd = app.add_subcommand("round", "one aggregation round");
  AddOverrides(round_cmd, round.o);
  round_cmd->add_option("--input", round.input, "JSON array of vectors")
      ->required();
  round_cmd->add_option("--drop-s1", round.drop_s1,
                        "workers whose upload misses S1");
  round_cmd->add_option("--drop-s2", round.drop_s2,
                        "workers whose upload misses S2");
  round_cmd->add_option("--sigma", round.sigma, "LDP noise standard deviation");
  round_cmd->add_option("--transcripts", round.transcripts,
                        "write per-party JSONL transcripts here");
  round_cmd->add_flag("--audit", round.audit, "audit the transcripts");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "training simulation");
  AddOverrides(train_cmd, train.o);
  train_cmd->add_option("--rounds", train.rounds, "training rounds");
  train_cmd->add_option("--dim", train.dim, "model dimension");
  train_cmd->add_option("--model", train.model,
                        "linear_regression | logistic_regression");
  train_cmd->add_option("--sharding", train.sharding, "iid | label_skew");
  train_cmd->add_option("--eta", train.eta, "step size");
  train_cmd->add_option("--attack", train.attack,
                        "none | sign_flip | large_value | random_gaussian | "
                        "collude_shift");
  train_cmd->add_option("--byz", train.byz, "Byzantine worker indices");
  train_cmd->add_option("--factor", train.factor, "sign_flip factor");
  train_cmd->add_option("--magnitude", train.magnitude, "large_value magnitude");
  train_cmd->add_option("--attack-sigma", train.attack_sigma,
                        "random_gaussian sigma");
  train_cmd->add_option("--seeds", train.seeds, "seeds to repeat the run with");
  train_cmd->add_option("--csv", train.csv, "per-round metrics CSV");
  train_cmd->add_option("--transcripts", train.transcripts,
                        "write the first run's transcripts here");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "overhead benchmark");
  AddOverrides(bench_cmd, bench.o);
  bench_cmd->add_option("--dim", bench.dim, "update dimension");
  bench_cmd->add_option("--csv", bench.csv, "CSV output");
  bench_cmd->add_option("--w2s-mbps", bench.w2s_mbps, "worker link rate");
  bench_cmd->add_option("--s2s-mbps", bench.s2s_mbps, "server link rate");
  bench_cmd->add_flag("--no-wallclock", bench.no_wallclock,
                      "write 0 for measured timings");

  AuditArgs audit;
  CLI::App* audit_cmd = app.add_subcommand("audit", "audit saved transcripts");
  audit_cmd->add_option("--transcripts", audit.dir, "transcript directory")
      ->required();
  audit_cmd->add_option("--protocol", audit.protocol, "override the manifest");
  audit_cmd->add_option("--rule", audit.rule, "override the manifest");

  DealerArgs dealer;
  CLI::App* dealer_cmd = app.add_subcommand("dealer", "emit triple files");
  dealer_cmd->add_option("--count", dealer.count, "triples to deal");
  dealer_cmd->add_option("--dim", dealer.dim, "vector dimension");
  dealer_cmd->add_option("--form", dealer.form, "inner | elementwise");
  dealer_cmd->add_option("--bit-width", dealer.bit_width, "ring bit width");
  dealer_cmd->add_option("--seed", dealer.seed, "dealer seed");
  dealer_cmd->add_option("--out", dealer.out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (round_cmd->parsed()) return RunRound(round, out, err);
    if (train_cmd->parsed()) return RunTrain(train, out, err);
    if (bench_cmd->parsed()) return RunBench(bench, out, err);
    if (audit_cmd->parsed()) return RunAudit(audit, out, err);
    if (dealer_cmd->parsed()) return RunDealer(dealer, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitProtocolError;
  }
  return kExitConfigError;
}

}  // namespace aegis::cli
