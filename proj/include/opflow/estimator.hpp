/* Copyright 2026 The opflow Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opflow/error.hpp"
#include "opflow/network.hpp"
#include "opflow/pipeline.hpp"
#include "opflow/trace.hpp"

namespace opflow {

struct EstimatorConfig {
  Pipeline pipeline;
  /// Network operators, run per batch after the pipeline operators.
  OpSequence ops;
  std::vector<UpdateRule> rules;
  std::vector<TracePtr> traces;
  int epochs = 1;
  /// Train steps between log lines; 0 logs epoch ends only.
  int log_interval = 0;
  /// Data-parallel shards per train batch.
  int workers = 1;
  std::uint64_t seed = 0;
  /// Log sink, or null for silence.
  std::ostream* log = nullptr;
  /// Prepends a LossMonitor over rule loss keys no other trace reports.
  bool monitor_losses = true;
};

struct EpochRecord {
  int epoch = 0;
  Mode mode = Mode::kTrain;
  std::vector<std::pair<std::string, double>> values;
};

/// Per-epoch snapshots of the scalar trace state, taken at each epoch end.
class History {
 public:
  std::vector<EpochRecord> records;

  /// Number of distinct epochs with at least one record.
  int epochs() const;
  std::optional<double> value(int epoch, Mode mode, const std::string& key) const;
  /// All values of one key for one mode, in epoch order.
  std::vector<std::pair<int, double>> series(Mode mode, const std::string& key) const;

  /// Header `epoch,mode,key,value`; values printed with 17 significant digits.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  static History read_csv(const std::filesystem::path& path);
};

struct Diagnostic {
  int epoch = 0;
  Mode mode = Mode::kTrain;
  std::string message;
};

struct SmokeReport {
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
  std::string to_string() const;
};

class SmokeTestError : public ConfigError {
 public:
  explicit SmokeTestError(SmokeReport report)
      : ConfigError("smoke test failed:\n" + report.to_string()), report_(std::move(report)) {}
  const SmokeReport& report() const { return report_; }

 private:
  SmokeReport report_;
};

/// Dry run of every graph at epoch 0 and at each schedule change point: key
/// topology, rule loss keys, trace inputs, and one synthetic batch through
/// forward and backward. Never updates parameters. Reports every failure.
SmokeReport smoke_test(const EstimatorConfig& cfg);

/// Contiguous shard sizes, larger shards first: 10 over 4 -> 3,3,2,2.
std::vector<std::size_t> shard_sizes(std::size_t batch, int workers);

/// Synchronous data-parallel train step. The batch is split into `workers`
/// contiguous shards; each runs forward/backward on its own thread and tape
/// against the current parameters. Gradients are combined as the shard-size
/// weighted mean and applied once per rule. workers == 1 is network_step.
///
/// The returned store concatenates per-sample values and averages scalars
/// with the same weights.
BatchStore parallel_step(int workers, const BatchStore& batch, const OpSequence& ops,
                         std::span<const UpdateRule> rules, int epoch, std::int64_t step = 0);

/// Training loop driving pipeline, network and traces.
class Estimator {
 public:
  explicit Estimator(EstimatorConfig cfg);

  SmokeReport smoke_test() const;
  /// Runs the smoke test, then trains. Throws SmokeTestError if the smoke
  /// test fails.
  History fit();

  const EstimatorConfig& config() const { return cfg_; }
  /// Traces in dispatch order, including the automatic loss monitor.
  const std::vector<TracePtr>& traces() const { return cfg_.traces; }

 private:
  void run_epoch(Mode mode, int epoch, std::int64_t& step, TraceState& state, History& history);
  void log_line(Mode mode, std::int64_t step, int epoch,
                const std::vector<std::pair<std::string, double>>& values) const;

  EstimatorConfig cfg_;
  std::vector<std::string> loss_keys_;
};

}  // namespace opflow
