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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opflow/batch_store.hpp"
#include "opflow/operator.hpp"

namespace opflow {

/// One key of a dataset: either per-sample tensors or integer labels.
struct Feature {
  std::string key;
  /// Keys sharing a group are index-aligned; different groups are shuffled
  /// independently (unpaired data).
  int group = 0;
  std::vector<Tensor> tensors;
  IntList labels;
  bool is_label = false;

  std::size_t count() const { return is_label ? labels.size() : tensors.size(); }
};

struct Dataset {
  std::vector<Feature> features;

  void add(std::string key, std::vector<Tensor> samples, int group = 0);
  void add_labels(std::string key, IntList labels, int group = 0);

  /// Samples per epoch: the largest group. Smaller groups wrap around.
  std::size_t size() const;
  std::vector<std::string> keys() const;
  bool contains(const std::string& key) const;
  const Feature& feature(const std::string& key) const;
  /// Distinct group ids, ascending.
  std::vector<int> groups() const;
  /// Throws if a group has features of differing counts or the set is empty.
  void validate() const;
};

struct PadSpec {
  std::string key;
  double pad_value = 0.0;
};

struct BatchConfig {
  std::size_t batch_size = 32;
  bool shuffle = true;
  bool drop_remainder = false;
  std::uint64_t seed = 0;
  std::optional<PadSpec> pad;
  /// Non-empty enables weighted sampling with replacement.
  std::map<std::int64_t, double> class_weights;
  /// Label key for weighted sampling; empty means the dataset's only label.
  std::string label_key;
};

enum class CsvKind { kNumber, kIntLabel };

struct CsvColumn {
  std::string key;
  CsvKind kind = CsvKind::kNumber;
};

/// Columns mapped to the same number key are concatenated, in header order,
/// into one rank-1 tensor per row.
Dataset load_csv(const std::filesystem::path& path, const std::map<std::string, CsvColumn>& schema);

/// Writes rank-0/1 tensor features and labels. A key with k values per sample
/// becomes columns `<key>_0 .. <key>_{k-1}`; single values keep the key name.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Sample order for one epoch, per group.
struct EpochPlan {
  std::size_t epoch_size = 0;
  std::size_t batch_size = 1;
  bool drop_remainder = false;
  std::map<int, std::vector<std::size_t>> order;

  std::size_t num_batches() const;
  std::size_t batch_length(std::size_t b) const;
};

EpochPlan plan_epoch(const Dataset& ds, const BatchConfig& cfg, int epoch);
BatchStore assemble_batch(const Dataset& ds, const EpochPlan& plan, std::size_t b,
                          const BatchConfig& cfg);
std::vector<BatchStore> epoch_batches(const Dataset& ds, const BatchConfig& cfg, int epoch);

/// Stacks samples along a new leading axis, padding their leading extent to
/// the longest one. Second member holds the original lengths.
std::pair<Tensor, IntList> pad_batch(const std::vector<Tensor>& samples, const PadSpec& spec);

/// Keys of an assembled batch (data keys plus any `<key>_len`).
std::vector<std::string> batch_keys(const Dataset& ds, const BatchConfig& cfg);

struct BenchmarkResult {
  std::size_t batches = 0;
  std::size_t samples = 0;
  double seconds = 0.0;
  double batches_per_sec = 0.0;
  double samples_per_sec = 0.0;
};

/// Wall-clock throughput of batch assembly plus transform operators.
BenchmarkResult benchmark(const Dataset& ds, const BatchConfig& cfg, const OpSequence& ops,
                          std::size_t n_batches);

/// Extraction-transformation-load: datasets, batching and per-batch
/// transform operators.
struct Pipeline {
  Dataset train;
  std::optional<Dataset> eval;
  BatchConfig config;
  OpSequence ops;

  /// Batches for one epoch with the transform operators applied. Eval
  /// batches are never shuffled or reweighted.
  std::vector<BatchStore> batches(Mode mode, int epoch) const;
  BatchStore transform(BatchStore batch, Mode mode, int epoch) const;
  const Dataset& dataset(Mode mode) const;
  BatchConfig config_for(Mode mode) const;
};

}  // namespace opflow
