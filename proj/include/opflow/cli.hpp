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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace opflow::cli {

/// Exit codes shared by all commands.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kInvalid = 2;

struct TrainOptions {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  /// Value of OPFLOW_SEED, if set.
  std::optional<std::string> env_seed;
  /// Echo log lines to `out` as well as train.log.
  bool echo = true;
};

/// Validates and smoke-tests the config, then trains and writes
/// history.csv, train.log, config.json and one <model>.ckpt per model to
/// output_dir. Nothing is written when validation fails.
int train(const TrainOptions& opts, std::ostream& out, std::ostream& err);

/// Prints `batches_per_sec=<f> samples_per_sec=<f>` for n_batches train
/// batches through the pipeline operators.
int benchmark(const TrainOptions& opts, std::size_t n_batches, std::ostream& out, std::ostream& err);

int saliency(const std::filesystem::path& checkpoint, const std::filesystem::path& input_csv,
             const std::filesystem::path& out_pgm, std::ostream& err);

int report(const std::filesystem::path& history_csv, const std::filesystem::path& out_md,
           std::ostream& err);

/// Argument parsing and dispatch for the `opflow` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opflow::cli
