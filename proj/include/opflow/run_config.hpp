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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opflow/estimator.hpp"

namespace opflow {

/// A run configuration turned into live objects. Trace output paths are
/// already joined onto output_dir, which is not created here.
struct RunSpec {
  nlohmann::json config;
  EstimatorConfig estimator;
  std::map<std::string, ModelPtr> models;
  std::filesystem::path output_dir;
};

/// Parses a JSON file. Syntax errors are ConfigErrors.
nlohmann::json load_config(const std::filesystem::path& path);

/// Replaces {"example": name, ...} by the named template with the remaining
/// top-level fields laid over it. A `custom` config is returned unchanged.
/// Exactly one of `example` and `custom` must be present.
nlohmann::json expand_example(const nlohmann::json& raw);

/// Applies `dotted.path=value`. The value is parsed as JSON when it is valid
/// JSON and taken as a string otherwise. Missing objects along the path are
/// created.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

/// Full resolution: expand_example, then the seed from `env_seed` (the
/// OPFLOW_SEED value, if any), then each `--set` assignment in order.
nlohmann::json resolve_config(const nlohmann::json& raw, const std::optional<std::string>& env_seed,
                              const std::vector<std::string>& overrides);

/// Validates a resolved config and builds datasets, models, operators,
/// rules and traces. Throws ConfigError naming the offending field.
RunSpec build_run(const nlohmann::json& cfg);

/// Deterministic initialization seed of a named model.
std::uint64_t model_seed(std::uint64_t run_seed, const std::string& model_name);

}  // namespace opflow
