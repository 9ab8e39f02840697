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
#include <string>
#include <vector>

#include "opflow/tensor.hpp"

namespace opflow {

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

/// Checkpoint text format, one file per model:
///
///   OPFLOW-CKPT v1
///   <name> <shape-csv>
///   <values, %.16e, space separated>
///   ...
void save_checkpoint(const std::filesystem::path& path, const std::vector<Parameter>& params);
std::vector<Parameter> load_checkpoint(const std::filesystem::path& path);

}  // namespace opflow
