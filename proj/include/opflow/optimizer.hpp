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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "opflow/parameter.hpp"

namespace opflow {

struct OptimizerSpec {
  enum class Kind { kSgd, kAdam };
  Kind kind = Kind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerSpec sgd(double lr) { return {Kind::kSgd, lr}; }
  static OptimizerSpec adam(double lr) { return {Kind::kAdam, lr}; }
};

/// Stateful first-order optimizer. Adam keeps per-parameter moments keyed by
/// parameter name and one step counter shared by all parameters.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec = {}) : spec_(spec) {}

  /// Updates every trainable parameter in place. Each one must have an entry
  /// in `grads` with a matching shape.
  void step(std::span<Parameter> params, const std::map<std::string, Tensor>& grads);

  const OptimizerSpec& spec() const { return spec_; }
  std::int64_t steps() const { return steps_; }

 private:
  OptimizerSpec spec_;
  std::int64_t steps_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace opflow
