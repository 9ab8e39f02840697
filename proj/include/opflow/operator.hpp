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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "opflow/batch_store.hpp"
#include "opflow/schedule.hpp"
#include "opflow/tensor.hpp"

namespace opflow {

enum class Mode { kTrain, kEval, kBoth };

const char* mode_name(Mode mode);
Mode parse_mode(const std::string& name);

/// Whether something declared for `declared` runs during a `running` pass.
inline bool mode_matches(Mode declared, Mode running) {
  return declared == Mode::kBoth || running == Mode::kBoth || declared == running;
}

/// What an operator may know about the pass it runs in.
struct OpContext {
  Mode mode = Mode::kTrain;
  int epoch = 0;
  /// Tape of the current step, or null for tape-free execution.
  Tape* tape = nullptr;
};

/// Receives the values of the declared inputs, in order, and returns one value
/// per declared output.
using Transform = std::function<std::vector<Value>(std::span<const Value> inputs, OpContext& ctx)>;

/// Task-level unit of computation over batch data: read input keys, transform,
/// write output keys.
struct Operator {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Mode mode = Mode::kBoth;
  Transform transform;
};

/// Ordered operators; a plain Operator converts to a constant schedule.
using OpSequence = std::vector<Scheduled<Operator>>;

/// Runs one operator against the store. Only the operator's output keys change.
void execute_operator(const Operator& op, BatchStore& store, OpContext& ctx);

/// Runs every operator active at ctx.epoch whose mode matches ctx.mode, in order.
void execute_sequence(const OpSequence& seq, BatchStore& store, OpContext& ctx);

struct KeyViolation {
  std::size_t position = 0;
  std::string op;
  std::string key;

  bool operator==(const KeyViolation&) const = default;
};

/// Simulates key availability through the sequence and reports every input
/// read before anything has produced it. Empty result means valid.
std::vector<KeyViolation> validate_keys(const OpSequence& seq,
                                        const std::vector<std::string>& initial_keys, Mode mode,
                                        int epoch);

/// Keys present after running the sequence on a store holding `initial_keys`.
std::vector<std::string> keys_after(const OpSequence& seq,
                                    const std::vector<std::string>& initial_keys, Mode mode,
                                    int epoch);

std::vector<int> change_points(const OpSequence& seq);

}  // namespace opflow
