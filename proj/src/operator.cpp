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

#include <algorithm>

#include "opflow/error.hpp"
#include "opflow/operator.hpp"

namespace opflow {

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kTrain: return "train";
    case Mode::kEval: return "eval";
    case Mode::kBoth: return "both";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "train") return Mode::kTrain;
  if (name == "eval") return Mode::kEval;
  if (name == "both") return Mode::kBoth;
  throw ConfigError("unknown mode '" + name + "' (expected train, eval or both)");
}

void execute_operator(const Operator& op, BatchStore& store, OpContext& ctx) {
  std::vector<Value> inputs;
  inputs.reserve(op.inputs.size());
  for (const auto& key : op.inputs) {
    if (!store.contains(key)) {
      throw KeyError("operator '" + op.name + "' reads missing key '" + key + "'");
    }
    inputs.push_back(store.at(key));
  }
  std::vector<Value> outputs = op.transform(inputs, ctx);
  if (outputs.size() != op.outputs.size()) {
    throw Error("operator '" + op.name + "' returned " + std::to_string(outputs.size()) +
                " values for " + std::to_string(op.outputs.size()) + " output keys");
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) store.set(op.outputs[i], std::move(outputs[i]));
}

void execute_sequence(const OpSequence& seq, BatchStore& store, OpContext& ctx) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Operator& op = seq[i].resolve(ctx.epoch);
    if (!mode_matches(op.mode, ctx.mode)) continue;
    try {
      execute_operator(op, store, ctx);
    } catch (const KeyError& e) {
      throw KeyError("operator #" + std::to_string(i) + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("operator #" + std::to_string(i) + " '" + op.name + "': " + e.what());
    } catch (const NumericError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw Error("operator #" + std::to_string(i) + " '" + op.name + "': " + e.what());
    }
  }
}

namespace {

template <typename OnMissing>
std::vector<std::string> simulate(const OpSequence& seq, const std::vector<std::string>& initial,
                                  Mode mode, int epoch, OnMissing on_missing) {
  std::vector<std::string> available = initial;
  auto has = [&](const std::string& k) {
    return std::find(available.begin(), available.end(), k) != available.end();
  };
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Operator& op = seq[i].resolve(epoch);
    if (!mode_matches(op.mode, mode)) continue;
    for (const auto& key : op.inputs) {
      if (!has(key)) on_missing(i, op, key);
    }
    for (const auto& key : op.outputs) {
      if (!has(key)) available.push_back(key);
    }
  }
  return available;
}

}  // namespace

std::vector<KeyViolation> validate_keys(const OpSequence& seq,
                                        const std::vector<std::string>& initial_keys, Mode mode,
                                        int epoch) {
  std::vector<KeyViolation> violations;
  simulate(seq, initial_keys, mode, epoch,
           [&](std::size_t i, const Operator& op, const std::string& key) {
             violations.push_back({i, op.name, key});
           });
  return violations;
}

std::vector<std::string> keys_after(const OpSequence& seq,
                                    const std::vector<std::string>& initial_keys, Mode mode,
                                    int epoch) {
  return simulate(seq, initial_keys, mode, epoch,
                  [](std::size_t, const Operator&, const std::string&) {});
}

std::vector<int> change_points(const OpSequence& seq) {
  std::vector<std::vector<int>> lists;
  for (const auto& s : seq) lists.push_back(s.change_points());
  return merge_change_points(std::move(lists));
}

}  // namespace opflow
