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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opflow/batch_store.hpp"
#include "opflow/operator.hpp"

namespace opflow {

enum class EventKind { kBegin, kEpochBegin, kBatchBegin, kBatchEnd, kEpochEnd, kEnd };

const char* event_name(EventKind kind);

struct Event {
  EventKind kind = EventKind::kBegin;
  Mode mode = Mode::kTrain;
  int epoch = 0;
  std::int64_t global_step = 0;
  /// Set for batch events only.
  const BatchStore* batch = nullptr;
};

/// Values traces share with later traces, plus the stop flag.
///
/// Cleared at every epoch begin except for entries written as persistent.
class TraceState {
 public:
  bool contains(std::string_view key) const;
  const Value& at(std::string_view key) const;
  void put(const std::string& key, Value value, bool persistent = false);
  void clear_epoch();

  bool stop_requested() const { return stop_; }
  void request_stop() { stop_ = true; }

  struct Entry {
    std::string key;
    Value value;
    bool persistent = false;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  bool stop_ = false;
};

class Trace;

/// What one trace sees while handling one event. Reads are limited to the
/// trace's declared inputs and writes to its declared outputs; the batch is
/// read-only.
class TraceContext {
 public:
  TraceContext(const Trace& trace, const Event& event, TraceState& state)
      : trace_(trace), event_(event), state_(state) {}

  const Event& event() const { return event_; }
  Mode mode() const { return event_.mode; }
  int epoch() const { return event_.epoch; }
  std::int64_t global_step() const { return event_.global_step; }

  bool has_batch() const { return event_.batch != nullptr; }
  const BatchStore& batch() const;

  /// Trace state first, then the batch. Throws if the key is not declared
  /// or not available.
  const Value& read(std::string_view key) const;
  const Tensor& read_tensor(std::string_view key) const;
  const IntList& read_ints(std::string_view key) const;
  double read_number(std::string_view key) const;
  bool available(std::string_view key) const;

  void write(const std::string& key, Value value, bool persistent = false);

  /// Whole trace state, read-only, for logging traces.
  const TraceState& state() const { return state_; }
  void request_stop() { state_.request_stop(); }

 private:
  void require_input(std::string_view key) const;

  const Trace& trace_;
  const Event& event_;
  TraceState& state_;
};

/// Unified metric / callback. Override any subset of the hooks; accumulate
/// metrics in member variables.
class Trace {
 public:
  Trace(std::string name, std::vector<std::string> inputs = {},
        std::vector<std::string> outputs = {}, Mode mode = Mode::kBoth);
  virtual ~Trace() = default;

  virtual void on_begin(TraceContext&) {}
  virtual void on_epoch_begin(TraceContext&) {}
  virtual void on_batch_begin(TraceContext&) {}
  virtual void on_batch_end(TraceContext&) {}
  virtual void on_epoch_end(TraceContext&) {}
  virtual void on_end(TraceContext&) {}

  const std::string& name() const { return name_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  /// Epoch and batch events are delivered only for matching modes.
  Mode mode() const { return mode_; }

 private:
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  Mode mode_;
};

using TracePtr = std::shared_ptr<Trace>;

/// Invokes the event's hook on each trace in order; trace i's writes are
/// visible to every trace after it within the same dispatch.
void dispatch_event(const Event& event, std::span<const TracePtr> traces, TraceState& state);

/// Checks unique names and that every declared input is either in
/// `produced_keys` or an output of an earlier trace. Returns one message per
/// problem.
std::vector<std::string> validate_traces(std::span<const TracePtr> traces,
                                         const std::vector<std::string>& produced_keys);

}  // namespace opflow
