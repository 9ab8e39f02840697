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
#include <set>

#include "opflow/error.hpp"
#include "opflow/trace.hpp"

namespace opflow {

const char* event_name(EventKind kind) {
  switch (kind) {
    case EventKind::kBegin: return "on_begin";
    case EventKind::kEpochBegin: return "on_epoch_begin";
    case EventKind::kBatchBegin: return "on_batch_begin";
    case EventKind::kBatchEnd: return "on_batch_end";
    case EventKind::kEpochEnd: return "on_epoch_end";
    case EventKind::kEnd: return "on_end";
  }
  return "?";
}

bool TraceState::contains(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
}

const Value& TraceState::at(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e.value;
  }
  throw KeyError("trace state has no key '" + std::string(key) + "'");
}

void TraceState::put(const std::string& key, Value value, bool persistent) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.value = std::move(value);
      e.persistent = e.persistent || persistent;
      return;
    }
  }
  entries_.push_back({key, std::move(value), persistent});
}

void TraceState::clear_epoch() {
  std::erase_if(entries_, [](const Entry& e) { return !e.persistent; });
}

const BatchStore& TraceContext::batch() const {
  if (!event_.batch) {
    throw Error("trace '" + trace_.name() + "' asked for batch data during " +
                event_name(event_.kind));
  }
  return *event_.batch;
}

void TraceContext::require_input(std::string_view key) const {
  const auto& in = trace_.inputs();
  if (std::find(in.begin(), in.end(), key) == in.end()) {
    throw ContractError("trace '" + trace_.name() + "' reads undeclared key '" +
                        std::string(key) + "'");
  }
}

bool TraceContext::available(std::string_view key) const {
  return state_.contains(key) || (event_.batch && event_.batch->contains(key));
}

const Value& TraceContext::read(std::string_view key) const {
  require_input(key);
  if (state_.contains(key)) return state_.at(key);
  if (event_.batch && event_.batch->contains(key)) return event_.batch->at(key);
  throw KeyError("trace '" + trace_.name() + "' input '" + std::string(key) +
                 "' is not available during " + event_name(event_.kind));
}

const Tensor& TraceContext::read_tensor(std::string_view key) const {
  const Value& v = read(key);
  if (const auto* t = std::get_if<Tensor>(&v)) return *t;
  throw Error("trace '" + trace_.name() + "': '" + std::string(key) + "' is a " + value_kind(v) +
              ", not a tensor");
}

const IntList& TraceContext::read_ints(std::string_view key) const {
  const Value& v = read(key);
  if (const auto* l = std::get_if<IntList>(&v)) return *l;
  throw Error("trace '" + trace_.name() + "': '" + std::string(key) + "' is a " + value_kind(v) +
              ", not an int-list");
}

double TraceContext::read_number(std::string_view key) const {
  const Value& v = read(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* t = std::get_if<Tensor>(&v); t && t->numel() == 1) return t->item();
  throw Error("trace '" + trace_.name() + "': '" + std::string(key) + "' is not a scalar");
}

void TraceContext::write(const std::string& key, Value value, bool persistent) {
  const auto& out = trace_.outputs();
  if (std::find(out.begin(), out.end(), key) == out.end()) {
    throw ContractError("trace '" + trace_.name() + "' writes undeclared key '" + key + "'");
  }
  if (auto* t = std::get_if<Tensor>(&value)) *t = t->detached();
  state_.put(key, std::move(value), persistent);
}

Trace::Trace(std::string name, std::vector<std::string> inputs, std::vector<std::string> outputs,
             Mode mode)
    : name_(std::move(name)), inputs_(std::move(inputs)), outputs_(std::move(outputs)),
      mode_(mode) {}

void dispatch_event(const Event& event, std::span<const TracePtr> traces, TraceState& state) {
  if (event.kind == EventKind::kEpochBegin) state.clear_epoch();
  const bool mode_bound = event.kind != EventKind::kBegin && event.kind != EventKind::kEnd;
  const bool batch_event = event.kind == EventKind::kBatchBegin || event.kind == EventKind::kBatchEnd;
  if (batch_event != (event.batch != nullptr)) {
    throw Error(std::string(event_name(event.kind)) +
                (batch_event ? " requires batch data" : " must not carry batch data"));
  }
  for (const auto& trace : traces) {
    if (mode_bound && !mode_matches(trace->mode(), event.mode)) continue;
    TraceContext ctx(*trace, event, state);
    switch (event.kind) {
      case EventKind::kBegin: trace->on_begin(ctx); break;
      case EventKind::kEpochBegin: trace->on_epoch_begin(ctx); break;
      case EventKind::kBatchBegin: trace->on_batch_begin(ctx); break;
      case EventKind::kBatchEnd: trace->on_batch_end(ctx); break;
      case EventKind::kEpochEnd: trace->on_epoch_end(ctx); break;
      case EventKind::kEnd: trace->on_end(ctx); break;
    }
  }
}

std::vector<std::string> validate_traces(std::span<const TracePtr> traces,
                                         const std::vector<std::string>& produced_keys) {
  std::vector<std::string> problems;
  std::set<std::string> names;
  std::set<std::string> available(produced_keys.begin(), produced_keys.end());
  for (const auto& trace : traces) {
    if (!names.insert(trace->name()).second) {
      problems.push_back("duplicate trace name '" + trace->name() + "'");
    }
    for (const auto& key : trace->inputs()) {
      if (!available.contains(key)) {
        problems.push_back("trace '" + trace->name() + "' reads '" + key +
                           "', which no operator or earlier trace produces");
      }
    }
    for (const auto& key : trace->outputs()) available.insert(key);
  }
  return problems;
}

}  // namespace opflow
