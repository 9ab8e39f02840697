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
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "opflow/tensor.hpp"

namespace opflow {

using IntList = std::vector<std::int64_t>;

/// A batch entry: tensor, plain number, or integer list (class labels).
using Value = std::variant<Tensor, double, IntList>;

const char* value_kind(const Value& v);

/// Bit-level equality, used by frame-property checks.
bool value_bit_equal(const Value& a, const Value& b);

/// Ordered key:value map holding one batch as it flows through operators.
/// Insertion order is preserved; overwriting a key keeps its position.
class BatchStore {
 public:
  using Entry = std::pair<std::string, Value>;

  BatchStore() = default;
  BatchStore(std::initializer_list<Entry> entries);

  bool contains(std::string_view key) const;
  /// Throws KeyError when the key is absent.
  const Value& at(std::string_view key) const;
  const Tensor& tensor(std::string_view key) const;
  const IntList& ints(std::string_view key) const;
  /// Accepts a double or a single-element tensor.
  double number(std::string_view key) const;

  void set(std::string key, Value value);
  bool erase(std::string_view key);

  std::vector<std::string> keys() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Leading extent shared by every tensor and int list, 0 if none.
  std::size_t batch_size() const;

  /// Copy with every tensor detached from its tape.
  BatchStore detached() const;

  /// FNV-1a over keys and value bits; identical stores hash identically.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace opflow
