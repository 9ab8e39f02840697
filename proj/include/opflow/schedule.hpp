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

#include <algorithm>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opflow/error.hpp"

namespace opflow {

/// Epoch-keyed value. resolve(e) returns the entry with the largest key <= e,
/// so a value stays active until a later key replaces it.
template <typename T>
class Scheduled {
 public:
  /// Constant schedule.
  Scheduled(T value) { entries_.emplace(0, std::move(value)); }  // NOLINT(implicit)

  explicit Scheduled(std::map<int, T> entries) : entries_(std::move(entries)) { validate(); }

  Scheduled(std::initializer_list<std::pair<const int, T>> entries) : entries_(entries) {
    validate();
  }

  const T& resolve(int epoch) const {
    if (epoch < 0) throw ConfigError("cannot resolve a schedule at negative epoch");
    auto it = entries_.upper_bound(epoch);
    return std::prev(it)->second;
  }

  /// Keys other than 0, ascending.
  std::vector<int> change_points() const {
    std::vector<int> out;
    for (const auto& [epoch, value] : entries_) {
      if (epoch != 0) out.push_back(epoch);
    }
    return out;
  }

  bool is_constant() const { return entries_.size() == 1; }
  const std::map<int, T>& entries() const { return entries_; }

  template <typename F>
  auto transform(F&& fn) const -> Scheduled<decltype(fn(std::declval<const T&>()))> {
    using U = decltype(fn(std::declval<const T&>()));
    std::map<int, U> out;
    for (const auto& [epoch, value] : entries_) out.emplace(epoch, fn(value));
    return Scheduled<U>(std::move(out));
  }

 private:
  void validate() const {
    if (entries_.empty() || entries_.begin()->first != 0) {
      if (!entries_.empty() && entries_.begin()->first < 0) {
        throw ConfigError("schedule epochs must be >= 0");
      }
      throw ConfigError("schedule has no entry for epoch 0");
    }
  }

  std::map<int, T> entries_;
};

/// Sorted, de-duplicated union of change points.
inline std::vector<int> merge_change_points(std::vector<std::vector<int>> lists) {
  std::vector<int> out;
  for (auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace opflow
