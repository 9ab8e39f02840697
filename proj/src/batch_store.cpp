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

#include <cstring>

#include "opflow/batch_store.hpp"
#include "opflow/error.hpp"

namespace opflow {

const char* value_kind(const Value& v) {
  switch (v.index()) {
    case 0: return "tensor";
    case 1: return "number";
    default: return "int-list";
  }
}

bool value_bit_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const auto* t = std::get_if<Tensor>(&a)) return t->bit_equal(std::get<Tensor>(b));
  if (const auto* d = std::get_if<double>(&a)) {
    const double e = std::get<double>(b);
    return std::memcmp(d, &e, sizeof(double)) == 0;
  }
  return std::get<IntList>(a) == std::get<IntList>(b);
}

BatchStore::BatchStore(std::initializer_list<Entry> entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

bool BatchStore::contains(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return true;
  }
  return false;
}

const Value& BatchStore::at(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw KeyError("batch has no key '" + std::string(key) + "'");
}

const Tensor& BatchStore::tensor(std::string_view key) const {
  const Value& v = at(key);
  if (const auto* t = std::get_if<Tensor>(&v)) return *t;
  throw Error("batch key '" + std::string(key) + "' holds a " + value_kind(v) + ", not a tensor");
}

const IntList& BatchStore::ints(std::string_view key) const {
  const Value& v = at(key);
  if (const auto* l = std::get_if<IntList>(&v)) return *l;
  throw Error("batch key '" + std::string(key) + "' holds a " + value_kind(v) +
              ", not an int-list");
}

double BatchStore::number(std::string_view key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* t = std::get_if<Tensor>(&v); t && t->numel() == 1) return t->item();
  throw Error("batch key '" + std::string(key) + "' is not a scalar");
}

void BatchStore::set(std::string key, Value value) {
  if (key.empty()) throw KeyError("batch keys must be non-empty");
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool BatchStore::erase(std::string_view key) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->first == key) {
      entries_.erase(it);
      return true;
    }
  }
  return false;
}

std::vector<std::string> BatchStore::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

std::size_t BatchStore::batch_size() const {
  for (const auto& [k, v] : entries_) {
    if (const auto* t = std::get_if<Tensor>(&v); t && t->rank() >= 1) return t->extent(0);
    if (const auto* l = std::get_if<IntList>(&v)) return l->size();
  }
  return 0;
}

BatchStore BatchStore::detached() const {
  BatchStore out;
  out.entries_.reserve(entries_.size());
  for (const auto& [k, v] : entries_) {
    if (const auto* t = std::get_if<Tensor>(&v)) {
      out.entries_.emplace_back(k, t->detached());
    } else {
      out.entries_.emplace_back(k, v);
    }
  }
  return out;
}

std::uint64_t BatchStore::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : entries_) {
    mix(k.data(), k.size());
    const std::size_t idx = v.index();
    mix(&idx, sizeof(idx));
    if (const auto* t = std::get_if<Tensor>(&v)) {
      for (auto e : t->shape()) mix(&e, sizeof(e));
      mix(t->data().data(), t->numel() * sizeof(double));
    } else if (const auto* d = std::get_if<double>(&v)) {
      mix(d, sizeof(double));
    } else {
      const auto& l = std::get<IntList>(v);
      mix(l.data(), l.size() * sizeof(std::int64_t));
    }
  }
  return h;
}

}  // namespace opflow
