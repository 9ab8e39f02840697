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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "opflow/error.hpp"
#include "opflow/pipeline.hpp"
#include "opflow/random.hpp"

namespace opflow {

void Dataset::add(std::string key, std::vector<Tensor> samples, int group) {
  Feature f;
  f.key = std::move(key);
  f.group = group;
  f.tensors = std::move(samples);
  features.push_back(std::move(f));
}

void Dataset::add_labels(std::string key, IntList labels, int group) {
  Feature f;
  f.key = std::move(key);
  f.group = group;
  f.labels = std::move(labels);
  f.is_label = true;
  features.push_back(std::move(f));
}

std::size_t Dataset::size() const {
  std::size_t n = 0;
  for (const auto& f : features) n = std::max(n, f.count());
  return n;
}

std::vector<std::string> Dataset::keys() const {
  std::vector<std::string> out;
  for (const auto& f : features) out.push_back(f.key);
  return out;
}

bool Dataset::contains(const std::string& key) const {
  return std::any_of(features.begin(), features.end(),
                     [&](const Feature& f) { return f.key == key; });
}

const Feature& Dataset::feature(const std::string& key) const {
  for (const auto& f : features) {
    if (f.key == key) return f;
  }
  throw KeyError("dataset has no key '" + key + "'");
}

std::vector<int> Dataset::groups() const {
  std::set<int> g;
  for (const auto& f : features) g.insert(f.group);
  return {g.begin(), g.end()};
}

void Dataset::validate() const {
  if (features.empty() || size() == 0) throw Error("empty dataset");
  std::map<int, std::size_t> counts;
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (!seen.insert(f.key).second) throw Error("dataset key '" + f.key + "' appears twice");
    auto [it, inserted] = counts.emplace(f.group, f.count());
    if (!inserted && it->second != f.count()) {
      throw Error("pairing group " + std::to_string(f.group) + ": key '" + f.key + "' has " +
                  std::to_string(f.count()) + " samples, expected " + std::to_string(it->second));
    }
    if (f.count() == 0) throw Error("dataset key '" + f.key + "' has no samples");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::map<std::string, CsvColumn>& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty dataset");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  // key -> column positions in header order
  std::vector<std::string> key_order;
  std::map<std::string, std::vector<std::size_t>> columns_of;
  std::map<std::string, CsvKind> kind_of;
  for (const auto& [column, spec] : schema) {
    if (std::find(header.begin(), header.end(), column) == header.end()) {
      throw KeyError(path.string() + ": missing column '" + column + "'");
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = schema.find(header[c]);
    if (it == schema.end()) continue;
    const auto& spec = it->second;
    if (!columns_of.contains(spec.key)) key_order.push_back(spec.key);
    if (kind_of.contains(spec.key) && kind_of[spec.key] != spec.kind) {
      throw ConfigError("key '" + spec.key + "' mixes number and int-label columns");
    }
    kind_of[spec.key] = spec.kind;
    columns_of[spec.key].push_back(c);
  }
  for (const auto& [key, cols] : columns_of) {
    if (kind_of[key] == CsvKind::kIntLabel && cols.size() != 1) {
      throw ConfigError("label key '" + key + "' must map to exactly one column");
    }
  }

  std::map<std::string, std::vector<Tensor>> tensors;
  std::map<std::string, IntList> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(path.string() + ": row " + std::to_string(row) + " has " +
                  std::to_string(cells.size()) + " cells, header has " +
                  std::to_string(header.size()));
    }
    for (const auto& key : key_order) {
      std::vector<double> values;
      for (std::size_t c : columns_of[key]) {
        const std::string& cell = cells[c];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || *end != '\0') {
          throw Error(path.string() + ": row " + std::to_string(row) + ", column '" + header[c] +
                      "': '" + cell + "' is not numeric");
        }
        values.push_back(v);
      }
      if (kind_of[key] == CsvKind::kIntLabel) {
        const double v = values[0];
        if (v != std::floor(v)) {
          throw Error(path.string() + ": row " + std::to_string(row) + ", column '" +
                      header[columns_of[key][0]] + "': label is not an integer");
        }
        labels[key].push_back(static_cast<std::int64_t>(v));
      } else {
        const std::size_t n = values.size();
        tensors[key].emplace_back(Shape{n}, std::move(values));
      }
    }
  }
  Dataset ds;
  for (const auto& key : key_order) {
    if (kind_of[key] == CsvKind::kIntLabel) {
      ds.add_labels(key, std::move(labels[key]));
    } else {
      ds.add(key, std::move(tensors[key]));
    }
  }
  if (ds.size() == 0) throw Error(path.string() + ": empty dataset");
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  if (ds.groups().size() != 1) throw Error("write_csv supports paired datasets only");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (const auto& f : ds.features) {
    if (f.is_label) {
      sep();
      out << f.key;
      continue;
    }
    const Tensor& t = f.tensors.front();
    if (t.rank() > 1) throw Error("write_csv: key '" + f.key + "' has rank > 1");
    if (t.numel() == 1 && t.rank() == 0) {
      sep();
      out << f.key;
    } else {
      for (std::size_t i = 0; i < t.numel(); ++i) {
        sep();
        out << f.key << '_' << i;
      }
    }
  }
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    first = true;
    for (const auto& f : ds.features) {
      if (f.is_label) {
        sep();
        out << f.labels[r];
        continue;
      }
      for (double v : f.tensors[r].data()) {
        sep();
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
      }
    }
    out << '\n';
  }
}

std::size_t EpochPlan::num_batches() const {
  if (drop_remainder) return epoch_size / batch_size;
  return (epoch_size + batch_size - 1) / batch_size;
}

std::size_t EpochPlan::batch_length(std::size_t b) const {
  return std::min(batch_size, epoch_size - b * batch_size);
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::vector<std::size_t> weighted_draws(const IntList& labels,
                                        const std::map<std::int64_t, double>& weights,
                                        std::size_t draws, std::uint64_t seed) {
  std::vector<double> cumulative(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = weights.find(labels[i]);
    const double w = it == weights.end() ? 1.0 : it->second;
    if (!(w > 0.0)) throw ConfigError("class weights must be positive");
    total += w;
    cumulative[i] = total;
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> out(draws);
  for (auto& o : out) {
    const double u = rng.uniform() * total;
    o = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin());
    o = std::min(o, labels.size() - 1);
  }
  return out;
}

const Feature& weight_label(const Dataset& ds, const BatchConfig& cfg) {
  if (!cfg.label_key.empty()) {
    const Feature& f = ds.feature(cfg.label_key);
    if (!f.is_label) throw ConfigError("weighted sampling key '" + cfg.label_key + "' is not a label");
    return f;
  }
  const Feature* found = nullptr;
  for (const auto& f : ds.features) {
    if (!f.is_label) continue;
    if (found) throw ConfigError("weighted sampling needs label_key: dataset has several labels");
    found = &f;
  }
  if (!found) throw ConfigError("weighted sampling requested but the dataset has no label key");
  return *found;
}

}  // namespace

EpochPlan plan_epoch(const Dataset& ds, const BatchConfig& cfg, int epoch) {
  ds.validate();
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epoch < 0) throw ConfigError("epoch must be >= 0");
  EpochPlan plan;
  plan.epoch_size = ds.size();
  plan.batch_size = cfg.batch_size;
  plan.drop_remainder = cfg.drop_remainder;
  if (cfg.drop_remainder && cfg.batch_size > plan.epoch_size) {
    throw ConfigError("batch_size " + std::to_string(cfg.batch_size) +
                      " exceeds dataset size with drop_remainder");
  }
  const Feature* label = cfg.class_weights.empty() ? nullptr : &weight_label(ds, cfg);
  const auto groups = ds.groups();
  const auto e = static_cast<std::uint64_t>(epoch);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const int g = groups[gi];
    std::size_t n = 0;
    for (const auto& f : ds.features) {
      if (f.group == g) n = f.count();
    }
    const std::uint64_t seed = gi == 0 ? mix_seed(cfg.seed, e) : mix_seed(cfg.seed, e, gi);
    std::vector<std::size_t> order;
    if (label && label->group == g) {
      order = weighted_draws(label->labels, cfg.class_weights, plan.epoch_size, seed);
    } else {
      std::vector<std::size_t> base(n);
      if (cfg.shuffle) {
        base = permutation(n, seed);
      } else {
        std::iota(base.begin(), base.end(), 0);
      }
      order.resize(plan.epoch_size);
      for (std::size_t i = 0; i < plan.epoch_size; ++i) order[i] = base[i % n];
    }
    plan.order.emplace(g, std::move(order));
  }
  return plan;
}

std::pair<Tensor, IntList> pad_batch(const std::vector<Tensor>& samples, const PadSpec& spec) {
  if (samples.empty()) throw Error("pad_batch: no samples");
  const Tensor& first = samples.front();
  if (first.rank() == 0 || first.rank() > 3) {
    throw ShapeError("pad_batch: key '" + spec.key + "' samples must have rank 1..3");
  }
  std::size_t longest = 0;
  for (const auto& s : samples) {
    if (s.rank() != first.rank()) {
      throw ShapeError("pad_batch: key '" + spec.key + "' mixes ranks " +
                       shape_to_string(first.shape()) + " and " + shape_to_string(s.shape()));
    }
    for (std::size_t d = 1; d < s.rank(); ++d) {
      if (s.extent(d) != first.extent(d)) {
        throw ShapeError("pad_batch: key '" + spec.key + "' trailing extents differ: " +
                         shape_to_string(first.shape()) + " vs " + shape_to_string(s.shape()));
      }
    }
    longest = std::max(longest, s.extent(0));
  }
  const std::size_t row = first.numel() / first.extent(0);
  Shape shape{samples.size(), longest};
  for (std::size_t d = 1; d < first.rank(); ++d) shape.push_back(first.extent(d));
  std::vector<double> data(samples.size() * longest * row, spec.pad_value);
  IntList lens;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples[i].data().begin(), samples[i].data().end(),
              data.begin() + static_cast<std::ptrdiff_t>(i * longest * row));
    lens.push_back(static_cast<std::int64_t>(samples[i].extent(0)));
  }
  return {Tensor(std::move(shape), std::move(data)), std::move(lens)};
}

namespace {

Tensor stack(const std::vector<Tensor>& samples, const std::string& key) {
  const Shape& s0 = samples.front().shape();
  if (s0.size() >= 4) throw ShapeError("key '" + key + "': samples of rank 4 cannot be batched");
  std::vector<double> data;
  data.reserve(samples.size() * samples.front().numel());
  for (const auto& s : samples) {
    if (s.shape() != s0) {
      throw ShapeError("key '" + key + "': sample shapes differ (" + shape_to_string(s0) +
                       " vs " + shape_to_string(s.shape()) + "); configure padding");
    }
    data.insert(data.end(), s.data().begin(), s.data().end());
  }
  Shape shape{samples.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

BatchStore assemble_batch(const Dataset& ds, const EpochPlan& plan, std::size_t b,
                          const BatchConfig& cfg) {
  if (b >= plan.num_batches()) throw Error("batch index out of range");
  const std::size_t begin = b * plan.batch_size;
  const std::size_t len = plan.batch_length(b);
  BatchStore store;
  for (const auto& f : ds.features) {
    const auto& order = plan.order.at(f.group);
    const std::size_t n = f.count();
    if (f.is_label) {
      IntList ys(len);
      for (std::size_t i = 0; i < len; ++i) ys[i] = f.labels[order[begin + i] % n];
      store.set(f.key, std::move(ys));
      continue;
    }
    std::vector<Tensor> picked;
    picked.reserve(len);
    for (std::size_t i = 0; i < len; ++i) picked.push_back(f.tensors[order[begin + i] % n]);
    if (cfg.pad && cfg.pad->key == f.key) {
      auto [t, lens] = pad_batch(picked, *cfg.pad);
      store.set(f.key, std::move(t));
      store.set(f.key + "_len", std::move(lens));
    } else {
      store.set(f.key, stack(picked, f.key));
    }
  }
  return store;
}

std::vector<BatchStore> epoch_batches(const Dataset& ds, const BatchConfig& cfg, int epoch) {
  const EpochPlan plan = plan_epoch(ds, cfg, epoch);
  std::vector<BatchStore> out;
  out.reserve(plan.num_batches());
  for (std::size_t b = 0; b < plan.num_batches(); ++b) out.push_back(assemble_batch(ds, plan, b, cfg));
  return out;
}

std::vector<std::string> batch_keys(const Dataset& ds, const BatchConfig& cfg) {
  std::vector<std::string> keys;
  for (const auto& f : ds.features) {
    keys.push_back(f.key);
    if (cfg.pad && cfg.pad->key == f.key) keys.push_back(f.key + "_len");
  }
  return keys;
}

BenchmarkResult benchmark(const Dataset& ds, const BatchConfig& cfg, const OpSequence& ops,
                          std::size_t n_batches) {
  if (n_batches == 0) throw ConfigError("benchmark needs n_batches >= 1");
  BenchmarkResult r;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 0; r.batches < n_batches; ++epoch) {
    const EpochPlan plan = plan_epoch(ds, cfg, epoch);
    if (plan.num_batches() == 0) throw ConfigError("configuration yields no batches");
    for (std::size_t b = 0; b < plan.num_batches() && r.batches < n_batches; ++b) {
      BatchStore batch = assemble_batch(ds, plan, b, cfg);
      OpContext ctx{Mode::kTrain, epoch, nullptr};
      execute_sequence(ops, batch, ctx);
      r.samples += plan.batch_length(b);
      ++r.batches;
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double t = std::max(r.seconds, 1e-9);
  r.batches_per_sec = static_cast<double>(r.batches) / t;
  r.samples_per_sec = static_cast<double>(r.samples) / t;
  return r;
}

const Dataset& Pipeline::dataset(Mode mode) const {
  if (mode == Mode::kEval) {
    if (!eval) throw ConfigError("pipeline has no eval dataset");
    return *eval;
  }
  return train;
}

BatchConfig Pipeline::config_for(Mode mode) const {
  BatchConfig cfg = config;
  if (mode == Mode::kEval) {
    cfg.shuffle = false;
    cfg.class_weights.clear();
    cfg.drop_remainder = false;
  }
  return cfg;
}

BatchStore Pipeline::transform(BatchStore batch, Mode mode, int epoch) const {
  OpContext ctx{mode, epoch, nullptr};
  execute_sequence(ops, batch, ctx);
  return batch;
}

std::vector<BatchStore> Pipeline::batches(Mode mode, int epoch) const {
  auto raw = epoch_batches(dataset(mode), config_for(mode), epoch);
  for (auto& b : raw) b = transform(std::move(b), mode, epoch);
  return raw;
}

}  // namespace opflow
