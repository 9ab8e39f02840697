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
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "opflow/builtin_traces.hpp"
#include "opflow/estimator.hpp"
#include "opflow/random.hpp"

namespace opflow {

int History::epochs() const {
  std::set<int> e;
  for (const auto& r : records) e.insert(r.epoch);
  return static_cast<int>(e.size());
}

std::optional<double> History::value(int epoch, Mode mode, const std::string& key) const {
  for (const auto& r : records) {
    if (r.epoch != epoch || r.mode != mode) continue;
    for (const auto& [k, v] : r.values) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

std::vector<std::pair<int, double>> History::series(Mode mode, const std::string& key) const {
  std::vector<std::pair<int, double>> out;
  for (const auto& r : records) {
    if (r.mode != mode) continue;
    for (const auto& [k, v] : r.values) {
      if (k == key) out.emplace_back(r.epoch, v);
    }
  }
  return out;
}

void History::write_csv(std::ostream& out) const {
  out << "epoch,mode,key,value\n";
  char buf[40];
  for (const auto& r : records) {
    for (const auto& [k, v] : r.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << r.epoch << ',' << mode_name(r.mode) << ',' << k << ',' << buf << '\n';
    }
  }
}

void History::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write history to " + path.string());
  write_csv(out);
}

History History::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open history " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty history");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epoch,mode,key,value") {
    throw Error(path.string() + ": expected header 'epoch,mode,key,value'");
  }
  History h;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string epoch, mode, key, value;
    if (!std::getline(is, epoch, ',') || !std::getline(is, mode, ',') ||
        !std::getline(is, key, ',') || !std::getline(is, value)) {
      throw Error(path.string() + ": malformed row " + std::to_string(row));
    }
    EpochRecord rec;
    char* end = nullptr;
    rec.epoch = static_cast<int>(std::strtol(epoch.c_str(), &end, 10));
    if (epoch.empty() || *end) throw Error(path.string() + ": bad epoch at row " + std::to_string(row));
    rec.mode = parse_mode(mode);
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end) throw Error(path.string() + ": bad value at row " + std::to_string(row));
    if (h.records.empty() || h.records.back().epoch != rec.epoch || h.records.back().mode != rec.mode) {
      h.records.push_back(std::move(rec));
    }
    h.records.back().values.emplace_back(key, v);
  }
  return h;
}

std::string SmokeReport::to_string() const {
  std::ostringstream os;
  for (const auto& d : diagnostics) {
    os << "  epoch " << d.epoch << " (" << mode_name(d.mode) << "): " << d.message << '\n';
  }
  return os.str();
}

namespace {

constexpr std::uint64_t kSmokeSalt = 0x736d6f6b65ULL;

std::vector<int> check_points(const EstimatorConfig& cfg) {
  std::vector<std::vector<int>> lists{{0}, change_points(cfg.pipeline.ops), change_points(cfg.ops)};
  for (const auto& r : cfg.rules) lists.push_back(r.model.change_points());
  return merge_change_points(std::move(lists));
}

std::vector<Mode> modes_of(const EstimatorConfig& cfg) {
  std::vector<Mode> m{Mode::kTrain};
  if (cfg.pipeline.eval) m.push_back(Mode::kEval);
  return m;
}

std::vector<std::string> produced_keys(const EstimatorConfig& cfg) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (int e : check_points(cfg)) {
    for (Mode mode : modes_of(cfg)) {
      const auto k0 = batch_keys(cfg.pipeline.dataset(mode), cfg.pipeline.config_for(mode));
      const auto k1 = keys_after(cfg.pipeline.ops, k0, mode, e);
      for (const auto& k : keys_after(cfg.ops, k1, mode, e)) {
        if (seen.insert(k).second) out.push_back(k);
      }
    }
  }
  return out;
}

std::vector<std::string> validate_config(const EstimatorConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.epochs < 1) problems.push_back("epochs must be >= 1");
  if (cfg.workers < 1) problems.push_back("workers must be >= 1");
  if (cfg.log_interval < 0) problems.push_back("log_interval must be >= 0");
  if (cfg.pipeline.config.batch_size < 1) problems.push_back("batch_size must be >= 1");
  try {
    cfg.pipeline.train.validate();
    if (cfg.pipeline.eval) cfg.pipeline.eval->validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
    return problems;
  }
  for (const auto& r : cfg.rules) {
    for (const auto& [epoch, m] : r.model.entries()) {
      if (!m) problems.push_back("update rule for '" + r.loss_key + "' has no model");
    }
  }
  auto trace_problems = validate_traces(cfg.traces, produced_keys(cfg));
  problems.insert(problems.end(), trace_problems.begin(), trace_problems.end());
  return problems;
}

std::string describe(const KeyViolation& v, const char* stage) {
  return std::string(stage) + " operator #" + std::to_string(v.position) + " '" + v.op +
         "' reads missing key '" + v.key + "'";
}

}  // namespace

SmokeReport smoke_test(const EstimatorConfig& cfg) {
  SmokeReport report;
  for (const auto& p : validate_config(cfg)) report.diagnostics.push_back({0, Mode::kTrain, p});
  if (!report.ok()) return report;

  for (int epoch : check_points(cfg)) {
    for (Mode mode : modes_of(cfg)) {
      const Dataset& ds = cfg.pipeline.dataset(mode);
      BatchConfig bcfg = cfg.pipeline.config_for(mode);
      const auto k0 = batch_keys(ds, bcfg);
      bool keys_ok = true;
      for (const auto& v : validate_keys(cfg.pipeline.ops, k0, mode, epoch)) {
        report.diagnostics.push_back({epoch, mode, describe(v, "pipeline")});
        keys_ok = false;
      }
      const auto k1 = keys_after(cfg.pipeline.ops, k0, mode, epoch);
      for (const auto& v : validate_keys(cfg.ops, k1, mode, epoch)) {
        report.diagnostics.push_back({epoch, mode, describe(v, "network")});
        keys_ok = false;
      }
      if (mode == Mode::kTrain) {
        const auto k2 = keys_after(cfg.ops, k1, mode, epoch);
        for (const auto& r : cfg.rules) {
          if (std::find(k2.begin(), k2.end(), r.loss_key) == k2.end()) {
            report.diagnostics.push_back(
                {epoch, mode,
                 "loss key '" + r.loss_key + "' for model '" + r.model.resolve(epoch)->name() +
                     "' is never produced"});
            keys_ok = false;
          }
        }
      }
      if (!keys_ok) continue;

      // One batch from a salted seed, independent of the training order.
      try {
        bcfg.seed = splitmix64(cfg.seed ^ kSmokeSalt);
        bcfg.drop_remainder = false;
        const EpochPlan plan = plan_epoch(ds, bcfg, epoch);
        BatchStore batch = cfg.pipeline.transform(assemble_batch(ds, plan, 0, bcfg), mode, epoch);
        forward_backward(cfg.ops, cfg.rules, std::move(batch), mode, epoch, 0);
      } catch (const std::exception& e) {
        report.diagnostics.push_back({epoch, mode, e.what()});
      }
    }
  }
  return report;
}

std::vector<std::size_t> shard_sizes(std::size_t batch, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const auto w = static_cast<std::size_t>(workers);
  if (w > batch) {
    throw ConfigError("workers (" + std::to_string(workers) + ") exceed batch size (" +
                      std::to_string(batch) + ")");
  }
  std::vector<std::size_t> sizes(w, batch / w);
  for (std::size_t i = 0; i < batch % w; ++i) ++sizes[i];
  return sizes;
}

namespace {

bool is_per_sample(const Value& v, std::size_t n) {
  if (const auto* t = std::get_if<Tensor>(&v)) return t->rank() >= 1 && t->extent(0) == n;
  if (const auto* l = std::get_if<IntList>(&v)) return l->size() == n;
  return false;
}

Value slice(const Value& v, std::size_t begin, std::size_t len) {
  if (const auto* t = std::get_if<Tensor>(&v)) {
    const std::size_t row = t->numel() / t->extent(0);
    Shape shape = t->shape();
    shape[0] = len;
    return Tensor(std::move(shape),
                  std::vector<double>(t->data().begin() + static_cast<std::ptrdiff_t>(begin * row),
                                      t->data().begin() +
                                          static_cast<std::ptrdiff_t>((begin + len) * row)));
  }
  const auto& l = std::get<IntList>(v);
  return IntList(l.begin() + static_cast<std::ptrdiff_t>(begin),
                 l.begin() + static_cast<std::ptrdiff_t>(begin + len));
}

BatchStore merge_shards(const std::vector<BatchStore>& shards, const std::vector<std::size_t>& sizes,
                        std::size_t total) {
  BatchStore out;
  for (const auto& key : shards.front().keys()) {
    bool per_sample = true;
    bool scalar = true;
    for (std::size_t s = 0; s < shards.size(); ++s) {
      if (!shards[s].contains(key)) {
        per_sample = scalar = false;
        break;
      }
      const Value& v = shards[s].at(key);
      per_sample = per_sample && is_per_sample(v, sizes[s]);
      const auto* t = std::get_if<Tensor>(&v);
      scalar = scalar && ((t && t->rank() == 0) || std::holds_alternative<double>(v));
    }
    if (per_sample) {
      const Value& first = shards.front().at(key);
      if (std::holds_alternative<IntList>(first)) {
        IntList all;
        for (const auto& s : shards) {
          const auto& l = s.ints(key);
          all.insert(all.end(), l.begin(), l.end());
        }
        out.set(key, std::move(all));
      } else {
        std::vector<double> data;
        for (const auto& s : shards) {
          const auto d = s.tensor(key).data();
          data.insert(data.end(), d.begin(), d.end());
        }
        Shape shape = shards.front().tensor(key).shape();
        shape[0] = total;
        out.set(key, Tensor(std::move(shape), std::move(data)));
      }
    } else if (scalar) {
      double acc = 0.0;
      for (std::size_t s = 0; s < shards.size(); ++s) {
        acc += static_cast<double>(sizes[s]) / static_cast<double>(total) * shards[s].number(key);
      }
      if (std::holds_alternative<double>(shards.front().at(key))) {
        out.set(key, acc);
      } else {
        out.set(key, Tensor::scalar(acc));
      }
    } else {
      out.set(key, shards.front().at(key));
    }
  }
  return out;
}

}  // namespace

BatchStore parallel_step(int workers, const BatchStore& batch, const OpSequence& ops,
                         std::span<const UpdateRule> rules, int epoch, std::int64_t step) {
  const std::size_t total = batch.batch_size();
  const auto sizes = shard_sizes(total, workers);
  if (workers == 1) return network_step(ops, rules, batch, Mode::kTrain, epoch, step);

  std::vector<BatchStore> inputs(sizes.size());
  std::size_t begin = 0;
  for (std::size_t w = 0; w < sizes.size(); ++w) {
    for (const auto& [key, value] : batch) {
      inputs[w].set(key, is_per_sample(value, total) ? slice(value, begin, sizes[w]) : value);
    }
    begin += sizes[w];
  }

  std::vector<StepResult> results(sizes.size());
  std::vector<std::exception_ptr> errors(sizes.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < sizes.size(); ++w) {
      threads.emplace_back([&, w] {
        try {
          results[w] = forward_backward(ops, rules, std::move(inputs[w]), Mode::kTrain, epoch, step);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Shard-size-weighted mean, accumulated in worker order.
  std::vector<std::map<std::string, Tensor>> combined(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    for (const auto& [name, g0] : results[0].grads[r]) {
      std::vector<double> acc(g0.numel(), 0.0);
      for (std::size_t w = 0; w < sizes.size(); ++w) {
        const double weight = static_cast<double>(sizes[w]) / static_cast<double>(total);
        const Tensor& g = results[w].grads[r].at(name);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * g[i];
      }
      combined[r].emplace(name, Tensor(g0.shape(), std::move(acc)));
    }
  }
  apply_updates(rules, combined, epoch);

  std::vector<BatchStore> stores;
  for (auto& r : results) stores.push_back(std::move(r.store));
  return merge_shards(stores, sizes, total);
}

Estimator::Estimator(EstimatorConfig cfg) : cfg_(std::move(cfg)) {
  for (const auto& r : cfg_.rules) {
    if (std::find(loss_keys_.begin(), loss_keys_.end(), r.loss_key) == loss_keys_.end()) {
      loss_keys_.push_back(r.loss_key);
    }
  }
  if (cfg_.monitor_losses) {
    // Loss keys a user trace already reports are left to that trace.
    std::vector<std::string> unmonitored;
    for (const auto& k : loss_keys_) {
      const bool covered = std::any_of(cfg_.traces.begin(), cfg_.traces.end(), [&](const TracePtr& t) {
        return std::find(t->outputs().begin(), t->outputs().end(), k) != t->outputs().end();
      });
      if (!covered) unmonitored.push_back(k);
    }
    if (!unmonitored.empty()) {
      cfg_.traces.insert(cfg_.traces.begin(),
                         std::make_shared<traces::LossMonitor>(unmonitored, "loss"));
    }
  }
  const auto problems = validate_config(cfg_);
  if (!problems.empty()) {
    std::string msg = "invalid estimator configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

SmokeReport Estimator::smoke_test() const { return opflow::smoke_test(cfg_); }

void Estimator::log_line(Mode mode, std::int64_t step, int epoch,
                         const std::vector<std::pair<std::string, double>>& values) const {
  if (!cfg_.log) return;
  std::ostream& os = *cfg_.log;
  os << "mode=" << mode_name(mode) << " step=" << step << " epoch=" << epoch;
  char buf[64];
  for (const auto& [k, v] : values) {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    os << ' ' << k << '=' << buf;
  }
  os << '\n';
}

void Estimator::run_epoch(Mode mode, int epoch, std::int64_t& step, TraceState& state,
                          History& history) {
  dispatch_event({EventKind::kEpochBegin, mode, epoch, step, nullptr}, cfg_.traces, state);
  const Dataset& ds = cfg_.pipeline.dataset(mode);
  const BatchConfig bcfg = cfg_.pipeline.config_for(mode);
  const EpochPlan plan = plan_epoch(ds, bcfg, epoch);
  for (std::size_t b = 0; b < plan.num_batches(); ++b) {
    BatchStore batch = cfg_.pipeline.transform(assemble_batch(ds, plan, b, bcfg), mode, epoch);
    if (mode == Mode::kTrain) ++step;
    dispatch_event({EventKind::kBatchBegin, mode, epoch, step, &batch}, cfg_.traces, state);
    BatchStore out;
    try {
      if (mode == Mode::kTrain && cfg_.workers > 1) {
        out = parallel_step(cfg_.workers, batch, cfg_.ops, cfg_.rules, epoch, step);
      } else {
        out = network_step(cfg_.ops, cfg_.rules, std::move(batch), mode, epoch, step);
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
    }
    dispatch_event({EventKind::kBatchEnd, mode, epoch, step, &out}, cfg_.traces, state);
    if (mode == Mode::kTrain && cfg_.log_interval > 0 && step % cfg_.log_interval == 0) {
      std::vector<std::pair<std::string, double>> values;
      for (const auto& k : loss_keys_) {
        if (out.contains(k)) values.emplace_back(k, out.number(k));
      }
      log_line(mode, step, epoch, values);
    }
    if (state.stop_requested()) break;
  }
  dispatch_event({EventKind::kEpochEnd, mode, epoch, step, nullptr}, cfg_.traces, state);

  EpochRecord rec{epoch, mode, {}};
  for (const auto& e : state.entries()) {
    if (const auto* d = std::get_if<double>(&e.value)) {
      rec.values.emplace_back(e.key, *d);
    } else if (const auto* t = std::get_if<Tensor>(&e.value); t && t->numel() == 1) {
      rec.values.emplace_back(e.key, t->item());
    }
  }
  log_line(mode, step, epoch, rec.values);
  history.records.push_back(std::move(rec));
}

History Estimator::fit() {
  SmokeReport report = smoke_test();
  if (!report.ok()) throw SmokeTestError(std::move(report));

  History history;
  TraceState state;
  std::int64_t step = 0;
  dispatch_event({EventKind::kBegin, Mode::kTrain, 0, step, nullptr}, cfg_.traces, state);
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    run_epoch(Mode::kTrain, epoch, step, state, history);
    if (state.stop_requested()) break;
    if (cfg_.pipeline.eval) {
      run_epoch(Mode::kEval, epoch, step, state, history);
      if (state.stop_requested()) break;
    }
  }
  dispatch_event({EventKind::kEnd, Mode::kTrain, cfg_.epochs, step, nullptr}, cfg_.traces, state);
  return history;
}

}  // namespace opflow
