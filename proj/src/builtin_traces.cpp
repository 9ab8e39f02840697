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

#include <cstdio>

#include "opflow/builtin_traces.hpp"
#include "opflow/error.hpp"

namespace opflow::traces {

Accuracy::Accuracy(std::string pred_key, std::string label_key, std::string output, Mode mode)
    : Trace("Accuracy(" + output + ")", {pred_key, label_key}, {output}, mode),
      pred_key_(std::move(pred_key)),
      label_key_(std::move(label_key)),
      output_(std::move(output)) {}

std::size_t Accuracy::predicted_class(const Tensor& pred, std::size_t row) {
  const std::size_t classes = pred.rank() >= 2 ? pred.numel() / pred.extent(0) : 1;
  if (classes == 1) return pred[row] >= 0.5 ? 1 : 0;
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (pred[row * classes + c] > pred[row * classes + best]) best = c;
  }
  return best;
}

void Accuracy::on_epoch_begin(TraceContext&) {
  correct_ = 0;
  total_ = 0;
}

void Accuracy::on_batch_end(TraceContext& ctx) {
  const Tensor& pred = ctx.read_tensor(pred_key_);
  const IntList& labels = ctx.read_ints(label_key_);
  const std::size_t rows = pred.rank() == 0 ? 1 : pred.extent(0);
  if (rows != labels.size()) {
    throw ShapeError("Accuracy: " + std::to_string(rows) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (static_cast<std::int64_t>(predicted_class(pred, i)) == labels[i]) ++correct_;
  }
  total_ += rows;
}

void Accuracy::on_epoch_end(TraceContext& ctx) {
  ctx.write(output_, total_ ? static_cast<double>(correct_) / static_cast<double>(total_) : 0.0);
}

LossMonitor::LossMonitor(std::vector<std::string> keys, std::string name, Mode mode)
    : Trace(std::move(name), keys, keys, mode), keys_(std::move(keys)) {}

void LossMonitor::on_epoch_begin(TraceContext&) {
  sums_.assign(keys_.size(), 0.0);
  batches_ = 0;
}

void LossMonitor::on_batch_end(TraceContext& ctx) {
  for (std::size_t i = 0; i < keys_.size(); ++i) sums_[i] += ctx.batch().number(keys_[i]);
  ++batches_;
}

void LossMonitor::on_epoch_end(TraceContext& ctx) {
  if (batches_ == 0) return;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    ctx.write(keys_[i], sums_[i] / static_cast<double>(batches_));
  }
}

CsvLogger::CsvLogger(std::filesystem::path path, std::string name)
    : Trace(std::move(name)), path_(std::move(path)) {}

void CsvLogger::on_begin(TraceContext&) {
  out_.open(path_, std::ios::trunc);
  if (!out_) throw Error("CsvLogger cannot open " + path_.string());
  out_ << "epoch,mode,key,value\n";
}

void CsvLogger::on_epoch_end(TraceContext& ctx) {
  char buf[40];
  for (const auto& e : ctx.state().entries()) {
    double v = 0.0;
    if (const auto* d = std::get_if<double>(&e.value)) {
      v = *d;
    } else if (const auto* t = std::get_if<Tensor>(&e.value); t && t->numel() == 1) {
      v = t->item();
    } else {
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out_ << ctx.epoch() << ',' << mode_name(ctx.mode()) << ',' << e.key << ',' << buf << '\n';
  }
  out_.flush();
}

void CsvLogger::on_end(TraceContext&) { out_.close(); }

Direction parse_direction(const std::string& s) {
  if (s == "min") return Direction::kMin;
  if (s == "max") return Direction::kMax;
  throw ConfigError("direction must be 'min' or 'max', got '" + s + "'");
}

namespace {
double worst(Direction d) {
  return d == Direction::kMin ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
}
bool improves(Direction d, double value, double best, double min_delta) {
  return d == Direction::kMin ? value < best - min_delta : value > best + min_delta;
}
}  // namespace

ModelSaver::ModelSaver(ModelPtr model, std::filesystem::path path, std::string monitor_key,
                       Direction direction, Mode mode)
    : Trace("ModelSaver(" + (model ? model->name() : std::string("?")) + ")", {monitor_key}, {},
            mode),
      model_(std::move(model)),
      path_(std::move(path)),
      monitor_(std::move(monitor_key)),
      direction_(direction),
      best_(worst(direction)) {
  if (!model_) throw ConfigError("ModelSaver needs a model");
}

void ModelSaver::on_epoch_end(TraceContext& ctx) {
  const double v = ctx.read_number(monitor_);
  if (!improves(direction_, v, best_, 0.0)) return;
  best_ = v;
  save(*model_, path_);
  ++saves_;
}

EarlyStopping::EarlyStopping(std::string monitor_key, int patience, Direction direction,
                             double min_delta, Mode mode)
    : Trace("EarlyStopping(" + monitor_key + ")", {monitor_key}, {}, mode),
      monitor_(std::move(monitor_key)),
      patience_(patience),
      direction_(direction),
      min_delta_(min_delta),
      best_(worst(direction)) {
  if (patience_ < 1) throw ConfigError("EarlyStopping patience must be >= 1");
}

void EarlyStopping::on_epoch_end(TraceContext& ctx) {
  const double v = ctx.read_number(monitor_);
  if (improves(direction_, v, best_, min_delta_)) {
    best_ = v;
    wait_ = 0;
    return;
  }
  if (++wait_ >= patience_) ctx.request_stop();
}

}  // namespace opflow::traces
