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

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "opflow/network.hpp"
#include "opflow/trace.hpp"

namespace opflow::traces {

/// Fraction of samples whose argmax prediction equals the label, over the
/// whole epoch. Ties go to the lowest index. A single-column prediction is
/// read as a probability thresholded at 0.5.
class Accuracy : public Trace {
 public:
  Accuracy(std::string pred_key, std::string label_key, std::string output = "accuracy",
           Mode mode = Mode::kBoth);

  void on_epoch_begin(TraceContext& ctx) override;
  void on_batch_end(TraceContext& ctx) override;
  void on_epoch_end(TraceContext& ctx) override;

  static std::size_t predicted_class(const Tensor& pred, std::size_t row);

 private:
  std::string pred_key_;
  std::string label_key_;
  std::string output_;
  std::size_t correct_ = 0;
  std::size_t total_ = 0;
};

/// Per-epoch mean of scalar batch values (one mean per key, batches weighted
/// equally).
class LossMonitor : public Trace {
 public:
  explicit LossMonitor(std::vector<std::string> keys, std::string name = "LossMonitor",
                       Mode mode = Mode::kBoth);

  void on_epoch_begin(TraceContext& ctx) override;
  void on_batch_end(TraceContext& ctx) override;
  void on_epoch_end(TraceContext& ctx) override;

 private:
  std::vector<std::string> keys_;
  std::vector<double> sums_;
  std::size_t batches_ = 0;
};

/// Appends `epoch,mode,key,value` rows for every scalar trace-state entry at
/// each epoch end.
class CsvLogger : public Trace {
 public:
  explicit CsvLogger(std::filesystem::path path, std::string name = "CsvLogger");

  void on_begin(TraceContext& ctx) override;
  void on_epoch_end(TraceContext& ctx) override;
  void on_end(TraceContext& ctx) override;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

enum class Direction { kMin, kMax };

Direction parse_direction(const std::string& s);

/// Saves the model whenever the monitored value improves.
class ModelSaver : public Trace {
 public:
  ModelSaver(ModelPtr model, std::filesystem::path path, std::string monitor_key,
             Direction direction = Direction::kMin, Mode mode = Mode::kEval);

  void on_epoch_end(TraceContext& ctx) override;
  int saves() const { return saves_; }

 private:
  ModelPtr model_;
  std::filesystem::path path_;
  std::string monitor_;
  Direction direction_;
  double best_;
  int saves_ = 0;
};

/// Requests a stop once `patience` consecutive epochs fail to improve on the
/// best value seen.
class EarlyStopping : public Trace {
 public:
  EarlyStopping(std::string monitor_key, int patience, Direction direction = Direction::kMin,
                double min_delta = 0.0, Mode mode = Mode::kEval);

  void on_epoch_end(TraceContext& ctx) override;
  int wait() const { return wait_; }

 private:
  std::string monitor_;
  int patience_;
  Direction direction_;
  double min_delta_;
  double best_;
  int wait_ = 0;
};

}  // namespace opflow::traces
