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
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "opflow/batch_store.hpp"
#include "opflow/operator.hpp"
#include "opflow/optimizer.hpp"
#include "opflow/parameter.hpp"
#include "opflow/schedule.hpp"

namespace opflow {

enum class Activation { kNone, kRelu, kLeakyRelu, kSigmoid, kTanh };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kNone;
};

struct ConvLayer {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride = 1;
  Activation activation = Activation::kNone;
};

struct FlattenLayer {};

struct ResizeLayer {
  ResizeFactor factor;
};

using Layer = std::variant<DenseLayer, ConvLayer, FlattenLayer, ResizeLayer>;

struct LayerSpec {
  /// Per-sample input shape (without the batch axis).
  Shape input_shape;
  std::vector<Layer> layers;
};

/// Per-sample output shape. Throws ShapeError naming the first layer whose
/// input shape does not fit.
Shape infer_output_shape(const LayerSpec& spec);

/// A trainable model: parameters, their optimizer, and the forward function.
///
/// Parameter names are `<model>/<index>_<kind>[_s<stride>][_<activation>]/<kernel|bias>`,
/// so a checkpoint alone describes the parameterised layers.
class Model {
 public:
  Model(std::string name, LayerSpec spec, OptimizerSpec optimizer, std::uint64_t init_seed);

  const std::string& name() const { return name_; }
  const LayerSpec& spec() const { return spec_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;
  bool owns(const std::string& param_name) const;
  Optimizer& optimizer() { return optimizer_; }
  const Optimizer& optimizer() const { return optimizer_; }

  /// x: [batch, input_shape...]. With a tape, parameters are watched under
  /// their names so backward() reports their gradients.
  Tensor forward(const Tensor& x, Tape* tape) const;

  /// One optimizer step on this model's trainable parameters; entries for
  /// other models' parameters are ignored.
  void apply_gradients(const std::map<std::string, Tensor>& grads);

  /// Replaces parameter values after checking names and shapes.
  void set_parameters(const std::vector<Parameter>& params);

 private:
  std::string name_;
  LayerSpec spec_;
  std::vector<Parameter> params_;
  Optimizer optimizer_;
};

using ModelPtr = std::shared_ptr<Model>;

/// Glorot-uniform weights drawn from init_seed, zero biases.
ModelPtr build(const LayerSpec& spec, OptimizerSpec optimizer, std::string name,
               std::uint64_t init_seed);

void save(const Model& model, const std::filesystem::path& path);
/// Loads parameter values, verifying every name and shape.
void load(Model& model, const std::filesystem::path& path);

/// Rebuilds a model from a checkpoint using the layer descriptions encoded in
/// parameter names. A flatten is inserted in front of a dense layer that sees
/// a rank > 1 sample. Layers without parameters (resize) are not recoverable.
ModelPtr model_from_checkpoint(const std::filesystem::path& path, const Shape& input_shape);

/// Forward pass of a (possibly scheduled) model as an operator. One operator
/// per schedule entry, so model swaps show up as change points.
Scheduled<Operator> model_op(const Scheduled<ModelPtr>& model, std::string in, std::string out,
                             Mode mode = Mode::kBoth);

/// Associates one scalar loss key with one model.
struct UpdateRule {
  std::string loss_key;
  Scheduled<ModelPtr> model;
};

struct StepResult {
  BatchStore store;
  /// Per rule, gradients of that rule's loss for that rule's model parameters.
  std::vector<std::map<std::string, Tensor>> grads;
};

/// Runs the operators on a fresh tape and, in train mode, one backward pass
/// per rule. No parameter changes. The returned store is tape-free.
StepResult forward_backward(const OpSequence& ops, std::span<const UpdateRule> rules,
                            BatchStore store, Mode mode, int epoch, std::int64_t step = 0);

/// One optimizer step per rule, applied in rule order with the given gradients.
void apply_updates(std::span<const UpdateRule> rules,
                   const std::vector<std::map<std::string, Tensor>>& grads, int epoch);

/// forward_backward followed, in train mode, by apply_updates.
BatchStore network_step(const OpSequence& ops, std::span<const UpdateRule> rules,
                        BatchStore store, Mode mode, int epoch, std::int64_t step = 0);

/// Distinct models referenced by the rules at any epoch, in first-use order.
std::vector<ModelPtr> referenced_models(std::span<const UpdateRule> rules);

}  // namespace opflow
