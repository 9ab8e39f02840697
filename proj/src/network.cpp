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
#include <sstream>

#include "opflow/error.hpp"
#include "opflow/network.hpp"
#include "opflow/random.hpp"

namespace opflow {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name.empty() || name == "none" || name == "linear") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

Tensor activate(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kLeakyRelu: return leaky_relu(x, 0.2);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kTanh: return tanh(x);
  }
  return x;
}

std::string layer_error(std::size_t index, const std::string& what) {
  return "layer " + std::to_string(index) + ": " + what;
}

/// Shape after one layer; throws on a mismatch.
Shape next_shape(const Shape& in, const Layer& layer, std::size_t index) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    if (in.size() != 1 || in[0] != d->in) {
      throw ShapeError(layer_error(index, "dense expects [" + std::to_string(d->in) + "], got " +
                                              shape_to_string(in)));
    }
    if (d->out == 0) throw ShapeError(layer_error(index, "dense output width must be >= 1"));
    return {d->out};
  }
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    if (in.size() != 3 || in[0] != c->in_channels) {
      throw ShapeError(layer_error(index, "conv expects [" + std::to_string(c->in_channels) +
                                              ",h,w], got " + shape_to_string(in)));
    }
    if (c->kernel_h > in[1] || c->kernel_w > in[2]) {
      throw ShapeError(layer_error(index, "conv kernel larger than input " + shape_to_string(in)));
    }
    if (c->stride == 0 || c->filters == 0) {
      throw ShapeError(layer_error(index, "conv stride and filters must be >= 1"));
    }
    if (c->stride == 1) return {c->filters, in[1], in[2]};
    return {c->filters, (in[1] - c->kernel_h) / c->stride + 1, (in[2] - c->kernel_w) / c->stride + 1};
  }
  if (std::holds_alternative<FlattenLayer>(layer)) return {shape_numel(in)};
  const auto& r = std::get<ResizeLayer>(layer);
  if (in.size() != 3) {
    throw ShapeError(layer_error(index, "resize expects [c,h,w], got " + shape_to_string(in)));
  }
  if (in[1] % r.factor.down != 0 || in[2] % r.factor.down != 0) {
    throw ShapeError(layer_error(index, "resize cannot downscale " + shape_to_string(in)));
  }
  return {in[0], in[1] * r.factor.up / r.factor.down, in[2] * r.factor.up / r.factor.down};
}

std::string layer_tag(std::size_t index, const Layer& layer) {
  std::string tag = std::to_string(index);
  Activation act = Activation::kNone;
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    tag += "_dense";
    act = d->activation;
  } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    tag += "_conv_s" + std::to_string(c->stride);
    act = c->activation;
  }
  if (act != Activation::kNone) tag += std::string("_") + activation_name(act);
  return tag;
}

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(shape_numel(shape));
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return Tensor(std::move(shape), std::move(w));
}

}  // namespace

Shape infer_output_shape(const LayerSpec& spec) {
  Shape shape = spec.input_shape;
  if (shape.empty()) throw ShapeError("model input shape is empty");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) shape = next_shape(shape, spec.layers[i], i);
  return shape;
}

Model::Model(std::string name, LayerSpec spec, OptimizerSpec optimizer, std::uint64_t init_seed)
    : name_(std::move(name)), spec_(std::move(spec)), optimizer_(optimizer) {
  if (name_.empty() || name_.find_first_of("/ \t\n") != std::string::npos) {
    throw ConfigError("model name '" + name_ + "' must be non-empty without '/' or spaces");
  }
  try {
    infer_output_shape(spec_);
  } catch (const ShapeError& e) {
    throw ShapeError("model '" + name_ + "': " + e.what());
  }
  SplitMix64 rng(init_seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const Layer& layer = spec_.layers[i];
    const std::string prefix = name_ + "/" + layer_tag(i, layer) + "/";
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      params_.push_back({prefix + "kernel", glorot({d->in, d->out}, d->in, d->out, rng), true});
      params_.push_back({prefix + "bias", Tensor::zeros({d->out}), true});
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const std::size_t area = c->kernel_h * c->kernel_w;
      params_.push_back({prefix + "kernel",
                         glorot({c->filters, c->in_channels, c->kernel_h, c->kernel_w},
                                c->in_channels * area, c->filters * area, rng),
                         true});
      params_.push_back({prefix + "bias", Tensor::zeros({c->filters}), true});
    }
  }
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

bool Model::owns(const std::string& param_name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == param_name; });
}

Tensor Model::forward(const Tensor& x, Tape* tape) const {
  const Shape& want = spec_.input_shape;
  if (x.rank() != want.size() + 1 || !std::equal(want.begin(), want.end(), x.shape().begin() + 1)) {
    throw ShapeError("model '" + name_ + "' expects input [B," +
                     shape_to_string(want).substr(1) + ", got " + shape_to_string(x.shape()));
  }
  auto param = [&](std::size_t idx) -> Tensor {
    const Parameter& p = params_[idx];
    return tape ? tape->watch(p.name, p.value) : p.value;
  };
  Tensor h = x;
  std::size_t next_param = 0;
  for (const Layer& layer : spec_.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      h = activate(bias_add(matmul(h, param(next_param)), param(next_param + 1)), d->activation);
      next_param += 2;
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      h = activate(bias_add(conv2d(h, param(next_param), c->stride), param(next_param + 1)),
                   c->activation);
      next_param += 2;
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      h = reshape(h, {h.extent(0), h.numel() / h.extent(0)});
    } else {
      h = resize_nearest(h, std::get<ResizeLayer>(layer).factor);
    }
  }
  return h;
}

void Model::apply_gradients(const std::map<std::string, Tensor>& grads) {
  std::map<std::string, Tensor> own;
  for (const auto& p : params_) {
    if (!p.trainable) continue;
    auto it = grads.find(p.name);
    if (it == grads.end()) throw KeyError("missing gradient for parameter '" + p.name + "'");
    own.emplace(p.name, it->second);
  }
  optimizer_.step(params_, own);
}

void Model::set_parameters(const std::vector<Parameter>& params) {
  if (params.size() != params_.size()) {
    throw ShapeError("model '" + name_ + "' has " + std::to_string(params_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != params_[i].name) {
      throw KeyError("model '" + name_ + "': expected parameter '" + params_[i].name +
                     "', got '" + params[i].name + "'");
    }
    if (params[i].value.shape() != params_[i].value.shape()) {
      throw ShapeError("parameter '" + params_[i].name + "' has shape " +
                       shape_to_string(params_[i].value.shape()) + ", checkpoint has " +
                       shape_to_string(params[i].value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params_[i].value = params[i].value.detached();
}

ModelPtr build(const LayerSpec& spec, OptimizerSpec optimizer, std::string name,
               std::uint64_t init_seed) {
  return std::make_shared<Model>(std::move(name), spec, optimizer, init_seed);
}

void save(const Model& model, const std::filesystem::path& path) {
  save_checkpoint(path, model.parameters());
}

void load(Model& model, const std::filesystem::path& path) {
  model.set_parameters(load_checkpoint(path));
}

ModelPtr model_from_checkpoint(const std::filesystem::path& path, const Shape& input_shape) {
  const auto params = load_checkpoint(path);
  if (params.empty()) throw Error(path.string() + ": checkpoint holds no parameters");
  const std::string name = params.front().name.substr(0, params.front().name.find('/'));
  LayerSpec spec{input_shape, {}};
  Shape shape = input_shape;
  for (std::size_t i = 0; i < params.size(); i += 2) {
    const std::string& pname = params[i].name;
    // <model>/<index>_<kind>[_s<stride>][_<act>]/kernel
    const auto a = pname.find('/');
    const auto b = pname.rfind('/');
    if (a == std::string::npos || a == b || pname.substr(b + 1) != "kernel" ||
        i + 1 >= params.size()) {
      throw Error(path.string() + ": unexpected parameter '" + pname + "'");
    }
    std::istringstream tag(pname.substr(a + 1, b - a - 1));
    std::vector<std::string> parts;
    for (std::string part; std::getline(tag, part, '_');) parts.push_back(part);
    if (parts.size() < 2) throw Error(path.string() + ": cannot parse layer tag in '" + pname + "'");
    const Tensor& kernel = params[i].value;
    std::size_t pos = 2;
    std::size_t stride = 1;
    if (parts[1] == "conv" && parts.size() > 2 && parts[2].starts_with("s")) {
      stride = std::stoul(parts[2].substr(1));
      pos = 3;
    }
    std::string act;
    for (std::size_t k = pos; k < parts.size(); ++k) act += (act.empty() ? "" : "_") + parts[k];
    if (parts[1] == "dense") {
      if (shape.size() != 1) {
        spec.layers.push_back(FlattenLayer{});
        shape = {shape_numel(shape)};
      }
      spec.layers.push_back(DenseLayer{kernel.extent(0), kernel.extent(1), parse_activation(act)});
    } else if (parts[1] == "conv") {
      spec.layers.push_back(ConvLayer{kernel.extent(1), kernel.extent(0), kernel.extent(2),
                                      kernel.extent(3), stride, parse_activation(act)});
    } else {
      throw Error(path.string() + ": unknown layer kind in '" + pname + "'");
    }
    shape = next_shape(shape, spec.layers.back(), spec.layers.size() - 1);
  }
  auto model = std::make_shared<Model>(name, spec, OptimizerSpec{}, 0);
  // Layer indices in names may differ once flattens are inserted; map by order.
  std::vector<Parameter> renamed = params;
  for (std::size_t i = 0; i < renamed.size(); ++i) renamed[i].name = model->parameters()[i].name;
  model->set_parameters(renamed);
  return model;
}

Scheduled<Operator> model_op(const Scheduled<ModelPtr>& model, std::string in, std::string out,
                             Mode mode) {
  return model.transform([&](const ModelPtr& m) {
    if (!m) throw ConfigError("model operator has no model");
    Operator op{"Model(" + m->name() + ")", {in}, {out}, mode, {}};
    op.transform = [m](std::span<const Value> inputs, OpContext& ctx) -> std::vector<Value> {
      const auto* x = std::get_if<Tensor>(&inputs[0]);
      if (!x) throw Error("model '" + m->name() + "' expects a tensor input");
      return {m->forward(*x, ctx.tape)};
    };
    return op;
  });
}

namespace {

const Tensor& loss_tensor(const BatchStore& store, const std::string& key, std::int64_t step) {
  const Value& v = store.at(key);
  const auto* t = std::get_if<Tensor>(&v);
  if (!t || t->numel() != 1) {
    throw ShapeError("loss '" + key + "' must be a scalar tensor" +
                     (t ? ", got shape " + shape_to_string(t->shape()) : std::string()));
  }
  if (!std::isfinite(t->item())) {
    throw NumericError("non-finite loss '" + key + "' (" + std::to_string(t->item()) +
                       ") at step " + std::to_string(step));
  }
  return *t;
}

}  // namespace

StepResult forward_backward(const OpSequence& ops, std::span<const UpdateRule> rules,
                            BatchStore store, Mode mode, int epoch, std::int64_t step) {
  Tape tape;
  BatchStore live;
  for (const auto& [key, value] : store) {
    if (const auto* t = std::get_if<Tensor>(&value)) {
      live.set(key, tape.watch(*t));
    } else {
      live.set(key, value);
    }
  }
  OpContext ctx{mode, epoch, &tape};
  execute_sequence(ops, live, ctx);

  StepResult result;
  if (mode == Mode::kTrain) {
    for (const auto& rule : rules) {
      const ModelPtr& model = rule.model.resolve(epoch);
      if (!live.contains(rule.loss_key)) {
        throw KeyError("update rule for model '" + model->name() + "': loss key '" +
                       rule.loss_key + "' was not produced");
      }
      const Tensor& loss = loss_tensor(live, rule.loss_key, step);
      std::map<std::string, Tensor> all;
      if (loss.on_tape()) all = tape.backward(loss);
      std::map<std::string, Tensor> own;
      for (const auto& p : model->parameters()) {
        auto it = all.find(p.name);
        own.emplace(p.name, it != all.end() ? it->second : Tensor::zeros(p.value.shape()));
      }
      result.grads.push_back(std::move(own));
    }
  }
  result.store = live.detached();
  return result;
}

void apply_updates(std::span<const UpdateRule> rules,
                   const std::vector<std::map<std::string, Tensor>>& grads, int epoch) {
  if (grads.size() != rules.size()) throw Error("one gradient map per update rule is required");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    rules[i].model.resolve(epoch)->apply_gradients(grads[i]);
  }
}

BatchStore network_step(const OpSequence& ops, std::span<const UpdateRule> rules,
                        BatchStore store, Mode mode, int epoch, std::int64_t step) {
  StepResult r = forward_backward(ops, rules, std::move(store), mode, epoch, step);
  if (mode == Mode::kTrain) apply_updates(rules, r.grads, epoch);
  return std::move(r.store);
}

std::vector<ModelPtr> referenced_models(std::span<const UpdateRule> rules) {
  std::vector<ModelPtr> out;
  for (const auto& rule : rules) {
    for (const auto& [epoch, m] : rule.model.entries()) {
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
  }
  return out;
}

}  // namespace opflow
