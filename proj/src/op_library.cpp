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

#include "opflow/error.hpp"
#include "opflow/op_library.hpp"

namespace opflow::ops {

namespace {

const Tensor& as_tensor(const Value& v, const std::string& what) {
  if (const auto* t = std::get_if<Tensor>(&v)) return *t;
  throw Error(what + " expects a tensor, got a " + value_kind(v));
}

Tensor to_tensor(const Value& v, const std::string& what) {
  if (const auto* d = std::get_if<double>(&v)) return Tensor::scalar(*d);
  return as_tensor(v, what);
}

}  // namespace

Operator min_max(std::string in, std::string out, Mode mode) {
  Operator op{"MinMax", {std::move(in)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    const Tensor& x = as_tensor(inputs[0], "MinMax");
    const std::size_t samples = x.rank() >= 2 ? x.extent(0) : 1;
    const std::size_t per = x.numel() / samples;
    std::vector<double> offset(x.numel()), scale(x.numel());
    for (std::size_t s = 0; s < samples; ++s) {
      const auto begin = x.data().begin() + static_cast<std::ptrdiff_t>(s * per);
      const auto [lo, hi] = std::minmax_element(begin, begin + static_cast<std::ptrdiff_t>(per));
      const double range = *hi - *lo;
      for (std::size_t i = 0; i < per; ++i) {
        offset[s * per + i] = -*lo;
        scale[s * per + i] = range > 0 ? 1.0 / range : 0.0;
      }
    }
    // min and max are treated as constants of the transform.
    Tensor shifted = add(x, Tensor(x.shape(), std::move(offset)));
    return {mul(shifted, Tensor(x.shape(), std::move(scale)))};
  };
  return op;
}

Operator resize(std::string in, std::string out, ResizeFactor factor, Mode mode) {
  Operator op{"Resize", {std::move(in)}, {std::move(out)}, mode, {}};
  op.transform = [factor](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {resize_nearest(as_tensor(inputs[0], "Resize"), factor)};
  };
  return op;
}

Operator cross_entropy(std::string logits, std::string labels, std::string out, Mode mode) {
  Operator op{"CrossEntropy", {std::move(logits), std::move(labels)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    const auto* labels = std::get_if<IntList>(&inputs[1]);
    if (!labels) throw Error("CrossEntropy expects integer labels");
    return {softmax_cross_entropy(as_tensor(inputs[0], "CrossEntropy"), *labels)};
  };
  return op;
}

Operator cross_entropy_mixed(std::string logits, std::string labels, std::string mix_with,
                             double mix_weight, std::string out, std::string mixed_out,
                             Mode mode) {
  Operator op{"CrossEntropy",
              {std::move(logits), std::move(labels), std::move(mix_with)},
              {std::move(out), std::move(mixed_out)},
              mode,
              {}};
  op.transform = [mix_weight](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    const auto* labels = std::get_if<IntList>(&inputs[1]);
    if (!labels) throw Error("CrossEntropy expects integer labels");
    Tensor loss = softmax_cross_entropy(as_tensor(inputs[0], "CrossEntropy"), *labels);
    Tensor other = to_tensor(inputs[2], "CrossEntropy mix");
    Tensor mixed = add(mul(other, 1.0 - mix_weight), mul(loss, mix_weight));
    return {loss, mixed};
  };
  return op;
}

Operator binary_cross_entropy(std::string prob, double target, std::string out, Mode mode) {
  Operator op{"BinaryCrossEntropy", {std::move(prob)}, {std::move(out)}, mode, {}};
  op.transform = [target](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {opflow::binary_cross_entropy(as_tensor(inputs[0], "BinaryCrossEntropy"), target)};
  };
  return op;
}

Operator binary_cross_entropy(std::string prob, std::string target, std::string out, Mode mode) {
  Operator op{"BinaryCrossEntropy", {std::move(prob), std::move(target)}, {std::move(out)}, mode,
              {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {opflow::binary_cross_entropy(as_tensor(inputs[0], "BinaryCrossEntropy"),
                                         to_tensor(inputs[1], "BinaryCrossEntropy"))};
  };
  return op;
}

Operator mean_squared_error(std::string a, std::string b, std::string out, Mode mode) {
  Operator op{"MeanSquaredError", {std::move(a), std::move(b)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {opflow::mean_squared_error(as_tensor(inputs[0], "MeanSquaredError"),
                                       as_tensor(inputs[1], "MeanSquaredError"))};
  };
  return op;
}

Operator mean_absolute_error(std::string a, std::string b, std::string out, Mode mode) {
  Operator op{"MeanAbsoluteError", {std::move(a), std::move(b)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {opflow::mean_absolute_error(as_tensor(inputs[0], "MeanAbsoluteError"),
                                        as_tensor(inputs[1], "MeanAbsoluteError"))};
  };
  return op;
}

Operator stop_gradient(std::string in, std::string out, Mode mode) {
  Operator op{"StopGradient", {std::move(in)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    return {opflow::stop_gradient(as_tensor(inputs[0], "StopGradient"))};
  };
  return op;
}

Operator input_gradient(std::string loss, std::string input, std::string out, Mode mode) {
  Operator op{"InputGradient", {std::move(loss), std::move(input)}, {std::move(out)}, mode, {}};
  op.transform = [](std::span<const Value> inputs, OpContext& ctx) -> std::vector<Value> {
    if (!ctx.tape) throw Error("InputGradient needs a tape");
    const Tensor& loss = as_tensor(inputs[0], "InputGradient");
    const Tensor& x = as_tensor(inputs[1], "InputGradient");
    if (!x.on_tape()) return {Tensor::zeros(x.shape())};
    const Tensor wrt[] = {x};
    return {ctx.tape->gradient(loss, wrt)[0].detached()};
  };
  return op;
}

Operator fgsm_perturb(std::string input, std::string grad, double epsilon, std::string out,
                      Mode mode) {
  Operator op{"FgsmPerturb", {std::move(input), std::move(grad)}, {std::move(out)}, mode, {}};
  op.transform = [epsilon](std::span<const Value> inputs, OpContext&) -> std::vector<Value> {
    const Tensor& x = as_tensor(inputs[0], "FgsmPerturb");
    if (epsilon == 0.0) return {x};
    const Tensor step = mul(sign(as_tensor(inputs[1], "FgsmPerturb")), epsilon);
    return {clamp01(add(x, step))};
  };
  return op;
}

Operator weighted_sum(std::vector<std::string> inputs, std::vector<double> weights,
                      std::string out, Mode mode) {
  if (inputs.empty() || inputs.size() != weights.size()) {
    throw ConfigError("WeightedSum needs one weight per input");
  }
  Operator op{"WeightedSum", std::move(inputs), {std::move(out)}, mode, {}};
  op.transform = [weights](std::span<const Value> in, OpContext&) -> std::vector<Value> {
    Tensor acc = mul(to_tensor(in[0], "WeightedSum"), weights[0]);
    for (std::size_t i = 1; i < in.size(); ++i) {
      acc = add(acc, mul(to_tensor(in[i], "WeightedSum"), weights[i]));
    }
    return {acc};
  };
  return op;
}

}  // namespace opflow::ops
