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

#include <cmath>

#include "opflow/error.hpp"
#include "opflow/optimizer.hpp"

namespace opflow {

void Optimizer::step(std::span<Parameter> params, const std::map<std::string, Tensor>& grads) {
  for (const auto& p : params) {
    if (!p.trainable) continue;
    auto it = grads.find(p.name);
    if (it == grads.end()) throw KeyError("no gradient for parameter '" + p.name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw ShapeError("gradient for '" + p.name + "' has shape " +
                       shape_to_string(it->second.shape()) + ", parameter is " +
                       shape_to_string(p.value.shape()));
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  for (auto& p : params) {
    if (!p.trainable) continue;
    const Tensor& g = grads.at(p.name);
    std::vector<double> w(p.value.data().begin(), p.value.data().end());
    if (spec_.kind == OptimizerSpec::Kind::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= spec_.lr * g[i];
    } else {
      auto& m = m_[p.name];
      auto& v = v_[p.name];
      if (m.empty()) {
        m.assign(w.size(), 0.0);
        v.assign(w.size(), 0.0);
      }
      const double c1 = 1.0 - std::pow(spec_.beta1, t);
      const double c2 = 1.0 - std::pow(spec_.beta2, t);
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = spec_.beta1 * m[i] + (1.0 - spec_.beta1) * g[i];
        v[i] = spec_.beta2 * v[i] + (1.0 - spec_.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] -= spec_.lr * mhat / (std::sqrt(vhat) + spec_.epsilon);
      }
    }
    p.value = Tensor(p.value.shape(), std::move(w));
  }
}

}  // namespace opflow
