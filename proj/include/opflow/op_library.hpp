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

#include <string>
#include <vector>

#include "opflow/operator.hpp"

namespace opflow::ops {

/// Scales each sample (slice along the leading axis of a rank >= 2 tensor) to
/// [0, 1] with (v - min) / (max - min). A rank-0/1 tensor is one sample. A
/// constant sample maps to zeros.
Operator min_max(std::string in, std::string out, Mode mode = Mode::kBoth);

/// Nearest-neighbour resize of an image batch [n,c,h,w].
Operator resize(std::string in, std::string out, ResizeFactor factor, Mode mode = Mode::kBoth);

/// Softmax cross-entropy of logits against integer labels. When `mix_with`
/// is set the operator has a second output,
///   mixed = (1 - mix_weight) * mix_with + mix_weight * loss,
/// so a loss and its blend with an earlier loss come from one operator.
Operator cross_entropy(std::string logits, std::string labels, std::string out,
                       Mode mode = Mode::kBoth);
Operator cross_entropy_mixed(std::string logits, std::string labels, std::string mix_with,
                             double mix_weight, std::string out, std::string mixed_out,
                             Mode mode = Mode::kBoth);

/// Binary cross-entropy of probabilities against a constant target.
Operator binary_cross_entropy(std::string prob, double target, std::string out,
                              Mode mode = Mode::kBoth);
/// Binary cross-entropy against a target key.
Operator binary_cross_entropy(std::string prob, std::string target, std::string out,
                              Mode mode = Mode::kBoth);

Operator mean_squared_error(std::string a, std::string b, std::string out,
                            Mode mode = Mode::kBoth);
Operator mean_absolute_error(std::string a, std::string b, std::string out,
                             Mode mode = Mode::kBoth);

Operator stop_gradient(std::string in, std::string out, Mode mode = Mode::kBoth);

/// d(loss)/d(input) on the current tape, emitted as a tape-free tensor.
Operator input_gradient(std::string loss, std::string input, std::string out,
                        Mode mode = Mode::kBoth);

/// Fast gradient sign perturbation: clamp01(x + epsilon * sign(grad)).
Operator fgsm_perturb(std::string input, std::string grad, double epsilon, std::string out,
                      Mode mode = Mode::kBoth);

/// sum_i weights[i] * inputs[i] over tensors or numbers of equal shape.
Operator weighted_sum(std::vector<std::string> inputs, std::vector<double> weights,
                      std::string out, Mode mode = Mode::kBoth);

}  // namespace opflow::ops
