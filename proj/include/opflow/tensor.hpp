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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace opflow {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct TapeData;
}

/// Immutable dense array of doubles, row-major, rank 0..4.
///
/// A tensor may be linked to a node on a Tape; operations whose operands are
/// linked record a node on that tape. Copies are cheap: the storage is shared
/// and never written after construction, so tensors can be read from several
/// threads at once.
class Tensor {
 public:
  /// Rank-0 zero.
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_->size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::span<const double> data() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }

  /// Value of a single-element tensor.
  double item() const;

  bool on_tape() const { return tape_ != nullptr; }
  /// Node index on the owning tape; meaningful only when on_tape().
  std::size_t tape_id() const { return node_; }

  /// Same values, no tape link.
  Tensor detached() const;

  /// Bitwise equality of shape and values (NaN payloads included).
  bool bit_equal(const Tensor& other) const;

 private:
  friend class Tape;
  friend struct TensorAccess;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  std::shared_ptr<detail::TapeData> tape_;
  std::size_t node_ = 0;
};

/// Accumulates gradient contributions for one node's operands. Entry i is
/// null when operand i does not need a gradient.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<double* const> grad_in)>;

/// Append-only record of differentiable operations.
///
/// Nodes are appended as operations execute, so parents always precede their
/// children. A tape is used by one thread at a time; concurrent workers each
/// own a private tape.
class Tape {
 public:
  Tape();

  /// Anonymous leaf: gradients can be requested for it with gradient().
  Tensor watch(const Tensor& value);
  /// Named leaf. Watching the same name twice returns the first leaf so that
  /// repeated uses of a parameter accumulate into one gradient.
  Tensor watch(const std::string& name, const Tensor& value);

  bool is_watched(const std::string& name) const;

  /// Gradient of a scalar loss for every named leaf. Leaves the loss does not
  /// reach get zeros.
  std::map<std::string, Tensor> backward(const Tensor& loss) const;

  /// Gradient of a scalar loss with respect to arbitrary tensors on this tape.
  std::vector<Tensor> gradient(const Tensor& loss, std::span<const Tensor> wrt) const;

  std::size_t size() const;
  std::vector<std::size_t> parents(std::size_t node) const;

 private:
  friend struct TensorAccess;
  std::shared_ptr<detail::TapeData> data_;
};

/// Builds a result tensor and, if any operand is on a tape, records a node.
/// Operands on two different tapes are rejected.
Tensor record(Shape shape, std::vector<double> values,
              std::initializer_list<const Tensor*> operands, BackwardFn backward);

// Elementwise. Binary kinds accept equal shapes or a single-element operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);
Tensor neg(const Tensor& x);
/// Zero gradient everywhere.
Tensor sign(const Tensor& x);
Tensor clamp01(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// log(max(x, 1e-12))
Tensor log_safe(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);

/// Adds a per-feature bias along axis 1 (rank 2: [n,f]; rank 4: [n,f,h,w]).
Tensor bias_add(const Tensor& x, const Tensor& bias);

/// Cross-correlation of x [n,c,h,w] with kernel [f,c,kh,kw]. Stride 1 uses
/// zero "same" padding; larger strides use "valid" windows.
Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride);

/// Integer scale factor `up`/`down` with exactly one of them equal to 1.
struct ResizeFactor {
  std::size_t up = 1;
  std::size_t down = 1;

  static ResizeFactor from_double(double factor);
  double value() const { return static_cast<double>(up) / static_cast<double>(down); }
  bool operator==(const ResizeFactor&) const = default;
};

/// Nearest-neighbour resize of [n,c,h,w]: replication when upscaling,
/// top-left sampling of each block when downscaling.
Tensor resize_nearest(const Tensor& x, ResizeFactor factor);

Tensor reshape(const Tensor& x, Shape shape);

enum class ReduceKind { kSum, kMean };
/// Reduces over the listed axes, dropping them from the shape.
Tensor reduce(ReduceKind kind, const Tensor& x, std::span<const std::size_t> axes);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean over the batch of -log softmax(logits)[label]. logits: [n, C].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int64_t> labels);
/// p is clamped to [1e-7, 1-1e-7]; target is same-shape or single-element.
Tensor binary_cross_entropy(const Tensor& p, const Tensor& target);
Tensor binary_cross_entropy(const Tensor& p, double target);
Tensor mean_squared_error(const Tensor& a, const Tensor& b);
Tensor mean_absolute_error(const Tensor& a, const Tensor& b);

/// Forward identity; contributes nothing to the gradient of any ancestor.
Tensor stop_gradient(const Tensor& x);

}  // namespace opflow
