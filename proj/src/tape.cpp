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

#include <cstring>
#include <limits>
#include <sstream>

#include "opflow/error.hpp"
#include "opflow/tensor.hpp"

namespace opflow {

namespace detail {

inline constexpr std::size_t kOffTape = std::numeric_limits<std::size_t>::max();

struct Node {
  Shape shape;
  std::vector<std::size_t> parents;  // kOffTape for constant operands
  BackwardFn backward;               // empty for leaves
};

struct TapeData {
  std::vector<Node> nodes;
  std::map<std::string, std::size_t> named;
};

}  // namespace detail

struct TensorAccess {
  static Tensor make(Shape shape, std::vector<double> values,
                     std::shared_ptr<detail::TapeData> tape, std::size_t node) {
    Tensor t(std::move(shape), std::move(values));
    t.tape_ = std::move(tape);
    t.node_ = node;
    return t;
  }
  static const std::shared_ptr<detail::TapeData>& tape(const Tensor& t) { return t.tape_; }
  static const std::shared_ptr<const std::vector<double>>& storage(const Tensor& t) {
    return t.data_;
  }
};

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (shape_.size() > 4) {
    throw ShapeError("tensor rank " + std::to_string(shape_.size()) + " exceeds 4");
  }
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be >= 1, got " + shape_to_string(shape_));
  }
  if (shape_numel(shape_) != data.size()) {
    throw ShapeError("shape " + shape_to_string(shape_) + " needs " +
                     std::to_string(shape_numel(shape_)) + " values, got " +
                     std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " + shape_to_string(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

bool Tensor::bit_equal(const Tensor& other) const {
  return shape_ == other.shape_ && data_->size() == other.data_->size() &&
         std::memcmp(data_->data(), other.data_->data(), data_->size() * sizeof(double)) == 0;
}

Tape::Tape() : data_(std::make_shared<detail::TapeData>()) {}

Tensor Tape::watch(const Tensor& value) {
  data_->nodes.push_back({value.shape(), {}, {}});
  Tensor leaf = value.detached();
  leaf.tape_ = data_;
  leaf.node_ = data_->nodes.size() - 1;
  return leaf;
}

Tensor Tape::watch(const std::string& name, const Tensor& value) {
  if (auto it = data_->named.find(name); it != data_->named.end()) {
    Tensor leaf = value.detached();
    leaf.tape_ = data_;
    leaf.node_ = it->second;
    return leaf;
  }
  Tensor leaf = watch(value);
  data_->named.emplace(name, leaf.tape_id());
  return leaf;
}

bool Tape::is_watched(const std::string& name) const { return data_->named.contains(name); }

std::size_t Tape::size() const { return data_->nodes.size(); }

std::vector<std::size_t> Tape::parents(std::size_t node) const {
  std::vector<std::size_t> out;
  for (auto p : data_->nodes.at(node).parents) {
    if (p != detail::kOffTape) out.push_back(p);
  }
  return out;
}

namespace {

std::vector<std::vector<double>> run_backward(const detail::TapeData& tape, const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  const std::size_t root = loss.tape_id();
  std::vector<std::vector<double>> grads(root + 1);
  grads[root].assign(1, 1.0);
  std::vector<double*> slots;
  for (std::size_t i = root + 1; i-- > 0;) {
    const detail::Node& node = tape.nodes[i];
    if (grads[i].empty() || !node.backward) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t j = 0; j < node.parents.size(); ++j) {
      const std::size_t p = node.parents[j];
      if (p == detail::kOffTape) continue;
      if (grads[p].empty()) grads[p].assign(shape_numel(tape.nodes[p].shape), 0.0);
      slots[j] = grads[p].data();
    }
    node.backward(grads[i], slots);
  }
  return grads;
}

void require_on(const std::shared_ptr<detail::TapeData>& tape, const Tensor& t, const char* what) {
  if (TensorAccess::tape(t) != tape) {
    throw Error(std::string(what) + " is not recorded on this tape");
  }
}

}  // namespace

std::map<std::string, Tensor> Tape::backward(const Tensor& loss) const {
  require_on(data_, loss, "loss");
  auto grads = run_backward(*data_, loss);
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : data_->named) {
    const Shape& shape = data_->nodes[id].shape;
    if (id < grads.size() && !grads[id].empty()) {
      out.emplace(name, Tensor(shape, std::move(grads[id])));
    } else {
      out.emplace(name, Tensor::zeros(shape));
    }
  }
  return out;
}

std::vector<Tensor> Tape::gradient(const Tensor& loss, std::span<const Tensor> wrt) const {
  require_on(data_, loss, "loss");
  for (const auto& t : wrt) require_on(data_, t, "gradient target");
  auto grads = run_backward(*data_, loss);
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const auto& t : wrt) {
    const std::size_t id = t.tape_id();
    if (id < grads.size() && !grads[id].empty()) {
      out.emplace_back(t.shape(), grads[id]);
    } else {
      out.push_back(Tensor::zeros(t.shape()));
    }
  }
  return out;
}

Tensor record(Shape shape, std::vector<double> values,
              std::initializer_list<const Tensor*> operands, BackwardFn backward) {
  std::shared_ptr<detail::TapeData> tape;
  for (const Tensor* t : operands) {
    const auto& other = TensorAccess::tape(*t);
    if (!other) continue;
    if (tape && tape != other) throw Error("operands are recorded on different tapes");
    tape = other;
  }
  if (!tape) return Tensor(std::move(shape), std::move(values));
  detail::Node node;
  node.shape = shape;
  node.backward = std::move(backward);
  for (const Tensor* t : operands) {
    node.parents.push_back(TensorAccess::tape(*t) ? t->tape_id() : detail::kOffTape);
  }
  tape->nodes.push_back(std::move(node));
  const std::size_t id = tape->nodes.size() - 1;
  return TensorAccess::make(std::move(shape), std::move(values), std::move(tape), id);
}

Tensor stop_gradient(const Tensor& x) {
  const auto& tape = TensorAccess::tape(x);
  if (!tape) return x;
  // A fresh leaf on the same tape: later ops stay recorded, but no gradient
  // can flow back past this point.
  tape->nodes.push_back({x.shape(), {}, {}});
  Tensor out = x.detached();
  return TensorAccess::make(out.shape(), {out.data().begin(), out.data().end()}, tape,
                            tape->nodes.size() - 1);
}

}  // namespace opflow
