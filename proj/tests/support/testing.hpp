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

#include <algorithm>
#include <atomic>
#include <unistd.h>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "opflow/random.hpp"
#include "opflow/tensor.hpp"
#include "opflow/trace.hpp"

namespace opflow::testing {

using Fn = std::function<Tensor(std::span<const Tensor>)>;

/// Uniform values in +-[lo, hi], so no entry sits near zero.
inline Tensor away_from_zero(SplitMix64& rng, Shape shape, double lo = 0.1, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

inline Tensor uniform(SplitMix64& rng, Shape shape, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

/// Scalar probe of f: sum(f(x) * w) with fixed random weights w, so every
/// output element contributes to the checked gradient.
inline Fn probe(Fn f, std::uint64_t seed) {
  return [f = std::move(f), seed](std::span<const Tensor> xs) {
    Tensor out = f(xs);
    if (out.numel() == 1) return reshape(out, {});
    SplitMix64 rng(seed);
    return sum(mul(out, uniform(rng, out.shape(), 0.5, 1.5)));
  };
}

/// Largest relative error between the tape gradient of a scalar function and
/// central differences: max|analytic - numeric| / max(max|numeric|, 1e-8),
/// maximized over inputs.
inline double gradient_error(const Fn& f, const std::vector<Tensor>& inputs, double h = 1e-6) {
  Tape tape;
  std::vector<Tensor> watched;
  for (const auto& x : inputs) watched.push_back(tape.watch(x));
  const Tensor loss = f(watched);
  const std::vector<Tensor> analytic = tape.gradient(loss, watched);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> numeric(inputs[k].numel());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<Tensor> xs = inputs;
        std::vector<double> v(inputs[k].data().begin(), inputs[k].data().end());
        v[i] += delta;
        xs[k] = Tensor(inputs[k].shape(), std::move(v));
        return f(xs).item();
      };
      numeric[i] = (eval(h) - eval(-h)) / (2.0 * h);
    }
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff = std::max(diff, std::abs(analytic[k][i] - numeric[i]));
      scale = std::max(scale, std::abs(numeric[i]));
    }
    worst = std::max(worst, diff / std::max(scale, 1e-8));
  }
  return worst;
}

struct GradientCase {
  std::string name;
  Fn f;
  std::function<std::vector<Tensor>(SplitMix64&)> inputs;
};

/// One case per differentiable tensor op, with inputs kept away from kinks.
inline std::vector<GradientCase> gradient_cases() {
  using V = std::vector<Tensor>;
  using S = std::span<const Tensor>;
  auto two = [](Shape a, Shape b) {
    return [a, b](SplitMix64& r) { return V{away_from_zero(r, a), away_from_zero(r, b)}; };
  };
  auto one = [](Shape a) { return [a](SplitMix64& r) { return V{away_from_zero(r, a)}; }; };
  std::vector<GradientCase> c;
  c.push_back({"add", [](S x) { return add(x[0], x[1]); }, two({3, 4}, {3, 4})});
  c.push_back({"add_broadcast", [](S x) { return add(x[0], x[1]); }, two({3, 4}, {1})});
  c.push_back({"sub", [](S x) { return sub(x[0], x[1]); }, two({2, 5}, {2, 5})});
  c.push_back({"sub_broadcast", [](S x) { return sub(x[1], x[0]); }, two({2, 5}, {})});
  c.push_back({"mul", [](S x) { return mul(x[0], x[1]); }, two({4, 3}, {4, 3})});
  c.push_back({"mul_broadcast", [](S x) { return mul(x[0], x[1]); }, two({4, 3}, {1})});
  c.push_back({"add_const", [](S x) { return add(x[0], 0.7); }, one({5})});
  c.push_back({"mul_const", [](S x) { return mul(x[0], -1.3); }, one({5})});
  c.push_back({"neg", [](S x) { return neg(x[0]); }, one({2, 3})});
  c.push_back({"sign", [](S x) { return mul(sign(x[0]), x[0]); }, one({6})});
  c.push_back({"clamp01", [](S x) { return clamp01(x[0]); },
               [](SplitMix64& r) {
                 std::vector<double> v(8);
                 for (auto& e : v) {
                   const double band = static_cast<double>(r.below(3));  // below, inside, above
                   e = band == 0 ? r.uniform(-0.5, -0.05) : band == 1 ? r.uniform(0.05, 0.95) : r.uniform(1.05, 1.5);
                 }
                 return V{Tensor({8}, std::move(v))};
               }});
  c.push_back({"relu", [](S x) { return relu(x[0]); }, one({3, 3})});
  c.push_back({"leaky_relu", [](S x) { return leaky_relu(x[0]); }, one({3, 3})});
  c.push_back({"sigmoid", [](S x) { return sigmoid(x[0]); }, one({3, 3})});
  c.push_back({"tanh", [](S x) { return opflow::tanh(x[0]); }, one({3, 3})});
  c.push_back({"log_safe", [](S x) { return log_safe(x[0]); },
               [](SplitMix64& r) { return V{uniform(r, {6}, 0.2, 2.0)}; }});
  c.push_back({"matmul", [](S x) { return matmul(x[0], x[1]); }, two({3, 4}, {4, 2})});
  c.push_back({"bias_add_rank2", [](S x) { return bias_add(x[0], x[1]); }, two({3, 4}, {4})});
  c.push_back({"bias_add_rank4", [](S x) { return bias_add(x[0], x[1]); }, two({2, 3, 2, 2}, {3})});
  c.push_back({"conv2d_same", [](S x) { return conv2d(x[0], x[1], 1); }, two({2, 2, 5, 4}, {3, 2, 3, 3})});
  c.push_back({"conv2d_stride2", [](S x) { return conv2d(x[0], x[1], 2); }, two({1, 2, 6, 6}, {2, 2, 2, 2})});
  c.push_back({"resize_up", [](S x) { return resize_nearest(x[0], {2, 1}); }, one({1, 2, 3, 3})});
  c.push_back({"resize_down", [](S x) { return resize_nearest(x[0], {1, 2}); }, one({2, 1, 4, 6})});
  c.push_back({"reshape", [](S x) { return reshape(x[0], {6, 2}); }, one({3, 4})});
  c.push_back({"reduce_sum_axis", [](S x) {
                 const std::size_t ax[] = {1};
                 return reduce(ReduceKind::kSum, x[0], ax);
               },
               one({3, 4, 2})});
  c.push_back({"reduce_mean_axes", [](S x) {
                 const std::size_t ax[] = {0, 2};
                 return reduce(ReduceKind::kMean, x[0], ax);
               },
               one({3, 4, 2})});
  c.push_back({"sum", [](S x) { return sum(x[0]); }, one({4, 5})});
  c.push_back({"mean", [](S x) { return mean(x[0]); }, one({4, 5})});
  c.push_back({"softmax_cross_entropy", [](S x) {
                 const std::int64_t labels[] = {0, 3, 1, 2, 3};
                 return softmax_cross_entropy(x[0], labels);
               },
               [](SplitMix64& r) { return V{uniform(r, {5, 4}, -2.0, 2.0)}; }});
  c.push_back({"binary_cross_entropy", [](S x) { return binary_cross_entropy(x[0], x[1]); },
               [](SplitMix64& r) { return V{uniform(r, {6, 1}, 0.05, 0.95), uniform(r, {6, 1}, 0.0, 1.0)}; }});
  c.push_back({"binary_cross_entropy_const", [](S x) { return binary_cross_entropy(x[0], 1.0); },
               [](SplitMix64& r) { return V{uniform(r, {6, 1}, 0.05, 0.95)}; }});
  c.push_back({"mean_squared_error", [](S x) { return mean_squared_error(x[0], x[1]); }, two({4, 3}, {4, 3})});
  c.push_back({"mean_absolute_error", [](S x) { return mean_absolute_error(x[0], x[1]); },
               [](SplitMix64& r) {
                 Tensor a = away_from_zero(r, {4, 3});
                 std::vector<double> b(a.numel());
                 for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + (r.below(2) ? 1 : -1) * r.uniform(0.1, 1.0);
                 return V{a, Tensor({4, 3}, std::move(b))};
               }});
  for (auto& k : c) k.f = probe(std::move(k.f), 0x5eedULL + k.name.size());
  return c;
}

/// Appends one letter per event: B/E for begin/end, Eb/Ee for epoch
/// brackets, b for a batch (counted at batch end).
class EventRecorder : public Trace {
 public:
  explicit EventRecorder(std::string* log) : Trace("EventRecorder"), log_(log) {}
  void on_begin(TraceContext&) override { *log_ += "B"; }
  void on_epoch_begin(TraceContext&) override { *log_ += " (Eb "; }
  void on_batch_begin(TraceContext&) override { ++open_; }
  void on_batch_end(TraceContext&) override {
    if (open_-- != 1) throw Error("batch events out of order");
    *log_ += "b";
  }
  void on_epoch_end(TraceContext&) override { *log_ += " Ee)"; }
  void on_end(TraceContext&) override { *log_ += " E"; }

 private:
  std::string* log_;
  int open_ = 0;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("opflow_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace opflow::testing
