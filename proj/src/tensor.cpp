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
#include <numeric>

#include "opflow/error.hpp"
#include "opflow/tensor.hpp"

namespace opflow {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr double kProbFloor = 1e-7;

std::vector<double> copy_values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  // The backward rule keeps its own handle on the input values.
  Tensor saved = x.detached();
  return record(x.shape(), std::move(out), {&x},
                [saved, deriv](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * deriv(saved[i]);
                });
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool a_single = a.numel() == 1;
  const bool b_single = b.numel() == 1;
  if (!same && !a_single && !b_single) {
    throw ShapeError("elementwise shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  Shape shape;
  if (same) {
    shape = a.shape();
  } else if (a_single && !b_single) {
    shape = b.shape();
  } else if (b_single && !a_single) {
    shape = a.shape();
  } else {
    shape = a.rank() >= b.rank() ? a.shape() : b.shape();
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t sa = a.numel() == n ? 1 : 0;  // stride 0 broadcasts the single value
  const std::size_t sb = b.numel() == n ? 1 : 0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i * sa];
    const double y = b[i * sb];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = x + y; break;
      case BinaryKind::kSub: out[i] = x - y; break;
      case BinaryKind::kMul: out[i] = x * y; break;
    }
  }
  Tensor av = a.detached();
  Tensor bv = b.detached();
  return record(std::move(shape), std::move(out), {&a, &b},
                [kind, av, bv, sa, sb](std::span<const double> g, std::span<double* const> in) {
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    double da = g[i];
                    double db = g[i];
                    if (kind == BinaryKind::kSub) db = -g[i];
                    if (kind == BinaryKind::kMul) {
                      da = g[i] * bv[i * sb];
                      db = g[i] * av[i * sa];
                    }
                    if (in[0]) in[0][i * sa] += da;
                    if (in[1]) in[1][i * sb] += db;
                  }
                });
}

double sigmoid_value(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kMul, a, b); }
Tensor add(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor mul(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }

Tensor neg(const Tensor& x) {
  return unary(x, [](double v) { return -v; }, [](double) { return -1.0; });
}

Tensor sign(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); },
      [](double) { return 0.0; });
}

Tensor clamp01(const Tensor& x) {
  return unary(
      x, [](double v) { return std::clamp(v, 0.0, 1.0); },
      [](double v) { return v > 0.0 && v < 1.0 ? 1.0 : 0.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v) { return v > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v) { return v > 0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, sigmoid_value, [](double v) {
    const double s = sigmoid_value(v);
    return s * (1.0 - s);
  });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
}

Tensor log_safe(const Tensor& x) {
  return unary(
      x, [](double v) { return std::log(std::max(v, kLogFloor)); },
      [](double v) { return v > kLogFloor ? 1.0 / v : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul needs rank-2 operands, got " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k) {
    throw ShapeError("matmul inner dimension mismatch: " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  Tensor av = a.detached();
  Tensor bv = b.detached();
  return record({m, n}, std::move(out), {&a, &b},
                [av, bv, m, k, n](std::span<const double> g, std::span<double* const> in) {
                  const auto A = av.data();
                  const auto B = bv.data();
                  if (in[0]) {  // dA = dC * B^T
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
                        in[0][i * k + p] += acc;
                      }
                    }
                  }
                  if (in[1]) {  // dB = A^T * dC
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A[i * k + p];
                        if (aip == 0.0) continue;
                        double* drow = in[1] + p * n;
                        for (std::size_t j = 0; j < n; ++j) drow[j] += aip * g[i * n + j];
                      }
                    }
                  }
                });
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
  if ((x.rank() != 2 && x.rank() != 4) || bias.rank() != 1 || bias.extent(0) != x.extent(1)) {
    throw ShapeError("bias_add: bias " + shape_to_string(bias.shape()) +
                     " does not match features of " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.extent(0), f = x.extent(1);
  const std::size_t inner = x.numel() / (n * f);
  std::vector<double> out = copy_values(x);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < f; ++c)
      for (std::size_t s = 0; s < inner; ++s) out[(i * f + c) * inner + s] += bias[c];
  return record(x.shape(), std::move(out), {&x, &bias},
                [n, f, inner](std::span<const double> g, std::span<double* const> in) {
                  if (in[0]) {
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                  }
                  if (in[1]) {
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t c = 0; c < f; ++c)
                        for (std::size_t s = 0; s < inner; ++s)
                          in[1][c] += g[(i * f + c) * inner + s];
                  }
                });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride) {
  if (x.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("conv2d needs x [n,c,h,w] and kernel [f,c,kh,kw], got " +
                     shape_to_string(x.shape()) + " and " + shape_to_string(kernel.shape()));
  }
  if (stride == 0) throw ShapeError("conv2d stride must be positive");
  const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  const std::size_t f = kernel.extent(0), kh = kernel.extent(2), kw = kernel.extent(3);
  if (kernel.extent(1) != c) {
    throw ShapeError("conv2d channel mismatch: x " + shape_to_string(x.shape()) + ", kernel " +
                     shape_to_string(kernel.shape()));
  }
  if (kh > h || kw > w) {
    throw ShapeError("conv2d kernel " + shape_to_string(kernel.shape()) +
                     " larger than input " + shape_to_string(x.shape()));
  }
  const bool same = stride == 1;
  const std::ptrdiff_t pad_t = same ? static_cast<std::ptrdiff_t>((kh - 1) / 2) : 0;
  const std::ptrdiff_t pad_l = same ? static_cast<std::ptrdiff_t>((kw - 1) / 2) : 0;
  const std::size_t oh = same ? h : (h - kh) / stride + 1;
  const std::size_t ow = same ? w : (w - kw) / stride + 1;

  // Visits every (output, input, kernel) index triple with the input in range.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t o = 0; o < f; ++o)
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j) {
            const std::size_t out_idx = ((b * f + o) * oh + i) * ow + j;
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t a = 0; a < kh; ++a) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * stride + a) - pad_t;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t q = 0; q < kw; ++q) {
                  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j * stride + q) - pad_l;
                  if (s < 0 || s >= static_cast<std::ptrdiff_t>(w)) continue;
                  const std::size_t x_idx =
                      ((b * c + ch) * h + static_cast<std::size_t>(r)) * w + static_cast<std::size_t>(s);
                  const std::size_t k_idx = ((o * c + ch) * kh + a) * kw + q;
                  fn(out_idx, x_idx, k_idx);
                }
              }
          }
  };

  std::vector<double> out(n * f * oh * ow, 0.0);
  const auto X = x.data();
  const auto K = kernel.data();
  for_each_tap([&](std::size_t o, std::size_t xi, std::size_t ki) { out[o] += X[xi] * K[ki]; });

  Tensor xv = x.detached();
  Tensor kv = kernel.detached();
  return record({n, f, oh, ow}, std::move(out), {&x, &kernel},
                [xv, kv, for_each_tap](std::span<const double> g, std::span<double* const> in) {
                  const auto X = xv.data();
                  const auto K = kv.data();
                  for_each_tap([&](std::size_t o, std::size_t xi, std::size_t ki) {
                    if (in[0]) in[0][xi] += g[o] * K[ki];
                    if (in[1]) in[1][ki] += g[o] * X[xi];
                  });
                });
}

ResizeFactor ResizeFactor::from_double(double factor) {
  if (!(factor > 0.0)) throw ShapeError("resize factor must be positive");
  if (factor >= 1.0) {
    const double r = std::round(factor);
    if (std::abs(r - factor) > 1e-9) {
      throw ShapeError("resize factor " + std::to_string(factor) + " is not an integer");
    }
    return {static_cast<std::size_t>(r), 1};
  }
  const double inv = 1.0 / factor;
  const double r = std::round(inv);
  if (std::abs(r - inv) > 1e-9) {
    throw ShapeError("resize factor " + std::to_string(factor) + " is not a reciprocal integer");
  }
  return {1, static_cast<std::size_t>(r)};
}

Tensor resize_nearest(const Tensor& x, ResizeFactor factor) {
  if (x.rank() != 4) {
    throw ShapeError("resize_nearest needs [n,c,h,w], got " + shape_to_string(x.shape()));
  }
  if (factor.up == 0 || factor.down == 0 || (factor.up != 1 && factor.down != 1)) {
    throw ShapeError("resize factor must be an integer or its reciprocal");
  }
  const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  if (h % factor.down != 0 || w % factor.down != 0) {
    throw ShapeError("cannot downscale " + shape_to_string(x.shape()) + " by 1/" +
                     std::to_string(factor.down) + ": extents not divisible");
  }
  const std::size_t oh = h * factor.up / factor.down;
  const std::size_t ow = w * factor.up / factor.down;
  // Each output pixel reads exactly one source pixel.
  std::vector<std::size_t> source(n * c * oh * ow);
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t si = i * factor.down / factor.up;
        const std::size_t sj = j * factor.down / factor.up;
        source[(p * oh + i) * ow + j] = (p * h + si) * w + sj;
      }
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[source[i]];
  auto src = std::make_shared<const std::vector<std::size_t>>(std::move(source));
  return record({n, c, oh, ow}, std::move(out), {&x},
                [src](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][(*src)[i]] += g[i];
                });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("cannot reshape " + shape_to_string(x.shape()) + " to " +
                     shape_to_string(shape));
  }
  return record(std::move(shape), copy_values(x), {&x},
                [](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                });
}

Tensor reduce(ReduceKind kind, const Tensor& x, std::span<const std::size_t> axes) {
  std::vector<bool> reduced(x.rank(), false);
  for (auto a : axes) {
    if (a >= x.rank()) {
      throw ShapeError("reduce axis " + std::to_string(a) + " out of range for " +
                       shape_to_string(x.shape()));
    }
    if (reduced[a]) throw ShapeError("reduce axis " + std::to_string(a) + " repeated");
    reduced[a] = true;
  }
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t d = 0; d < x.rank(); ++d) {
    if (reduced[d]) {
      count *= x.extent(d);
    } else {
      out_shape.push_back(x.extent(d));
    }
  }
  // Map each input element to its output slot.
  std::vector<std::size_t> target(x.numel());
  std::vector<std::size_t> idx(x.rank(), 0);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    std::size_t t = 0;
    for (std::size_t d = 0; d < x.rank(); ++d) {
      if (!reduced[d]) t = t * x.extent(d) + idx[d];
    }
    target[i] = t;
    for (std::size_t d = x.rank(); d-- > 0;) {
      if (++idx[d] < x.extent(d)) break;
      idx[d] = 0;
    }
  }
  const double scale = kind == ReduceKind::kMean ? 1.0 / static_cast<double>(count) : 1.0;
  std::vector<double> out(shape_numel(out_shape), 0.0);
  for (std::size_t i = 0; i < x.numel(); ++i) out[target[i]] += x[i];
  if (kind == ReduceKind::kMean) {
    for (auto& v : out) v *= scale;
  }
  auto tgt = std::make_shared<const std::vector<std::size_t>>(std::move(target));
  return record(std::move(out_shape), std::move(out), {&x},
                [tgt, scale](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < tgt->size(); ++i) in[0][i] += g[(*tgt)[i]] * scale;
                });
}

namespace {
std::vector<std::size_t> all_axes(const Tensor& x) {
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}
}  // namespace

Tensor sum(const Tensor& x) { return reduce(ReduceKind::kSum, x, all_axes(x)); }
Tensor mean(const Tensor& x) { return reduce(ReduceKind::kMean, x, all_axes(x)); }

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int64_t> labels) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax_cross_entropy needs logits [n,C], got " +
                     shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.extent(0), classes = logits.extent(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  std::vector<double> probs(n * classes);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data().data() + i * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    for (std::size_t c = 0; c < classes; ++c) probs[i * classes + c] = std::exp(row[c] - mx) / z;
    loss += std::log(z) + mx - row[labels[i]];
  }
  loss /= static_cast<double>(n);
  std::vector<std::int64_t> ys(labels.begin(), labels.end());
  return record({}, {loss}, {&logits},
                [probs = std::move(probs), ys = std::move(ys), n, classes](
                    std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  const double s = g[0] / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t c = 0; c < classes; ++c) {
                      const double onehot = static_cast<std::int64_t>(c) == ys[i] ? 1.0 : 0.0;
                      in[0][i * classes + c] += s * (probs[i * classes + c] - onehot);
                    }
                });
}

Tensor binary_cross_entropy(const Tensor& p, const Tensor& target) {
  if (p.shape() != target.shape() && target.numel() != 1) {
    throw ShapeError("binary_cross_entropy shape mismatch: " + shape_to_string(p.shape()) +
                     " vs " + shape_to_string(target.shape()));
  }
  const std::size_t n = p.numel();
  const std::size_t st = target.numel() == n ? 1 : 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(p[i], kProbFloor, 1.0 - kProbFloor);
    const double t = target[i * st];
    loss += -t * std::log(pc) - (1.0 - t) * std::log(1.0 - pc);
  }
  loss /= static_cast<double>(n);
  Tensor pv = p.detached();
  Tensor tv = target.detached();
  return record({}, {loss}, {&p, &target},
                [pv, tv, n, st](std::span<const double> g, std::span<double* const> in) {
                  const double s = g[0] / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i) {
                    const bool inside = pv[i] > kProbFloor && pv[i] < 1.0 - kProbFloor;
                    const double pc = std::clamp(pv[i], kProbFloor, 1.0 - kProbFloor);
                    const double t = tv[i * st];
                    if (in[0] && inside) in[0][i] += s * (-t / pc + (1.0 - t) / (1.0 - pc));
                    if (in[1]) in[1][i * st] += s * (std::log(1.0 - pc) - std::log(pc));
                  }
                });
}

Tensor binary_cross_entropy(const Tensor& p, double target) {
  return binary_cross_entropy(p, Tensor::scalar(target));
}

Tensor mean_squared_error(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mean_squared_error shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  const Tensor d = sub(a, b);
  return mean(mul(d, d));
}

Tensor mean_absolute_error(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mean_absolute_error shape mismatch: " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  const std::size_t n = a.numel();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += std::abs(a[i] - b[i]);
  loss /= static_cast<double>(n);
  Tensor av = a.detached();
  Tensor bv = b.detached();
  return record({}, {loss}, {&a, &b},
                [av, bv, n](std::span<const double> g, std::span<double* const> in) {
                  const double s = g[0] / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i) {
                    const double d = av[i] - bv[i];
                    const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                    if (in[0]) in[0][i] += s * sg;
                    if (in[1]) in[1][i] -= s * sg;
                  }
                });
}

}  // namespace opflow
