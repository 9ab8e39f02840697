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
#include <fstream>
#include <thread>

#include "doctest.h"
#include "opflow/error.hpp"
#include "opflow/optimizer.hpp"
#include "opflow/parameter.hpp"
#include "testing.hpp"

using namespace opflow;
using opflow::testing::TempDir;

TEST_SUITE("tensor") {

TEST_CASE("construction validates rank, extents and size") {
  CHECK_NOTHROW(Tensor({2, 3}, std::vector<double>(6, 1.0)));
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 0}, {}), ShapeError);
  CHECK_THROWS_AS(Tensor({1, 1, 1, 1, 1}, {1.0}), ShapeError);
  CHECK(Tensor().rank() == 0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(Tensor::zeros({2}).item(), ShapeError);
}

TEST_CASE("elementwise ops and single-element broadcast") {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 2}, {10, 20, 30, 40});
  CHECK(add(a, b).bit_equal(Tensor({2, 2}, {11, 22, 33, 44})));
  CHECK(sub(b, a).bit_equal(Tensor({2, 2}, {9, 18, 27, 36})));
  CHECK(mul(a, Tensor::scalar(2)).bit_equal(Tensor({2, 2}, {2, 4, 6, 8})));
  CHECK(mul(Tensor({1}, {3.0}), a).bit_equal(Tensor({2, 2}, {3, 6, 9, 12})));
  CHECK_THROWS_AS(add(a, Tensor({4}, {1, 2, 3, 4})), ShapeError);
  CHECK_THROWS_AS(add(a, Tensor({2}, {1, 2})), ShapeError);
}

TEST_CASE("unary ops") {
  const Tensor x({4}, {-2.0, -0.5, 0.5, 2.0});
  CHECK(relu(x).bit_equal(Tensor({4}, {0, 0, 0.5, 2.0})));
  CHECK(leaky_relu(x)[0] == doctest::Approx(-0.4));
  CHECK(clamp01(x).bit_equal(Tensor({4}, {0, 0, 0.5, 1.0})));
  CHECK(sign(x).bit_equal(Tensor({4}, {-1, -1, 1, 1})));
  CHECK(sign(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(log_safe(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(1e-12)));
}

TEST_CASE("matmul, conv2d and resize shapes") {
  CHECK(matmul(Tensor::zeros({3, 4}), Tensor::zeros({4, 5})).shape() == Shape{3, 5});
  CHECK_THROWS_AS(matmul(Tensor::zeros({3, 4}), Tensor::zeros({3, 5})), ShapeError);
  CHECK(conv2d(Tensor::zeros({2, 3, 8, 8}), Tensor::zeros({4, 3, 3, 3}), 1).shape() == Shape{2, 4, 8, 8});
  CHECK(conv2d(Tensor::zeros({2, 3, 8, 8}), Tensor::zeros({4, 3, 2, 2}), 2).shape() == Shape{2, 4, 4, 4});
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 3, 8, 8}), Tensor::zeros({4, 2, 3, 3}), 1), ShapeError);
  CHECK(resize_nearest(Tensor::zeros({1, 1, 28, 28}), ResizeFactor::from_double(0.25)).shape() ==
        Shape{1, 1, 7, 7});
  CHECK(resize_nearest(Tensor::zeros({1, 1, 7, 7}), ResizeFactor::from_double(2)).shape() == Shape{1, 1, 14, 14});
  CHECK_THROWS_AS(resize_nearest(Tensor::zeros({1, 1, 6, 6}), ResizeFactor::from_double(0.25)), ShapeError);
  CHECK_THROWS(ResizeFactor::from_double(0.3));
}

TEST_CASE("conv2d matches a direct 1x1 computation") {
  const Tensor x({1, 2, 1, 2}, {1, 2, 3, 4});
  const Tensor k({1, 2, 1, 1}, {10, 100});
  CHECK(conv2d(x, k, 1).bit_equal(Tensor({1, 1, 1, 2}, {310, 420})));
}

TEST_CASE("resize downsampling takes the top-left sample of each block") {
  const Tensor x({1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(resize_nearest(x, {1, 2}).bit_equal(Tensor({1, 1, 1, 2}, {1, 3})));
}

TEST_CASE("reductions") {
  const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  const std::size_t ax0[] = {0};
  const std::size_t ax1[] = {1};
  CHECK(reduce(ReduceKind::kSum, x, ax0).bit_equal(Tensor({3}, {5, 7, 9})));
  CHECK(reduce(ReduceKind::kMean, x, ax1).bit_equal(Tensor({2}, {2, 5})));
  CHECK(sum(x).item() == 21);
  CHECK(mean(x).item() == 3.5);
  const std::size_t bad[] = {2};
  const std::size_t dup[] = {0, 0};
  CHECK_THROWS_AS(reduce(ReduceKind::kSum, x, bad), ShapeError);
  CHECK_THROWS_AS(reduce(ReduceKind::kSum, x, dup), ShapeError);
}

TEST_CASE("losses") {
  const Tensor logits({1, 2}, {0.0, 0.0});
  const std::int64_t label[] = {1};
  CHECK(softmax_cross_entropy(logits, label).item() == doctest::Approx(std::log(2.0)));
  const std::int64_t bad[] = {2};
  CHECK_THROWS(softmax_cross_entropy(logits, bad));
  CHECK(binary_cross_entropy(Tensor({2}, {0.5, 0.5}), 1.0).item() == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(binary_cross_entropy(Tensor({1}, {0.0}), 1.0).item()));
  CHECK(mean_squared_error(Tensor({2}, {1, 3}), Tensor({2}, {0, 0})).item() == 5.0);
  CHECK(mean_absolute_error(Tensor({2}, {1, -3}), Tensor({2}, {0, 0})).item() == 2.0);
}

TEST_CASE("every op passes central finite differences on 20 random instances") {
  for (const auto& c : testing::gradient_cases()) {
    SplitMix64 rng(splitmix64(c.name.size() * 7919));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) worst = std::max(worst, testing::gradient_error(c.f, c.inputs(rng)));
    INFO(c.name << " worst relative error " << worst);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("tape: named leaves are shared, unreached leaves get zeros") {
  Tape tape;
  const Tensor w1 = tape.watch("w", Tensor({2}, {1.0, 2.0}));
  const Tensor w2 = tape.watch("w", Tensor({2}, {1.0, 2.0}));
  const Tensor u = tape.watch("unused", Tensor({3}, {0, 0, 0}));
  CHECK(w1.tape_id() == w2.tape_id());
  CHECK(tape.is_watched("w"));
  const Tensor loss = sum(add(mul(w1, w1), w2));
  const auto g = tape.backward(loss);
  CHECK(g.at("w").bit_equal(Tensor({2}, {3.0, 5.0})));
  CHECK(g.at("unused").bit_equal(Tensor::zeros({3})));
  CHECK_THROWS_AS(tape.backward(w1), ShapeError);
  (void)u;
}

TEST_CASE("tape: operands from two tapes are rejected") {
  Tape t1, t2;
  const Tensor a = t1.watch(Tensor::scalar(1.0));
  const Tensor b = t2.watch(Tensor::scalar(2.0));
  CHECK_THROWS(add(a, b));
  CHECK_FALSE(add(Tensor::scalar(1), Tensor::scalar(2)).on_tape());
}

TEST_CASE("stop_gradient blocks the path but keeps the value") {
  Tape tape;
  const Tensor x = tape.watch("x", Tensor({2}, {1.5, -2.0}));
  const Tensor y = stop_gradient(mul(x, 3.0));
  CHECK(y.bit_equal(Tensor({2}, {4.5, -6.0})));
  const Tensor loss = sum(add(mul(y, x), x));
  // d/dx (y*x + x) with y constant = y + 1
  CHECK(tape.backward(loss).at("x").bit_equal(Tensor({2}, {5.5, -5.0})));
}

TEST_CASE("tensors are readable from several threads") {
  const Tensor shared = Tensor::filled({1000}, 2.0);
  std::vector<double> sums(4);
  {
    std::vector<std::jthread> th;
    for (int i = 0; i < 4; ++i) th.emplace_back([&, i] { sums[i] = sum(mul(shared, shared)).item(); });
  }
  for (double s : sums) CHECK(s == 4000.0);
}

}  // TEST_SUITE

TEST_SUITE("optimizer") {

TEST_CASE("sgd step") {
  std::vector<Parameter> p{{"w", Tensor({2}, {1.0, 2.0})}};
  Optimizer opt(OptimizerSpec::sgd(0.5));
  opt.step(p, {{"w", Tensor({2}, {2.0, -4.0})}});
  CHECK(p[0].value.bit_equal(Tensor({2}, {0.0, 4.0})));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam matches a hand-computed first and second step") {
  std::vector<Parameter> p{{"w", Tensor::scalar(1.0)}};
  OptimizerSpec spec = OptimizerSpec::adam(0.1);
  Optimizer opt(spec);
  double m = 0, v = 0, w = 1.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? 0.5 : -0.25;
    opt.step(p, {{"w", Tensor::scalar(g)}});
    m = spec.beta1 * m + (1 - spec.beta1) * g;
    v = spec.beta2 * v + (1 - spec.beta2) * g * g;
    const double mh = m / (1 - std::pow(spec.beta1, t));
    const double vh = v / (1 - std::pow(spec.beta2, t));
    w -= spec.lr * mh / (std::sqrt(vh) + spec.epsilon);
    CHECK(p[0].value.item() == doctest::Approx(w).epsilon(1e-14));
  }
}

TEST_CASE("missing or misshaped gradients are rejected") {
  std::vector<Parameter> p{{"w", Tensor({2}, {1.0, 2.0})}};
  Optimizer opt(OptimizerSpec::sgd(0.1));
  CHECK_THROWS_AS(opt.step(p, {}), KeyError);
  CHECK_THROWS_AS(opt.step(p, {{"w", Tensor::zeros({3})}}), ShapeError);
}

}  // TEST_SUITE

TEST_SUITE("checkpoint") {

TEST_CASE("round trip is bit-exact") {
  TempDir dir("ckpt");
  SplitMix64 rng(3);
  std::vector<Parameter> p{{"m/0_dense/kernel", testing::uniform(rng, {3, 2}, -1, 1)},
                           {"m/0_dense/bias", Tensor({2}, {1e-300, -0.1})}};
  save_checkpoint(dir / "a.ckpt", p);
  const auto q = load_checkpoint(dir / "a.ckpt");
  REQUIRE(q.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(q[i].name == p[i].name);
    CHECK(q[i].value.bit_equal(p[i].value));
  }
}

TEST_CASE("bad files are rejected") {
  TempDir dir("ckpt_bad");
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt"));
  {
    std::ofstream(dir / "x.ckpt") << "NOT-A-CKPT\n";
  }
  CHECK_THROWS(load_checkpoint(dir / "x.ckpt"));
  CHECK_THROWS(save_checkpoint(dir / "y.ckpt", {{"has space", Tensor::scalar(1)}}));
}

}  // TEST_SUITE

TEST_SUITE("random") {

TEST_CASE("splitmix64 reference values and seed mixing") {
  // First outputs of the reference generator seeded with 0.
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(mix_seed(5, 1) != mix_seed(5, 2));
  CHECK(mix_seed(5, 1, 1) != mix_seed(5, 1));
}

TEST_CASE("below is in range and uniform is in [0,1)") {
  SplitMix64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.below(7) < 7);
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

}  // TEST_SUITE
