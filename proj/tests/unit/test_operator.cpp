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

#include <set>

#include "doctest.h"
#include "opflow/error.hpp"
#include "opflow/op_library.hpp"
#include "opflow/operator.hpp"
#include "frame_property.hpp"
#include "testing.hpp"

using namespace opflow;

using testing::sum_op;

TEST_SUITE("batch_store") {

TEST_CASE("set, overwrite keeps position, typed access") {
  BatchStore s;
  s.set("x", Tensor({2, 1}, {1, 2}));
  s.set("y", IntList{0, 1});
  s.set("lr", 0.1);
  s.set("x", Tensor({2, 1}, {3, 4}));
  CHECK(s.keys() == std::vector<std::string>{"x", "y", "lr"});
  CHECK(s.tensor("x")[0] == 3);
  CHECK(s.ints("y").size() == 2);
  CHECK(s.number("lr") == 0.1);
  CHECK(s.batch_size() == 2);
  CHECK_THROWS_AS(s.at("nope"), KeyError);
  CHECK_THROWS(s.tensor("y"));
  CHECK_THROWS(s.set("", 1.0));
  CHECK(s.erase("lr"));
  CHECK_FALSE(s.contains("lr"));
}

TEST_CASE("fingerprint tracks contents") {
  BatchStore a{{"x", Tensor::scalar(1.0)}};
  BatchStore b{{"x", Tensor::scalar(1.0)}};
  CHECK(a.fingerprint() == b.fingerprint());
  b.set("x", Tensor::scalar(2.0));
  CHECK(a.fingerprint() != b.fingerprint());
}

}  // TEST_SUITE

TEST_SUITE("operator") {

TEST_CASE("execute_operator reads declared keys and writes outputs") {
  BatchStore s{{"a", Tensor::scalar(1)}, {"b", Tensor::scalar(2)}};
  OpContext ctx;
  execute_operator(sum_op("s", {"a", "b"}, {"c"}, 0.0), s, ctx);
  CHECK(s.tensor("c").item() == 3.0);
}

TEST_CASE("missing input names operator and key") {
  BatchStore s{{"a", Tensor::scalar(1)}};
  OpContext ctx;
  try {
    execute_operator(sum_op("Adder", {"a", "zz"}, {"c"}, 0.0), s, ctx);
    FAIL("expected KeyError");
  } catch (const KeyError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Adder") != std::string::npos);
    CHECK(msg.find("zz") != std::string::npos);
  }
}

TEST_CASE("arity mismatch is an error") {
  Operator op{"bad", {}, {"a", "b"}, Mode::kBoth,
              [](std::span<const Value>, OpContext&) { return std::vector<Value>{1.0}; }};
  BatchStore s;
  OpContext ctx;
  CHECK_THROWS_AS(execute_operator(op, s, ctx), Error);
}

TEST_CASE("mode filtering") {
  OpSequence seq{sum_op("t", {}, {"t"}, 1.0, Mode::kTrain), sum_op("e", {}, {"e"}, 1.0, Mode::kEval),
                 sum_op("b", {}, {"b"}, 1.0)};
  BatchStore s;
  OpContext ctx{Mode::kEval, 0, nullptr};
  execute_sequence(seq, s, ctx);
  CHECK(s.keys() == std::vector<std::string>{"e", "b"});
}

TEST_CASE("frame property and validate_keys soundness over 1000 random sequences") {
  SplitMix64 rng(2024);
  int rejected = 0;
  for (int c = 0; c < 1000; ++c) {
    const auto r = testing::frame_case(rng);
    INFO("case " << c << ": " << r.problem);
    REQUIRE(r.problem.empty());
    rejected += r.rejected;
  }
  // Both outcomes are well represented.
  CHECK(rejected > 100);
  CHECK(rejected < 900);
}

}  // TEST_SUITE

TEST_SUITE("scheduler") {

TEST_CASE("floor lookup") {
  Scheduled<double> s{{0, 0.25}, {2, 0.5}, {4, 1.0}};
  std::vector<double> got;
  for (int e = 0; e < 6; ++e) got.push_back(s.resolve(e));
  CHECK(got == std::vector<double>{0.25, 0.25, 0.5, 0.5, 1.0, 1.0});
  CHECK(s.resolve(100) == 1.0);
  CHECK(s.change_points() == std::vector<int>{2, 4});
  CHECK_FALSE(s.is_constant());
}

TEST_CASE("constant and invalid schedules") {
  Scheduled<int> c = 7;
  CHECK(c.is_constant());
  CHECK(c.resolve(0) == 7);
  CHECK(c.resolve(99) == 7);
  CHECK_THROWS_AS(Scheduled<int>(std::map<int, int>{{1, 2}}), ConfigError);
  CHECK_THROWS_AS(Scheduled<int>(std::map<int, int>{{0, 1}, {-1, 2}}), ConfigError);
}

TEST_CASE("change points of a sequence") {
  OpSequence seq;
  seq.emplace_back(std::map<int, Operator>{{0, sum_op("a", {}, {"x"}, 0)}, {3, sum_op("b", {}, {"x"}, 0)}});
  seq.emplace_back(std::map<int, Operator>{{0, sum_op("c", {}, {"y"}, 0)}, {1, sum_op("d", {}, {"y"}, 0)},
                                           {3, sum_op("e", {}, {"y"}, 0)}});
  CHECK(change_points(seq) == std::vector<int>{1, 3});
  CHECK(merge_change_points({{0, 5}, {5, 2}, {}}) == std::vector<int>{0, 2, 5});
}

}  // TEST_SUITE

TEST_SUITE("op_library") {

namespace {
BatchStore run(const Operator& op, BatchStore s, Tape* tape = nullptr, Mode mode = Mode::kTrain) {
  OpContext ctx{mode, 0, tape};
  execute_operator(op, s, ctx);
  return s;
}
}  // namespace

TEST_CASE("min_max scales each sample independently") {
  BatchStore s{{"x", Tensor({2, 3}, {0, 5, 10, 2, 2, 2})}};
  s = run(ops::min_max("x", "x"), s);
  CHECK(s.tensor("x").bit_equal(Tensor({2, 3}, {0, 0.5, 1, 0, 0, 0})));
}

TEST_CASE("resize operator") {
  BatchStore s{{"x", Tensor::zeros({2, 1, 28, 28})}};
  s = run(ops::resize("x", "x", ResizeFactor::from_double(0.5)), s);
  CHECK(s.tensor("x").shape() == Shape{2, 1, 14, 14});
}

TEST_CASE("cross entropy and its mixed form") {
  BatchStore s{{"p", Tensor({2, 2}, {0, 0, 1, -1})}, {"y", IntList{0, 0}}, {"other", Tensor::scalar(3.0)}};
  s = run(ops::cross_entropy_mixed("p", "y", "other", 0.25, "ce", "mix"), s);
  const double ce = s.tensor("ce").item();
  CHECK(s.tensor("mix").item() == doctest::Approx(0.75 * 3.0 + 0.25 * ce));
  CHECK_THROWS(run(ops::cross_entropy("p", "missing", "ce"), s));
}

TEST_CASE("fgsm: epsilon 0 returns the input bit for bit") {
  SplitMix64 rng(1);
  const Tensor x = testing::uniform(rng, {3, 4}, 0, 1);
  BatchStore s{{"x", x}, {"g", testing::away_from_zero(rng, {3, 4})}};
  s = run(ops::fgsm_perturb("x", "g", 0.0, "x_adv"), s);
  CHECK(s.tensor("x_adv").bit_equal(x));
  s = run(ops::fgsm_perturb("x", "g", 0.1, "x_adv2"), s);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double expect = std::clamp(x[i] + 0.1 * (s.tensor("g")[i] > 0 ? 1.0 : -1.0), 0.0, 1.0);
    CHECK(s.tensor("x_adv2")[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("input_gradient needs a tape and matches the analytic gradient") {
  Tape tape;
  const Tensor x = tape.watch(Tensor({2}, {1.0, -2.0}));
  const Tensor loss = sum(mul(x, x));
  BatchStore s{{"x", x}, {"loss", loss}};
  s = run(ops::input_gradient("loss", "x", "g"), s, &tape);
  CHECK(s.tensor("g").bit_equal(Tensor({2}, {2.0, -4.0})));
  CHECK_FALSE(s.tensor("g").on_tape());
  CHECK_THROWS(run(ops::input_gradient("loss", "x", "g"), BatchStore{{"x", x}, {"loss", loss}}, nullptr));
}

TEST_CASE("weighted_sum over numbers and tensors") {
  BatchStore s{{"a", Tensor::scalar(1.0)}, {"b", Tensor::scalar(2.0)}};
  s = run(ops::weighted_sum({"a", "b"}, {10.0, 0.5}, "c"), s);
  CHECK(s.tensor("c").item() == 11.0);
}

TEST_CASE("stop_gradient operator") {
  Tape tape;
  const Tensor x = tape.watch("x", Tensor::scalar(2.0));
  BatchStore s = run(ops::stop_gradient("x", "y"), BatchStore{{"x", x}}, &tape);
  const Tensor loss = mul(s.tensor("y"), x);
  CHECK(tape.backward(loss).at("x").item() == 2.0);
}

TEST_CASE("binary cross entropy against a constant or a key") {
  BatchStore s{{"p", Tensor({2, 1}, {0.5, 0.5})}, {"t", Tensor({2, 1}, {1.0, 0.0})}};
  s = run(ops::binary_cross_entropy("p", 1.0, "a"), s);
  s = run(ops::binary_cross_entropy("p", std::string("t"), "b"), s);
  CHECK(s.tensor("a").item() == doctest::Approx(std::log(2.0)));
  CHECK(s.tensor("b").item() == doctest::Approx(std::log(2.0)));
}

}  // TEST_SUITE
