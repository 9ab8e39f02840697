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

#include <fstream>
#include <cstring>
#include <set>

#include "doctest.h"
#include "opflow/error.hpp"
#include "opflow/op_library.hpp"
#include "opflow/pipeline.hpp"
#include "testing.hpp"

using namespace opflow;
using opflow::testing::TempDir;

namespace {

Dataset counting(std::size_t n) {
  Dataset ds;
  std::vector<Tensor> x;
  IntList y;
  for (std::size_t i = 0; i < n; ++i) {
    x.emplace_back(Shape{1}, std::vector<double>{static_cast<double>(i)});
    y.push_back(static_cast<std::int64_t>(i % 2));
  }
  ds.add("x", std::move(x));
  ds.add_labels("y", std::move(y));
  return ds;
}

std::vector<double> order_of(const std::vector<BatchStore>& batches, const std::string& key = "x") {
  std::vector<double> out;
  for (const auto& b : batches) {
    for (double v : b.tensor(key).data()) out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("batch sizes with and without drop_remainder") {
  BatchConfig cfg;
  cfg.batch_size = 4;
  auto sizes = [&](bool drop) {
    cfg.drop_remainder = drop;
    std::vector<std::size_t> s;
    for (const auto& b : epoch_batches(counting(10), cfg, 0)) s.push_back(b.batch_size());
    return s;
  };
  CHECK(sizes(false) == std::vector<std::size_t>{4, 4, 2});
  CHECK(sizes(true) == std::vector<std::size_t>{4, 4});
  cfg.batch_size = 11;
  CHECK_THROWS_AS(sizes(true), ConfigError);
}

TEST_CASE("shuffle=false keeps storage order") {
  BatchConfig cfg;
  cfg.batch_size = 3;
  cfg.shuffle = false;
  CHECK(order_of(epoch_batches(counting(7), cfg, 5)) == std::vector<double>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("shuffling is a deterministic permutation per (seed, epoch)") {
  BatchConfig cfg;
  cfg.batch_size = 8;
  cfg.seed = 17;
  const auto a = order_of(epoch_batches(counting(50), cfg, 0));
  const auto b = order_of(epoch_batches(counting(50), cfg, 0));
  const auto c = order_of(epoch_batches(counting(50), cfg, 1));
  CHECK(a == b);
  CHECK(a != c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == static_cast<double>(i));
}

TEST_CASE("paired keys stay aligned") {
  BatchConfig cfg;
  cfg.batch_size = 6;
  cfg.seed = 3;
  for (const auto& b : epoch_batches(counting(20), cfg, 2)) {
    for (std::size_t i = 0; i < b.batch_size(); ++i) {
      CHECK(static_cast<std::int64_t>(b.tensor("x")[i]) % 2 == b.ints("y")[i]);
    }
  }
}

TEST_CASE("unpaired groups are permuted independently") {
  Dataset ds;
  std::vector<Tensor> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(Tensor::scalar(i));
    b.push_back(Tensor::scalar(i));
  }
  ds.add("a", a, 0);
  ds.add("b", b, 1);
  BatchConfig cfg;
  cfg.batch_size = 30;
  cfg.seed = 5;
  for (int e = 0; e < 3; ++e) {
    const auto batch = epoch_batches(ds, cfg, e).front();
    CHECK_FALSE(batch.tensor("a").bit_equal(batch.tensor("b")));
  }
  // Group 0 follows mix(seed, epoch), exactly as a single-group dataset.
  Dataset solo;
  solo.add("a", a, 0);
  CHECK(epoch_batches(ds, cfg, 1).front().tensor("a").bit_equal(epoch_batches(solo, cfg, 1).front().tensor("a")));
}

TEST_CASE("group size mismatch inside a group is rejected") {
  Dataset ds;
  ds.add("x", {Tensor::scalar(1), Tensor::scalar(2)});
  ds.add_labels("y", {0});
  CHECK_THROWS_WITH(ds.validate(), doctest::Contains("key 'y' has 1 samples"));
  CHECK_THROWS_WITH(Dataset{}.validate(), doctest::Contains("empty dataset"));
}

TEST_CASE("class weights {0:1, 1:3} on balanced labels give class-1 frequency 0.75 +- 0.02") {
  BatchConfig cfg;
  cfg.batch_size = 100;
  cfg.seed = 99;
  cfg.label_key = "y";
  cfg.class_weights = {{0, 1.0}, {1, 3.0}};
  std::size_t ones = 0, total = 0;
  for (const auto& b : epoch_batches(counting(10000), cfg, 0)) {
    for (auto l : b.ints("y")) {
      ones += static_cast<std::size_t>(l == 1);
      ++total;
    }
  }
  CHECK(total == 10000);
  CHECK(static_cast<double>(ones) / static_cast<double>(total) == doctest::Approx(0.75).epsilon(0.02 / 0.75));
  // The only label feature is used when label_key is empty.
  cfg.label_key = "";
  CHECK(epoch_batches(counting(10), cfg, 0).size() == 1);
  Dataset unlabeled;
  unlabeled.add("x", {Tensor::scalar(1), Tensor::scalar(2)});
  CHECK_THROWS_WITH(epoch_batches(unlabeled, cfg, 0), doctest::Contains("no label key"));
}

TEST_CASE("padding") {
  const std::vector<Tensor> s{Tensor({2}, {1, 2}), Tensor({3}, {3, 4, 5})};
  auto [t, lens] = pad_batch(s, {"seq", -1.0});
  CHECK(t.bit_equal(Tensor({2, 3}, {1, 2, -1, 3, 4, 5})));
  CHECK(lens == IntList{2, 3});
  CHECK_THROWS(pad_batch({Tensor({2}, {1, 2}), Tensor({1, 2}, {1, 2})}, {"seq", 0.0}));
  auto [same, l2] = pad_batch({Tensor({2}, {1, 2}), Tensor({2}, {3, 4})}, {"seq", 9.0});
  CHECK(same.bit_equal(Tensor({2, 2}, {1, 2, 3, 4})));
}

TEST_CASE("padding: unpadded prefixes are bit-equal over random lengths") {
  SplitMix64 rng(12);
  for (int c = 0; c < 200; ++c) {
    std::vector<Tensor> s;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) s.push_back(testing::uniform(rng, {1 + rng.below(6), 2}, -1, 1));
    auto [t, lens] = pad_batch(s, {"k", 0.5});
    const std::size_t longest = t.extent(1);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(lens[i] == static_cast<std::int64_t>(s[i].extent(0)));
      for (std::size_t j = 0; j < longest * 2; ++j) {
        const double got = t[i * longest * 2 + j];
        if (j < s[i].numel()) {
          REQUIRE(std::memcmp(&got, &s[i].data()[j], sizeof(double)) == 0);
        } else {
          REQUIRE(got == 0.5);
        }
      }
    }
  }
}

TEST_CASE("padded batches carry <key>_len") {
  Dataset ds;
  ds.add("seq", {Tensor({1}, {1}), Tensor({3}, {1, 2, 3}), Tensor({2}, {1, 2})});
  BatchConfig cfg;
  cfg.batch_size = 3;
  cfg.shuffle = false;
  cfg.pad = PadSpec{"seq", 0.0};
  const auto b = epoch_batches(ds, cfg, 0).front();
  CHECK(b.ints("seq_len") == IntList{1, 3, 2});
  CHECK(batch_keys(ds, cfg) == std::vector<std::string>{"seq", "seq_len"});
}

TEST_CASE("csv load, errors and round trip") {
  TempDir dir("csv");
  {
    std::ofstream f(dir / "d.csv");
    f << "x1,x2,y\n1.5,2,0\n3,4.25,1\n-1,0,1\n";
  }
  const std::map<std::string, CsvColumn> schema{
      {"x1", {"x", CsvKind::kNumber}}, {"x2", {"x", CsvKind::kNumber}}, {"y", {"y", CsvKind::kIntLabel}}};
  const Dataset ds = load_csv(dir / "d.csv", schema);
  CHECK(ds.size() == 3);
  CHECK(ds.keys() == std::vector<std::string>{"x", "y"});
  CHECK(ds.feature("x").tensors[1].bit_equal(Tensor({2}, {3, 4.25})));

  write_csv(ds, dir / "out.csv");
  const Dataset back = load_csv(dir / "out.csv", {{"x_0", {"x", CsvKind::kNumber}},
                                                  {"x_1", {"x", CsvKind::kNumber}},
                                                  {"y", {"y", CsvKind::kIntLabel}}});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.feature("x").tensors[i].bit_equal(ds.feature("x").tensors[i]));
    CHECK(back.feature("y").labels[i] == ds.feature("y").labels[i]);
  }

  {
    std::ofstream f(dir / "empty.csv");
    f << "x1,x2,y\n";
  }
  CHECK_THROWS_WITH(load_csv(dir / "empty.csv", schema), doctest::Contains("empty dataset"));
  {
    std::ofstream f(dir / "bad.csv");
    f << "x1,x2,y\n1,2,0\n1,oops,1\n";
  }
  CHECK_THROWS_WITH(load_csv(dir / "bad.csv", schema), doctest::Contains("row 3, column 'x2'"));
  CHECK_THROWS_AS(load_csv(dir / "d.csv", {{"missing", {"m", CsvKind::kNumber}}}), KeyError);
}

TEST_CASE("pipeline transform runs operators per batch") {
  Pipeline p;
  p.train = counting(6);
  p.config.batch_size = 3;
  p.config.shuffle = false;
  p.ops.push_back(ops::min_max("x", "x_scaled"));
  const auto batches = p.batches(Mode::kTrain, 0);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].contains("x_scaled"));
  CHECK_THROWS(p.dataset(Mode::kEval));
}

TEST_CASE("benchmark counts batches and orders identity before heavy transforms") {
  Dataset ds;
  std::vector<Tensor> x(64, Tensor::filled({1, 16, 16}, 1.0));
  ds.add("x", x);
  BatchConfig cfg;
  cfg.batch_size = 16;
  const auto one = benchmark(ds, cfg, {}, 1);
  CHECK(one.batches == 1);
  CHECK(one.samples == 16);
  CHECK(one.batches_per_sec > 0);
  CHECK(one.samples_per_sec > 0);
  const auto many = benchmark(ds, cfg, {}, 10);
  CHECK(many.batches == 10);

  OpSequence heavy;
  for (int i = 0; i < 4; ++i) {
    heavy.push_back(ops::resize("x", "big", ResizeFactor{4, 1}));
    heavy.push_back(ops::min_max("big", "big"));
  }
  const auto fast = benchmark(ds, cfg, {}, 40);
  const auto slow = benchmark(ds, cfg, heavy, 40);
  CHECK(fast.batches_per_sec >= slow.batches_per_sec);
  CHECK_THROWS(benchmark(ds, cfg, {}, 0));
}

}  // TEST_SUITE
