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
#include <iterator>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "opflow/apphub.hpp"
#include "opflow/run_config.hpp"
#include "testing.hpp"

using namespace opflow;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunSpec build_example(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return build_run(resolve_config(json{{"example", name}}, std::nullopt, overrides));
}

BatchStore first_batch(const RunSpec& run, int epoch = 0) {
  const auto& p = run.estimator.pipeline;
  const BatchConfig cfg = p.config_for(Mode::kTrain);
  const EpochPlan plan = plan_epoch(p.train, cfg, epoch);
  return p.transform(assemble_batch(p.train, plan, 0, cfg), Mode::kTrain, epoch);
}

std::vector<Tensor> snapshot(const Model& m) {
  std::vector<Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.value);
  return out;
}

bool same_parameters(const Model& a, const Model& b) {
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    if (!a.parameters()[i].value.bit_equal(b.parameters()[i].value)) return false;
  }
  return true;
}

bool unchanged(const Model& m, const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!m.parameters()[i].value.bit_equal(snap[i])) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("apphub") {

TEST_CASE("generators are deterministic and labels balanced") {
  const Dataset a = apphub::quadrant_images(40, 3);
  const Dataset b = apphub::quadrant_images(40, 3);
  const Dataset c = apphub::quadrant_images(40, 4);
  REQUIRE(a.size() == 40);
  CHECK(a.feature("x").tensors[7].bit_equal(b.feature("x").tensors[7]));
  CHECK_FALSE(a.feature("x").tensors[7].bit_equal(c.feature("x").tensors[7]));
  int counts[4] = {};
  for (auto y : a.feature("y").labels) ++counts[y];
  for (int k : counts) CHECK(k == 10);

  for (std::size_t i = 0; i < 40; ++i) {
    const Tensor& x = a.feature("x").tensors[i];
    REQUIRE(x.shape() == Shape{1, 28, 28});
    double quad[4] = {};
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t col = 0; col < 28; ++col) {
        const double v = x[r * 28 + col];
        CHECK((v >= 0.0 && v <= 255.0));
        quad[(r >= 14 ? 2 : 0) + (col >= 14 ? 1 : 0)] += v;
      }
    }
    CHECK(std::max_element(quad, quad + 4) - quad == a.feature("y").labels[i]);
  }
}

TEST_CASE("two-domain patterns are unpaired stripes in [0, 1]") {
  const Dataset d = apphub::two_domain_patterns(20, 1);
  CHECK(d.feature("a").group == 0);
  CHECK(d.feature("b").group == 1);
  for (std::size_t i = 0; i < 20; ++i) {
    const Tensor& a = d.feature("a").tensors[i];
    const Tensor& b = d.feature("b").tensors[i];
    REQUIRE(a.shape() == Shape{64});
    double a_rows = 0.0, a_cols = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 1; c < 8; ++c) {
        a_rows += std::abs(a[r * 8 + c] - a[r * 8 + c - 1]);
        a_cols += std::abs(b[c * 8 + r] - b[(c - 1) * 8 + r]);
      }
    }
    // Horizontal stripes vary little along a row, vertical ones little down a column.
    CHECK(a_rows / 56.0 < 0.1);
    CHECK(a_cols / 56.0 < 0.1);
    for (double v : a.data()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("latent noise is standard normal and blobs peak inside the image") {
  const Dataset z = apphub::latent_noise(2000, 5, 4);
  double sum = 0.0, sq = 0.0;
  for (const auto& t : z.feature("z").tensors) {
    for (double v : t.data()) {
      sum += v;
      sq += v * v;
    }
  }
  const double n = 8000.0;
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.08);

  const Dataset blobs = apphub::blob_images(50, 5);
  for (const auto& t : blobs.feature("x").tensors) {
    REQUIRE(t.shape() == Shape{64});
    const auto it = std::max_element(t.data().begin(), t.data().end());
    const auto idx = static_cast<std::size_t>(it - t.data().begin());
    CHECK(*it <= 1.0);
    CHECK(*it > 0.5);
    CHECK(idx / 8 >= 2);
    CHECK(idx / 8 <= 5);
    CHECK(idx % 8 >= 2);
    CHECK(idx % 8 <= 5);
  }
}

TEST_CASE("generate rejects unknown generators and fields") {
  CHECK_THROWS_AS(apphub::generate(json{{"generator", "nope"}}, 4, 1), ConfigError);
  CHECK_THROWS_AS(apphub::generate(json{{"generator", "latent_noise"}, {"dimm", 3}}, 4, 1), ConfigError);
  CHECK(apphub::generate(json{{"generator", "latent_noise"}, {"key", "q"}, {"dim", 3}}, 4, 1)
            .feature("q").tensors[0].shape() == Shape{3});
}

TEST_CASE("shipped configs match the templates") {
  const std::filesystem::path dir = std::filesystem::path(OPFLOW_SOURCE_DIR) / "apphub";
  for (const auto& name : apphub::example_names()) {
    CAPTURE(name);
    CHECK(slurp(dir / (name + ".json")) == apphub::example(name).dump(2) + "\n");
  }
  CHECK_THROWS_AS(apphub::example("nope"), ConfigError);
}

TEST_CASE("every template passes the smoke test at every change point") {
  for (const auto& name : apphub::example_names()) {
    CAPTURE(name);
    const RunSpec run = build_example(name);
    const SmokeReport report = smoke_test(run.estimator);
    INFO(report.to_string());
    CHECK(report.ok());
  }
}

TEST_CASE("progressive template grows the resolution on schedule") {
  const RunSpec run = build_example("progressive");
  const std::size_t expected[] = {7, 7, 14, 14, 28, 28};
  for (int e = 0; e < 6; ++e) {
    CAPTURE(e);
    const BatchStore b = first_batch(run, e);
    CHECK(b.tensor("x").shape() == Shape{32, 1, expected[e], expected[e]});
    const StepResult r = forward_backward(run.estimator.ops, run.estimator.rules, b, Mode::kTrain, e);
    CHECK(r.store.tensor("y_pred").shape() == Shape{32, 4});
  }
  const auto points = change_points(run.estimator.pipeline.ops);
  CHECK(points == std::vector<int>{2, 4});
}

TEST_CASE("adversarial template adds four operators; epsilon 0 is the identity") {
  const auto plain = apphub::example_classification();
  const auto adv = apphub::example_adversarial();
  CHECK(adv["custom"]["ops"].size() == plain["custom"]["ops"].size() + 4);

  const RunSpec run = build_example("adversarial", {"custom.ops.3.epsilon=0"});
  const BatchStore b = first_batch(run);
  const StepResult r = forward_backward(run.estimator.ops, run.estimator.rules, b, Mode::kTrain, 0);
  CHECK(r.store.tensor("x_adv").bit_equal(r.store.tensor("x")));
  CHECK(r.store.number("ce_adv") == r.store.number("ce"));
  CHECK(r.store.number("ce_total") == doctest::Approx(r.store.number("ce")).epsilon(1e-12));

  const RunSpec run2 = build_example("adversarial");
  const StepResult r2 = forward_backward(run2.estimator.ops, run2.estimator.rules, first_batch(run2),
                                         Mode::kTrain, 0);
  const Tensor& x = r2.store.tensor("x");
  const Tensor& xa = r2.store.tensor("x_adv");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) worst = std::max(worst, std::abs(xa[i] - x[i]));
  CHECK(worst == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(r2.store.number("ce_adv") > r2.store.number("ce"));
}

TEST_CASE("dcgan: discriminator loss starts near 2 ln 2 and rules touch only their model") {
  const RunSpec run = build_example("dcgan");
  const BatchStore b = first_batch(run);
  const StepResult r = forward_backward(run.estimator.ops, run.estimator.rules, b, Mode::kTrain, 0);
  CHECK(std::abs(r.store.number("d_loss") - 2.0 * std::numbers::ln2) < 0.5);
  CHECK(r.store.number("d_loss") == doctest::Approx(r.store.number("d_loss_real") + r.store.number("d_loss_fake")));

  const auto& gen = run.models.at("generator");
  const auto& disc = run.models.at("discriminator");
  REQUIRE(r.grads.size() == 2);
  for (const auto& [k, g] : r.grads[0]) CHECK(disc->owns(k));
  for (const auto& [k, g] : r.grads[1]) CHECK(gen->owns(k));
  CHECK(r.grads[0].size() == disc->parameters().size());
  CHECK(r.grads[1].size() == gen->parameters().size());

  // Discriminator-only training leaves the generator bit-exact.
  const auto g_before = snapshot(*gen);
  const std::vector<UpdateRule> d_only{run.estimator.rules[0]};
  for (int s = 0; s < 3; ++s) network_step(run.estimator.ops, d_only, b, Mode::kTrain, 0);
  CHECK(unchanged(*gen, g_before));
}

TEST_CASE("cyclegan: four isolated models and order-independent updates") {
  const RunSpec a = build_example("cyclegan");
  const RunSpec b = build_example("cyclegan");
  const BatchStore batch = first_batch(a);
  const StepResult r = forward_backward(a.estimator.ops, a.estimator.rules, batch, Mode::kTrain, 0);
  REQUIRE(r.grads.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& model = a.estimator.rules[i].model.resolve(0);
    CHECK(r.grads[i].size() == model->parameters().size());
    for (const auto& [k, g] : r.grads[i]) CHECK(model->owns(k));
  }

  std::vector<UpdateRule> reversed(b.estimator.rules.rbegin(), b.estimator.rules.rend());
  for (int s = 0; s < 3; ++s) {
    network_step(a.estimator.ops, a.estimator.rules, first_batch(a, s), Mode::kTrain, 0);
    network_step(b.estimator.ops, reversed, first_batch(b, s), Mode::kTrain, 0);
  }
  for (const auto& [name, m] : a.models) {
    CAPTURE(name);
    CHECK(same_parameters(*m, *b.models.at(name)));
  }

  const auto& p = a.estimator.pipeline;
  const EpochPlan plan = plan_epoch(p.train, p.config_for(Mode::kTrain), 0);
  REQUIRE(plan.order.size() == 2);
  CHECK(plan.order.at(0) != plan.order.at(1));
}

}  // TEST_SUITE

TEST_SUITE("apphub_training") {

TEST_CASE("nearest-centroid oracle separates the classification data") {
  const auto data = apphub::generate_data(apphub::example_classification()["custom"]["data"], 42);
  REQUIRE(data.eval.has_value());
  const auto& xs = data.train.feature("x").tensors;
  const auto& ys = data.train.feature("y").labels;
  std::vector<std::vector<double>> centroid(4, std::vector<double>(784, 0.0));
  std::vector<double> count(4, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto y = static_cast<std::size_t>(ys[i]);
    for (std::size_t j = 0; j < 784; ++j) centroid[y][j] += xs[i][j];
    ++count[y];
  }
  for (std::size_t c = 0; c < 4; ++c) {
    for (auto& v : centroid[c]) v /= count[c];
  }
  std::size_t correct = 0;
  const auto& ex = data.eval->feature("x").tensors;
  const auto& ey = data.eval->feature("y").labels;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < 784; ++j) d += (ex[i][j] - centroid[c][j]) * (ex[i][j] - centroid[c][j]);
      if (c == 0 || d < best_d) {
        best = c;
        best_d = d;
      }
    }
    correct += best == static_cast<std::size_t>(ey[i]);
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(ex.size()) >= 0.99);
}

TEST_CASE("progressive template trains 6 epochs to at least 0.90 accuracy") {
  RunSpec run = build_example("progressive");
  const History h = Estimator(run.estimator).fit();
  CHECK(h.epochs() == 6);
  const auto acc = h.value(5, Mode::kEval, "accuracy");
  REQUIRE(acc.has_value());
  CHECK(*acc >= 0.90);
}

TEST_CASE("dcgan: after 200 steps the generated mean pixel is within 0.15 of the real mean") {
  RunSpec run = build_example("dcgan");
  const auto& ds = run.estimator.pipeline.train;
  const auto steps = ds.size() / run.estimator.pipeline.config.batch_size * static_cast<std::size_t>(run.estimator.epochs);
  CHECK(steps == 200);
  Estimator(run.estimator).fit();

  double real = 0.0;
  for (const auto& t : ds.feature("x").tensors) {
    for (double v : t.data()) real += v;
  }
  real /= static_cast<double>(ds.size() * 64);

  const Dataset z = apphub::latent_noise(256, 99, 8);
  std::vector<double> flat;
  for (const auto& t : z.feature("z").tensors) flat.insert(flat.end(), t.data().begin(), t.data().end());
  const Tensor fake = run.models.at("generator")->forward(Tensor({256, 8}, std::move(flat)), nullptr);
  REQUIRE(fake.shape() == Shape{256, 64});
  double generated = 0.0;
  for (double v : fake.data()) generated += v;
  generated /= static_cast<double>(fake.numel());
  INFO("real " << real << " generated " << generated);
  CHECK(std::abs(generated - real) <= 0.15);
}

TEST_CASE("cyclegan: cycle loss after 300 steps is below the first epoch") {
  RunSpec run = build_example("cyclegan");
  const auto& p = run.estimator.pipeline;
  CHECK(p.train.size() / p.config.batch_size * static_cast<std::size_t>(run.estimator.epochs) == 300);
  const History h = Estimator(run.estimator).fit();
  const auto series = h.series(Mode::kTrain, "cycle_loss");
  REQUIRE(series.size() == 15);
  INFO("first " << series.front().second << " last " << series.back().second);
  CHECK(series.back().second < series.front().second);
}

}  // TEST_SUITE
