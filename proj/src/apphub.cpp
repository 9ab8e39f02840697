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

#include "opflow/apphub.hpp"

#include <algorithm>
#include <cmath>

#include "opflow/error.hpp"
#include "opflow/random.hpp"

namespace opflow::apphub {

using nlohmann::json;

Dataset quadrant_images(std::size_t n, std::uint64_t seed, const std::string& key,
                        const std::string& label_key, double noise) {
  constexpr std::size_t kSide = 28;
  constexpr std::size_t kHalf = kSide / 2;
  constexpr std::size_t kSquare = 8;
  SplitMix64 rng(seed);
  std::vector<Tensor> images;
  IntList labels;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::int64_t>(i % 4);
    std::vector<double> px(kSide * kSide);
    for (auto& v : px) v = rng.uniform(0.0, noise);
    const std::size_t r0 = (label / 2) * kHalf + rng.below(kHalf - kSquare + 1);
    const std::size_t c0 = (label % 2) * kHalf + rng.below(kHalf - kSquare + 1);
    const double level = rng.uniform(180.0, 255.0);
    for (std::size_t r = r0; r < r0 + kSquare; ++r) {
      for (std::size_t c = c0; c < c0 + kSquare; ++c) px[r * kSide + c] = level;
    }
    images.emplace_back(Shape{1, kSide, kSide}, std::move(px));
    labels.push_back(label);
  }
  Dataset ds;
  ds.add(key, std::move(images));
  ds.add_labels(label_key, std::move(labels));
  return ds;
}

namespace {

Tensor stripes(SplitMix64& rng, std::size_t size, bool horizontal) {
  const std::size_t period = rng.below(2) == 0 ? 2 : 4;
  const std::size_t phase = rng.below(period);
  const double hi = rng.uniform(0.7, 1.0);
  const double lo = rng.uniform(0.0, 0.3);
  std::vector<double> px(size * size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const std::size_t t = horizontal ? r : c;
      const double base = (t + phase) % period < period / 2 ? hi : lo;
      px[r * size + c] = std::clamp(base + rng.uniform(-0.05, 0.05), 0.0, 1.0);
    }
  }
  return Tensor(Shape{size * size}, std::move(px));
}

}  // namespace

Dataset two_domain_patterns(std::size_t n, std::uint64_t seed, std::size_t size,
                            const std::string& key_a, const std::string& key_b) {
  SplitMix64 rng_a(mix_seed(seed, 0, 1));
  SplitMix64 rng_b(mix_seed(seed, 0, 2));
  std::vector<Tensor> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(stripes(rng_a, size, true));
    b.push_back(stripes(rng_b, size, false));
  }
  Dataset ds;
  ds.add(key_a, std::move(a), 0);
  ds.add(key_b, std::move(b), 1);
  return ds;
}

Dataset latent_noise(std::size_t n, std::uint64_t seed, std::size_t dim, const std::string& key) {
  SplitMix64 rng(seed);
  std::vector<Tensor> z;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    z.emplace_back(Shape{dim}, std::move(v));
  }
  Dataset ds;
  ds.add(key, std::move(z));
  return ds;
}

Dataset blob_images(std::size_t n, std::uint64_t seed, std::size_t size, const std::string& key) {
  constexpr double kSigma = 1.2;
  SplitMix64 rng(seed);
  std::vector<Tensor> x;
  const double lo = 2.0;
  const double hi = static_cast<double>(size) - 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cy = rng.uniform(lo, hi);
    const double cx = rng.uniform(lo, hi);
    std::vector<double> px(size * size);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        px[r * size + c] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      }
    }
    x.emplace_back(Shape{size * size}, std::move(px));
  }
  Dataset ds;
  ds.add(key, std::move(x));
  return ds;
}

namespace {

template <typename T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + name + "': " + e.what());
  }
}

void check_fields(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError(where + ": unknown field '" + k + "'");
    }
  }
}

}  // namespace

Dataset generate(const json& source, std::size_t n, std::uint64_t seed) {
  if (!source.is_object() || !source.contains("generator")) {
    throw ConfigError("data source needs a 'generator' field");
  }
  const auto kind = field<std::string>(source, "generator", "");
  if (kind == "quadrant_images") {
    check_fields(source, {"generator", "key", "label_key", "noise"}, kind);
    const double noise = field<double>(source, "noise", 40.0);
    if (!(noise >= 0.0 && noise < 180.0)) throw ConfigError("quadrant_images: noise must be in [0, 180)");
    return quadrant_images(n, seed, field<std::string>(source, "key", "x"),
                           field<std::string>(source, "label_key", "y"), noise);
  }
  if (kind == "two_domain_patterns") {
    check_fields(source, {"generator", "size", "key_a", "key_b"}, kind);
    return two_domain_patterns(n, seed, field<std::size_t>(source, "size", 8),
                               field<std::string>(source, "key_a", "a"),
                               field<std::string>(source, "key_b", "b"));
  }
  if (kind == "latent_noise") {
    check_fields(source, {"generator", "dim", "key"}, kind);
    return latent_noise(n, seed, field<std::size_t>(source, "dim", 16),
                        field<std::string>(source, "key", "z"));
  }
  if (kind == "blob_images") {
    check_fields(source, {"generator", "size", "key"}, kind);
    return blob_images(n, seed, field<std::size_t>(source, "size", 8),
                       field<std::string>(source, "key", "x"));
  }
  throw ConfigError("unknown generator '" + kind + "'");
}

namespace {

Dataset generate_split(const json& sources, std::size_t n, std::uint64_t seed, std::uint64_t split) {
  Dataset ds;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    Dataset part = generate(sources[i], n, mix_seed(seed, i, split));
    for (auto& f : part.features) {
      if (ds.contains(f.key)) throw ConfigError("data sources produce key '" + f.key + "' twice");
      ds.features.push_back(std::move(f));
    }
  }
  return ds;
}

}  // namespace

GeneratedData generate_data(const json& data, std::uint64_t seed) {
  const auto& sources = data.at("sources");
  if (!sources.is_array() || sources.empty()) throw ConfigError("data.sources must be a non-empty list");
  const auto samples = field<std::size_t>(data, "samples", 0);
  const auto eval_samples = field<std::size_t>(data, "eval_samples", 0);
  if (samples == 0) throw ConfigError("data.samples must be >= 1");
  GeneratedData out;
  out.train = generate_split(sources, samples, seed, 0);
  if (eval_samples > 0) out.eval = generate_split(sources, eval_samples, seed, 1);
  return out;
}

namespace {

json dense(std::size_t in, std::size_t out, const char* activation = "none") {
  return {{"dense", {{"in", in}, {"out", out}, {"activation", activation}}}};
}

json flatten() { return {{"flatten", json::object()}}; }

json adam(double lr) { return {{"kind", "adam"}, {"lr", lr}}; }

json classifier(std::size_t side) {
  const std::size_t in = side * side;
  return {{"input_shape", {1, side, side}},
          {"layers", {flatten(), dense(in, 32, "relu"), dense(32, 4)}},
          {"optimizer", adam(0.002)}};
}

json quadrant_data() {
  return {{"samples", 2000},
          {"eval_samples", 400},
          {"sources", {{{"generator", "quadrant_images"}, {"key", "x"}, {"label_key", "y"}}}}};
}

json classification_traces() {
  return {{{"kind", "Accuracy"}, {"pred", "y_pred"}, {"label", "y"}},
          {{"kind", "LossMonitor"}, {"keys", {"ce"}}}};
}

json gan_model(std::size_t in, std::size_t hidden, std::size_t out, const char* act, double lr) {
  return {{"input_shape", {in}},
          {"layers", {dense(in, hidden, "leaky_relu"), dense(hidden, out, act)}},
          {"optimizer", adam(lr)}};
}

json op(std::initializer_list<std::pair<const std::string, json>> fields) {
  json j = json::object();
  for (const auto& [k, v] : fields) j[k] = v;
  return j;
}

}  // namespace

json example_classification() {
  return {
      {"description", "Four-way quadrant classification of 28x28 images."},
      {"custom",
       {{"data", quadrant_data()},
        {"models", {{"classifier", classifier(28)}}},
        {"pipeline_ops", {op({{"kind", "MinMax"}, {"in", "x"}, {"out", "x"}})}},
        {"ops",
         {op({{"kind", "Model"}, {"model", "classifier"}, {"in", "x"}, {"out", "y_pred"}}),
          op({{"kind", "CrossEntropy"}, {"pred", "y_pred"}, {"label", "y"}, {"out", "ce"}})}},
        {"updates", {{{"loss", "ce"}, {"model", "classifier"}}}}}},
      {"epochs", 5},
      {"batch_size", 32},
      {"seed", 42},
      {"workers", 1},
      {"traces", classification_traces()},
      {"log_interval", 20},
      {"output_dir", "runs/classification"}};
}

json example_progressive() {
  return {
      {"description", "Quadrant classification trained at 7x7, then 14x14, then 28x28."},
      {"custom",
       {{"data", quadrant_data()},
        {"models",
         {{"clf7", classifier(7)}, {"clf14", classifier(14)}, {"clf28", classifier(28)}}},
        {"schedules",
         {{"resolution", {{"0", 0.25}, {"2", 0.5}, {"4", 1.0}}},
          {"classifier", {{"0", "clf7"}, {"2", "clf14"}, {"4", "clf28"}}}}},
        {"pipeline_ops",
         {op({{"kind", "MinMax"}, {"in", "x"}, {"out", "x"}}),
          op({{"kind", "Resize"}, {"in", "x"}, {"out", "x"}, {"factor", "@resolution"}})}},
        {"ops",
         {op({{"kind", "Model"}, {"model", "@classifier"}, {"in", "x"}, {"out", "y_pred"}}),
          op({{"kind", "CrossEntropy"}, {"pred", "y_pred"}, {"label", "y"}, {"out", "ce"}})}},
        {"updates", {{{"loss", "ce"}, {"model", "@classifier"}}}}}},
      {"epochs", 6},
      {"batch_size", 32},
      {"seed", 42},
      {"workers", 1},
      {"traces", classification_traces()},
      {"log_interval", 20},
      {"output_dir", "runs/progressive"}};
}

json example_adversarial() {
  json cfg = example_classification();
  cfg["description"] =
      "Quadrant classification with FGSM adversarial training. The last operator "
      "also emits ce_total = 0.5 * ce + 0.5 * ce_adv, the loss the classifier is "
      "trained on.";
  // A noisier background leaves an undefended model open to FGSM.
  cfg["custom"]["data"]["sources"][0]["noise"] = 140.0;
  auto& ops = cfg["custom"]["ops"];
  ops.push_back(op({{"kind", "InputGradient"}, {"loss", "ce"}, {"in", "x"}, {"out", "g"}}));
  ops.push_back(op({{"kind", "FgsmPerturb"}, {"in", "x"}, {"grad", "g"}, {"epsilon", 0.1},
                    {"out", "x_adv"}}));
  ops.push_back(
      op({{"kind", "Model"}, {"model", "classifier"}, {"in", "x_adv"}, {"out", "y_pred_adv"}}));
  ops.push_back(op({{"kind", "CrossEntropy"},
                    {"pred", "y_pred_adv"},
                    {"label", "y"},
                    {"out", "ce_adv"},
                    {"mix_with", "ce"},
                    {"mix_weight", 0.5},
                    {"mixed_out", "ce_total"}}));
  cfg["custom"]["updates"] = {{{"loss", "ce_total"}, {"model", "classifier"}}};
  cfg["traces"] = {
      {{"kind", "Accuracy"}, {"pred", "y_pred"}, {"label", "y"}},
      {{"kind", "Accuracy"}, {"pred", "y_pred_adv"}, {"label", "y"}, {"output", "adv_accuracy"}},
      {{"kind", "LossMonitor"}, {"keys", {"ce", "ce_adv", "ce_total"}}}};
  cfg["output_dir"] = "runs/adversarial";
  return cfg;
}

json example_dcgan() {
  return {
      {"description", "Dense DC-GAN on 8x8 single-blob images."},
      {"custom",
       {{"data",
         {{"samples", 640},
          {"eval_samples", 0},
          {"sources",
           {{{"generator", "blob_images"}, {"key", "x"}, {"size", 8}},
            {{"generator", "latent_noise"}, {"key", "z"}, {"dim", 8}}}}}},
        {"models",
         {{"generator", gan_model(8, 32, 64, "sigmoid", 0.005)},
          {"discriminator", gan_model(64, 32, 1, "sigmoid", 0.002)}}},
        {"ops",
         {op({{"kind", "Model"}, {"model", "generator"}, {"in", "z"}, {"out", "x_fake"}}),
          op({{"kind", "Model"}, {"model", "discriminator"}, {"in", "x"}, {"out", "d_real"}}),
          op({{"kind", "StopGradient"}, {"in", "x_fake"}, {"out", "x_fake_sg"}}),
          op({{"kind", "Model"}, {"model", "discriminator"}, {"in", "x_fake_sg"}, {"out", "d_fake_sg"}}),
          op({{"kind", "Model"}, {"model", "discriminator"}, {"in", "x_fake"}, {"out", "d_fake"}}),
          op({{"kind", "BinaryCrossEntropy"}, {"pred", "d_real"}, {"target", 1.0}, {"out", "d_loss_real"}}),
          op({{"kind", "BinaryCrossEntropy"}, {"pred", "d_fake_sg"}, {"target", 0.0}, {"out", "d_loss_fake"}}),
          op({{"kind", "WeightedSum"},
              {"inputs", {"d_loss_real", "d_loss_fake"}},
              {"weights", {1.0, 1.0}},
              {"out", "d_loss"}}),
          op({{"kind", "BinaryCrossEntropy"}, {"pred", "d_fake"}, {"target", 1.0}, {"out", "g_loss"}})}},
        {"updates",
         {{{"loss", "d_loss"}, {"model", "discriminator"}},
          {{"loss", "g_loss"}, {"model", "generator"}}}}}},
      {"epochs", 10},
      {"batch_size", 32},
      {"seed", 7},
      {"workers", 1},
      {"traces", {{{"kind", "LossMonitor"}, {"keys", {"d_loss", "g_loss"}}}}},
      {"log_interval", 20},
      {"output_dir", "runs/dcgan"}};
}

json example_cyclegan() {
  json ops = json::array();
  auto model = [&](const char* m, const char* in, const char* out) {
    ops.push_back(op({{"kind", "Model"}, {"model", m}, {"in", in}, {"out", out}}));
  };
  auto bce = [&](const char* pred, double target, const char* out) {
    ops.push_back(
        op({{"kind", "BinaryCrossEntropy"}, {"pred", pred}, {"target", target}, {"out", out}}));
  };
  auto wsum = [&](std::vector<std::string> in, std::vector<double> w, const char* out) {
    ops.push_back(op({{"kind", "WeightedSum"}, {"inputs", in}, {"weights", w}, {"out", out}}));
  };
  model("G_ab", "a", "fake_b");
  model("G_ba", "b", "fake_a");
  model("G_ba", "fake_b", "cycled_a");
  model("G_ab", "fake_a", "cycled_b");
  ops.push_back(op({{"kind", "StopGradient"}, {"in", "fake_a"}, {"out", "fake_a_sg"}}));
  ops.push_back(op({{"kind", "StopGradient"}, {"in", "fake_b"}, {"out", "fake_b_sg"}}));
  model("D_a", "a", "da_real");
  model("D_a", "fake_a_sg", "da_fake_sg");
  model("D_a", "fake_a", "da_fake");
  model("D_b", "b", "db_real");
  model("D_b", "fake_b_sg", "db_fake_sg");
  model("D_b", "fake_b", "db_fake");
  bce("da_real", 1.0, "da_loss_real");
  bce("da_fake_sg", 0.0, "da_loss_fake");
  wsum({"da_loss_real", "da_loss_fake"}, {1.0, 1.0}, "d_a_loss");
  bce("db_real", 1.0, "db_loss_real");
  bce("db_fake_sg", 0.0, "db_loss_fake");
  wsum({"db_loss_real", "db_loss_fake"}, {1.0, 1.0}, "d_b_loss");
  ops.push_back(
      op({{"kind", "MeanAbsoluteError"}, {"a", "cycled_a"}, {"b", "a"}, {"out", "cycle_a"}}));
  ops.push_back(
      op({{"kind", "MeanAbsoluteError"}, {"a", "cycled_b"}, {"b", "b"}, {"out", "cycle_b"}}));
  wsum({"cycle_a", "cycle_b"}, {10.0, 10.0}, "cycle_loss");
  bce("db_fake", 1.0, "g_ab_adv");
  bce("da_fake", 1.0, "g_ba_adv");
  wsum({"g_ab_adv", "cycle_loss"}, {1.0, 1.0}, "g_ab_loss");
  wsum({"g_ba_adv", "cycle_loss"}, {1.0, 1.0}, "g_ba_loss");

  return {
      {"description", "Dense Cycle-GAN between horizontal and vertical stripe images."},
      {"custom",
       {{"data",
         {{"samples", 320},
          {"eval_samples", 0},
          {"sources", {{{"generator", "two_domain_patterns"}, {"size", 8}}}}}},
        {"models",
         {{"G_ab", gan_model(64, 32, 64, "sigmoid", 0.002)},
          {"G_ba", gan_model(64, 32, 64, "sigmoid", 0.002)},
          {"D_a", gan_model(64, 16, 1, "sigmoid", 0.002)},
          {"D_b", gan_model(64, 16, 1, "sigmoid", 0.002)}}},
        {"ops", ops},
        {"updates",
         {{{"loss", "g_ab_loss"}, {"model", "G_ab"}},
          {{"loss", "g_ba_loss"}, {"model", "G_ba"}},
          {{"loss", "d_a_loss"}, {"model", "D_a"}},
          {{"loss", "d_b_loss"}, {"model", "D_b"}}}}}},
      {"epochs", 15},
      {"batch_size", 16},
      {"seed", 11},
      {"workers", 1},
      {"traces",
       {{{"kind", "LossMonitor"},
         {"keys", {"g_ab_loss", "g_ba_loss", "d_a_loss", "d_b_loss", "cycle_loss"}}}}},
      {"log_interval", 20},
      {"output_dir", "runs/cyclegan"}};
}

std::vector<std::string> example_names() {
  return {"classification", "progressive", "adversarial", "dcgan", "cyclegan"};
}

json example(const std::string& name) {
  if (name == "classification") return example_classification();
  if (name == "progressive") return example_progressive();
  if (name == "adversarial") return example_adversarial();
  if (name == "dcgan") return example_dcgan();
  if (name == "cyclegan") return example_cyclegan();
  throw ConfigError("unknown example '" + name + "'");
}

}  // namespace opflow::apphub
