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

#include "opflow/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "opflow/apphub.hpp"
#include "opflow/builtin_traces.hpp"
#include "opflow/op_library.hpp"
#include "opflow/random.hpp"

namespace opflow {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_fields(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      fail(where, "unknown field '" + k + "'");
    }
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string get_string(const json& j, const char* key, const std::string& where,
                       std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing field '") + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_string()) fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double get_number(const json& j, const char* key, const std::string& where,
                  std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing field '") + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number()) fail(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& j, const char* key, const std::string& where,
                       std::optional<std::uint64_t> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing field '") + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(where, std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(where, std::string("field '") + key + "' must be true or false");
  return j.at(key).get<bool>();
}

std::vector<std::string> get_strings(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_array()) fail(where, std::string("field '") + key + "' must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(where, std::string("field '") + key + "' must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Mode get_mode(const json& j, const std::string& where, Mode fallback = Mode::kBoth) {
  if (!j.contains("mode")) return fallback;
  try {
    return parse_mode(get_string(j, "mode", where));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

using ScheduleTable = std::map<std::string, std::map<int, json>>;

ScheduleTable parse_schedules(const json& j) {
  ScheduleTable out;
  for (const auto& [name, entries] : j.items()) {
    const std::string where = "custom.schedules." + name;
    if (!entries.is_object() || entries.empty()) fail(where, "expected an object of epoch: value");
    std::map<int, json> m;
    for (const auto& [epoch, value] : entries.items()) {
      std::size_t used = 0;
      int e = -1;
      try {
        e = std::stoi(epoch, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != epoch.size() || e < 0) fail(where, "epoch '" + epoch + "' is not a non-negative integer");
      m[e] = value;
    }
    if (!m.contains(0)) fail(where, "needs an entry for epoch 0");
    out.emplace(name, std::move(m));
  }
  return out;
}

const std::map<int, json>& schedule_ref(const json& v, const ScheduleTable& schedules,
                                        const std::string& where) {
  const std::string ref = v.get<std::string>().substr(1);
  auto it = schedules.find(ref);
  if (it == schedules.end()) fail(where, "unknown schedule '@" + ref + "'");
  return it->second;
}

bool is_ref(const json& v) {
  return v.is_string() && !v.get<std::string>().empty() && v.get<std::string>()[0] == '@';
}

json resolve_at(const std::map<int, json>& m, int epoch) {
  return std::prev(m.upper_bound(epoch))->second;
}

// --- models -----------------------------------------------------------------

Activation get_activation(const json& j, const std::string& where) {
  try {
    return parse_activation(get_string(j, "activation", where, "none"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

Shape get_shape(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_array() || v.empty()) fail(where, std::string("field '") + key + "' must be a list of extents");
  Shape s;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
      fail(where, std::string("field '") + key + "' must hold positive integers");
    }
    s.push_back(e.get<std::size_t>());
  }
  return s;
}

Layer parse_layer(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) fail(where, "a layer is an object with exactly one kind");
  const auto& [kind, body] = *j.items().begin();
  const std::string at = where + "." + kind;
  if (kind == "dense") {
    check_fields(body, {"in", "out", "activation"}, at);
    return DenseLayer{get_uint(body, "in", at), get_uint(body, "out", at), get_activation(body, at)};
  }
  if (kind == "conv") {
    check_fields(body, {"in_channels", "filters", "kernel", "stride", "activation"}, at);
    ConvLayer c;
    c.in_channels = get_uint(body, "in_channels", at);
    c.filters = get_uint(body, "filters", at);
    c.kernel_h = c.kernel_w = get_uint(body, "kernel", at, 3);
    c.stride = get_uint(body, "stride", at, 1);
    c.activation = get_activation(body, at);
    return c;
  }
  if (kind == "flatten") {
    check_fields(body, {}, at);
    return FlattenLayer{};
  }
  if (kind == "resize") {
    check_fields(body, {"factor"}, at);
    try {
      return ResizeLayer{ResizeFactor::from_double(get_number(body, "factor", at))};
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(at, e.what());
    }
  }
  fail(where, "unknown layer kind '" + kind + "'");
}

OptimizerSpec parse_optimizer(const json& j, const std::string& where) {
  check_fields(j, {"kind", "lr", "beta1", "beta2", "epsilon"}, where);
  const std::string kind = get_string(j, "kind", where, "adam");
  OptimizerSpec spec;
  if (kind == "adam") {
    spec = OptimizerSpec::adam(get_number(j, "lr", where, 0.001));
  } else if (kind == "sgd") {
    spec = OptimizerSpec::sgd(get_number(j, "lr", where, 0.01));
  } else {
    fail(where, "unknown optimizer '" + kind + "'");
  }
  spec.beta1 = get_number(j, "beta1", where, spec.beta1);
  spec.beta2 = get_number(j, "beta2", where, spec.beta2);
  spec.epsilon = get_number(j, "epsilon", where, spec.epsilon);
  if (!(spec.lr > 0.0)) fail(where, "lr must be positive");
  return spec;
}

ModelPtr parse_model(const std::string& name, const json& j, std::uint64_t seed) {
  const std::string where = "custom.models." + name;
  check_fields(j, {"input_shape", "layers", "optimizer"}, where);
  LayerSpec spec;
  spec.input_shape = get_shape(j, "input_shape", where);
  const json& layers = require(j, "layers", where);
  if (!layers.is_array() || layers.empty()) fail(where, "layers must be a non-empty list");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    spec.layers.push_back(parse_layer(layers[i], where + ".layers[" + std::to_string(i) + "]"));
  }
  const OptimizerSpec opt = parse_optimizer(j.value("optimizer", json::object()), where + ".optimizer");
  try {
    return build(spec, opt, name, model_seed(seed, name));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

// --- operators --------------------------------------------------------------

using ModelTable = std::map<std::string, ModelPtr>;

ModelPtr find_model(const ModelTable& models, const std::string& name, const std::string& where) {
  auto it = models.find(name);
  if (it == models.end()) fail(where, "unknown model '" + name + "'");
  return it->second;
}

Operator make_op(const json& j, const ModelTable& models, const std::string& where) {
  const std::string kind = get_string(j, "kind", where);
  const std::string at = where + " (" + kind + ")";
  const Mode mode = get_mode(j, at);
  auto s = [&](const char* key) { return get_string(j, key, at); };
  Operator op;
  if (kind == "MinMax") {
    check_fields(j, {"kind", "name", "mode", "in", "out"}, at);
    op = ops::min_max(s("in"), s("out"), mode);
  } else if (kind == "Resize") {
    check_fields(j, {"kind", "name", "mode", "in", "out", "factor"}, at);
    try {
      op = ops::resize(s("in"), s("out"), ResizeFactor::from_double(get_number(j, "factor", at)), mode);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(at, e.what());
    }
  } else if (kind == "Model") {
    check_fields(j, {"kind", "name", "mode", "model", "in", "out"}, at);
    op = model_op(find_model(models, s("model"), at), s("in"), s("out"), mode).resolve(0);
  } else if (kind == "CrossEntropy") {
    check_fields(j, {"kind", "name", "mode", "pred", "label", "out", "mix_with", "mix_weight", "mixed_out"}, at);
    if (j.contains("mix_with")) {
      op = ops::cross_entropy_mixed(s("pred"), s("label"), s("mix_with"), get_number(j, "mix_weight", at),
                                    s("out"), s("mixed_out"), mode);
    } else {
      if (j.contains("mix_weight") || j.contains("mixed_out")) fail(at, "mix_weight and mixed_out need mix_with");
      op = ops::cross_entropy(s("pred"), s("label"), s("out"), mode);
    }
  } else if (kind == "BinaryCrossEntropy") {
    check_fields(j, {"kind", "name", "mode", "pred", "target", "out"}, at);
    const json& t = require(j, "target", at);
    if (t.is_number()) {
      op = ops::binary_cross_entropy(s("pred"), t.get<double>(), s("out"), mode);
    } else if (t.is_string()) {
      op = ops::binary_cross_entropy(s("pred"), t.get<std::string>(), s("out"), mode);
    } else {
      fail(at, "target must be a number or a key");
    }
  } else if (kind == "MeanSquaredError" || kind == "MeanAbsoluteError") {
    check_fields(j, {"kind", "name", "mode", "a", "b", "out"}, at);
    op = kind == "MeanSquaredError" ? ops::mean_squared_error(s("a"), s("b"), s("out"), mode)
                                    : ops::mean_absolute_error(s("a"), s("b"), s("out"), mode);
  } else if (kind == "StopGradient") {
    check_fields(j, {"kind", "name", "mode", "in", "out"}, at);
    op = ops::stop_gradient(s("in"), s("out"), mode);
  } else if (kind == "InputGradient") {
    check_fields(j, {"kind", "name", "mode", "loss", "in", "out"}, at);
    op = ops::input_gradient(s("loss"), s("in"), s("out"), mode);
  } else if (kind == "FgsmPerturb") {
    check_fields(j, {"kind", "name", "mode", "in", "grad", "epsilon", "out"}, at);
    const double eps = get_number(j, "epsilon", at);
    if (eps < 0.0) fail(at, "epsilon must be >= 0");
    op = ops::fgsm_perturb(s("in"), s("grad"), eps, s("out"), mode);
  } else if (kind == "WeightedSum") {
    check_fields(j, {"kind", "name", "mode", "inputs", "weights", "out"}, at);
    const json& w = require(j, "weights", at);
    if (!w.is_array()) fail(at, "weights must be a list of numbers");
    std::vector<double> weights;
    for (const auto& e : w) {
      if (!e.is_number()) fail(at, "weights must be a list of numbers");
      weights.push_back(e.get<double>());
    }
    auto inputs = get_strings(j, "inputs", at);
    if (inputs.empty() || inputs.size() != weights.size()) fail(at, "inputs and weights must have equal, non-zero length");
    op = ops::weighted_sum(std::move(inputs), std::move(weights), s("out"), mode);
  } else {
    fail(where, "unknown operator kind '" + kind + "'");
  }
  if (j.contains("name")) op.name = get_string(j, "name", at);
  return op;
}

Scheduled<Operator> build_op(const json& j, const ModelTable& models, const ScheduleTable& schedules,
                             const std::string& where) {
  if (!j.is_object()) fail(where, "an operator is an object");
  std::vector<std::vector<int>> points{{0}};
  std::vector<std::pair<std::string, const std::map<int, json>*>> refs;
  for (const auto& [k, v] : j.items()) {
    if (k == "kind" || !is_ref(v)) continue;
    const auto& m = schedule_ref(v, schedules, where);
    refs.emplace_back(k, &m);
    std::vector<int> keys;
    for (const auto& [e, _] : m) keys.push_back(e);
    points.push_back(std::move(keys));
  }
  if (refs.empty()) return Scheduled<Operator>(make_op(j, models, where));
  std::map<int, Operator> entries;
  for (int e : merge_change_points(std::move(points))) {
    json resolved = j;
    for (const auto& [k, m] : refs) resolved[k] = resolve_at(*m, e);
    entries.emplace(e, make_op(resolved, models, where + " at epoch " + std::to_string(e)));
  }
  return Scheduled<Operator>(std::move(entries));
}

OpSequence build_ops(const json& cfg, const char* key, const ModelTable& models,
                     const ScheduleTable& schedules) {
  OpSequence seq;
  if (!cfg.contains(key)) return seq;
  const json& list = cfg.at(key);
  const std::string where = std::string("custom.") + key;
  if (!list.is_array()) fail(where, "expected a list of operators");
  for (std::size_t i = 0; i < list.size(); ++i) {
    seq.push_back(build_op(list[i], models, schedules, where + "[" + std::to_string(i) + "]"));
  }
  return seq;
}

std::vector<UpdateRule> build_rules(const json& custom, const ModelTable& models,
                                    const ScheduleTable& schedules) {
  std::vector<UpdateRule> rules;
  if (!custom.contains("updates")) return rules;
  const json& list = custom.at("updates");
  if (!list.is_array()) fail("custom.updates", "expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "custom.updates[" + std::to_string(i) + "]";
    check_fields(list[i], {"loss", "model"}, where);
    const json& m = require(list[i], "model", where);
    UpdateRule rule{get_string(list[i], "loss", where), Scheduled<ModelPtr>(nullptr)};
    if (is_ref(m)) {
      std::map<int, ModelPtr> entries;
      for (const auto& [e, name] : schedule_ref(m, schedules, where)) {
        if (!name.is_string()) fail(where, "model schedules hold model names");
        entries.emplace(e, find_model(models, name.get<std::string>(), where));
      }
      rule.model = Scheduled<ModelPtr>(std::move(entries));
    } else {
      rule.model = Scheduled<ModelPtr>(find_model(models, get_string(list[i], "model", where), where));
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

// --- data and traces ---------------------------------------------------------

void load_data(const json& data, std::uint64_t seed, Pipeline& p) {
  const std::string where = "custom.data";
  check_fields(data, {"samples", "eval_samples", "seed", "sources", "train_csv", "eval_csv", "schema",
                      "shuffle", "drop_remainder", "class_weights", "label_key", "pad"},
               where);
  const bool generated = data.contains("sources");
  if (generated == data.contains("train_csv")) fail(where, "needs exactly one of 'sources' and 'train_csv'");
  if (generated) {
    json gen = data;
    auto g = apphub::generate_data(gen, get_uint(data, "seed", where, seed));
    p.train = std::move(g.train);
    p.eval = std::move(g.eval);
  } else {
    const json& schema = require(data, "schema", where);
    if (!schema.is_object() || schema.empty()) fail(where + ".schema", "expected column: {key, kind}");
    std::map<std::string, CsvColumn> columns;
    for (const auto& [col, spec] : schema.items()) {
      const std::string at = where + ".schema." + col;
      check_fields(spec, {"key", "kind"}, at);
      const std::string kind = get_string(spec, "kind", at, "number");
      if (kind != "number" && kind != "label") fail(at, "kind must be 'number' or 'label'");
      columns[col] = CsvColumn{get_string(spec, "key", at, col),
                               kind == "label" ? CsvKind::kIntLabel : CsvKind::kNumber};
    }
    p.train = load_csv(get_string(data, "train_csv", where), columns);
    if (data.contains("eval_csv")) p.eval = load_csv(get_string(data, "eval_csv", where), columns);
  }
  p.config.shuffle = get_bool(data, "shuffle", where, true);
  p.config.drop_remainder = get_bool(data, "drop_remainder", where, false);
  p.config.label_key = get_string(data, "label_key", where, "");
  if (data.contains("class_weights")) {
    const json& w = data.at("class_weights");
    if (!w.is_object()) fail(where, "class_weights must map labels to weights");
    for (const auto& [label, weight] : w.items()) {
      if (!weight.is_number() || weight.get<double>() < 0.0) fail(where, "class weights must be >= 0");
      try {
        p.config.class_weights[std::stoll(label)] = weight.get<double>();
      } catch (const std::exception&) {
        fail(where, "class_weights key '" + label + "' is not an integer");
      }
    }
  }
  if (data.contains("pad")) {
    const json& pad = data.at("pad");
    check_fields(pad, {"key", "value"}, where + ".pad");
    p.config.pad = PadSpec{get_string(pad, "key", where + ".pad"), get_number(pad, "value", where + ".pad", 0.0)};
  }
}

traces::Direction get_direction(const json& j, const std::string& where) {
  try {
    return traces::parse_direction(get_string(j, "direction", where, "min"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

std::vector<TracePtr> build_traces(const json& list, const ModelTable& models,
                                   const std::filesystem::path& out_dir) {
  std::vector<TracePtr> out;
  if (!list.is_array()) fail("traces", "expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& j = list[i];
    const std::string where = "traces[" + std::to_string(i) + "]";
    const std::string kind = get_string(j, "kind", where);
    const std::string at = where + " (" + kind + ")";
    if (kind == "Accuracy") {
      check_fields(j, {"kind", "pred", "label", "output", "mode"}, at);
      out.push_back(std::make_shared<traces::Accuracy>(get_string(j, "pred", at), get_string(j, "label", at),
                                                       get_string(j, "output", at, "accuracy"), get_mode(j, at)));
    } else if (kind == "LossMonitor") {
      check_fields(j, {"kind", "keys", "name", "mode"}, at);
      auto keys = get_strings(j, "keys", at);
      if (keys.empty()) fail(at, "keys must not be empty");
      out.push_back(std::make_shared<traces::LossMonitor>(std::move(keys), get_string(j, "name", at, "LossMonitor"),
                                                          get_mode(j, at)));
    } else if (kind == "EarlyStopping") {
      check_fields(j, {"kind", "monitor", "patience", "direction", "min_delta", "mode"}, at);
      const auto patience = get_uint(j, "patience", at);
      if (patience < 1) fail(at, "patience must be >= 1");
      out.push_back(std::make_shared<traces::EarlyStopping>(get_string(j, "monitor", at), static_cast<int>(patience),
                                                            get_direction(j, at), get_number(j, "min_delta", at, 0.0),
                                                            get_mode(j, at, Mode::kEval)));
    } else if (kind == "ModelSaver") {
      check_fields(j, {"kind", "model", "monitor", "direction", "path", "mode"}, at);
      const std::string model = get_string(j, "model", at);
      out.push_back(std::make_shared<traces::ModelSaver>(
          find_model(models, model, at), out_dir / get_string(j, "path", at, model + "_best.ckpt"),
          get_string(j, "monitor", at), get_direction(j, at), get_mode(j, at, Mode::kEval)));
    } else if (kind == "CsvLogger") {
      check_fields(j, {"kind", "path"}, at);
      out.push_back(std::make_shared<traces::CsvLogger>(out_dir / get_string(j, "path", at, "metrics.csv")));
    } else {
      fail(where, "unknown trace kind '" + kind + "'");
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t model_seed(std::uint64_t run_seed, const std::string& model_name) {
  return splitmix64(run_seed ^ fnv1a(model_name));
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json expand_example(const json& raw) {
  if (!raw.is_object()) throw ConfigError("config: expected a JSON object");
  if (raw.contains("example") == raw.contains("custom")) {
    throw ConfigError("config: needs exactly one of 'example' and 'custom'");
  }
  if (raw.contains("custom")) return raw;
  if (!raw.at("example").is_string()) throw ConfigError("config: 'example' must be a name");
  json cfg = apphub::example(raw.at("example").get<std::string>());
  for (const auto& [k, v] : raw.items()) {
    if (k != "example") cfg[k] = v;
  }
  return cfg;
}

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "': expected key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path segment");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t used = 0;
      std::size_t idx = 0;
      try {
        idx = std::stoul(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != part.size() || idx >= node->size()) {
        throw ConfigError("override '" + assignment + "': bad list index '" + part + "'");
      }
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) {
        throw ConfigError("override '" + assignment + "': '" + part + "' is inside a non-object");
      }
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(value);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

json resolve_config(const json& raw, const std::optional<std::string>& env_seed,
                    const std::vector<std::string>& overrides) {
  json cfg = expand_example(raw);
  if (env_seed) {
    std::size_t used = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(*env_seed, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (env_seed->empty() || used != env_seed->size() || (*env_seed)[0] == '-') {
      throw ConfigError("OPFLOW_SEED must be a non-negative integer, got '" + *env_seed + "'");
    }
    cfg["seed"] = seed;
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

RunSpec build_run(const json& cfg) {
  try {
    check_fields(cfg, {"description", "custom", "epochs", "batch_size", "seed", "workers", "traces",
                       "log_interval", "output_dir"},
                 "config");
    if (cfg.contains("description") && !cfg.at("description").is_string()) {
      fail("config", "description must be a string");
    }
    const json& custom = require(cfg, "custom", "config");
    check_fields(custom, {"data", "models", "schedules", "pipeline_ops", "ops", "updates"}, "custom");

    RunSpec run;
    run.config = cfg;
    EstimatorConfig& est = run.estimator;
    est.seed = get_uint(cfg, "seed", "config", 0);
    est.epochs = static_cast<int>(get_uint(cfg, "epochs", "config", 1));
    est.workers = static_cast<int>(get_uint(cfg, "workers", "config", 1));
    est.log_interval = static_cast<int>(get_uint(cfg, "log_interval", "config", 0));
    if (est.epochs < 1) fail("config", "epochs must be >= 1");
    if (est.workers < 1) fail("config", "workers must be >= 1");
    run.output_dir = get_string(cfg, "output_dir", "config", "runs/run");

    const ScheduleTable schedules = parse_schedules(custom.value("schedules", json::object()));
    const json& models = custom.value("models", json::object());
    if (!models.is_object()) fail("custom.models", "expected an object of name: model");
    for (const auto& [name, spec] : models.items()) run.models.emplace(name, parse_model(name, spec, est.seed));

    Pipeline& p = est.pipeline;
    load_data(require(custom, "data", "custom"), est.seed, p);
    p.config.batch_size = get_uint(cfg, "batch_size", "config", 32);
    if (p.config.batch_size < 1) fail("config", "batch_size must be >= 1");
    p.config.seed = est.seed;
    p.ops = build_ops(custom, "pipeline_ops", run.models, schedules);
    est.ops = build_ops(custom, "ops", run.models, schedules);
    est.rules = build_rules(custom, run.models, schedules);
    est.traces = build_traces(cfg.value("traces", json::array()), run.models, run.output_dir);
    return run;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace opflow
