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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "opflow/error.hpp"
#include "opflow/parameter.hpp"

namespace opflow {

namespace {
constexpr const char* kHeader = "OPFLOW-CKPT v1";
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<Parameter>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  out << kHeader << '\n';
  char buf[64];
  for (const auto& p : params) {
    if (p.name.empty() || p.name.find_first_of(" \t\n") != std::string::npos) {
      throw Error("parameter name '" + p.name + "' cannot be stored in a checkpoint");
    }
    out << p.name << ' ';
    for (std::size_t i = 0; i < p.value.rank(); ++i) {
      if (i) out << ',';
      out << p.value.extent(i);
    }
    out << '\n';
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.16e", p.value[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

std::vector<Parameter> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw Error(path.string() + ": not an " + std::string(kHeader) + " checkpoint");
  }
  std::vector<Parameter> params;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto space = line.find(' ');
    Parameter p;
    p.name = line.substr(0, space);
    Shape shape;
    if (space != std::string::npos) {
      std::istringstream dims(line.substr(space + 1));
      std::string tok;
      while (std::getline(dims, tok, ',')) {
        if (!tok.empty()) shape.push_back(std::stoul(tok));
      }
    }
    std::string values;
    if (!std::getline(in, values)) {
      throw Error(path.string() + ": parameter '" + p.name + "' has no value line");
    }
    std::vector<double> data;
    data.reserve(shape_numel(shape));
    std::istringstream vs(values);
    std::string tok;
    while (vs >> tok) {
      char* end = nullptr;
      data.push_back(std::strtod(tok.c_str(), &end));
      if (end == tok.c_str() || *end != '\0') {
        throw Error(path.string() + ": bad value '" + tok + "' in parameter '" + p.name + "'");
      }
    }
    p.value = Tensor(std::move(shape), std::move(data));
    params.push_back(std::move(p));
  }
  return params;
}

}  // namespace opflow
