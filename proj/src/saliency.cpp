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

#include "opflow/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "opflow/error.hpp"

namespace opflow {

Tensor read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(is, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end == cell.c_str() || *end != '\0') {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
      values.push_back(v);
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) {
      throw ShapeError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(cols) + " columns, got " + std::to_string(n));
    }
    ++rows;
  }
  if (rows == 0 || cols == 0) throw Error(path.string() + ": empty grid");
  return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor saliency_map(const Model& model, const Tensor& x) {
  Shape batched{1};
  batched.insert(batched.end(), x.shape().begin(), x.shape().end());
  Tape tape;
  const Tensor input = tape.watch(reshape(x.detached(), batched));
  const Tensor out = model.forward(input, &tape);
  if (out.rank() != 2 || out.extent(0) != 1) {
    throw ShapeError("saliency needs class scores [1, C], model gives " + shape_to_string(out.shape()));
  }
  const auto scores = out.data();
  const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  std::vector<double> pick(scores.size(), 0.0);
  pick[best] = 1.0;
  const Tensor score = sum(mul(out, Tensor(out.shape(), std::move(pick))));
  const Tensor grad = tape.gradient(score, std::span<const Tensor>(&input, 1)).front();

  std::vector<double> s(grad.numel());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::abs(grad[i]);
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (auto& v : s) v = range > 0.0 ? (v - min) / range : 0.0;
  return Tensor(x.shape(), std::move(s));
}

std::vector<std::uint8_t> to_gray(const Tensor& normalized) {
  std::vector<std::uint8_t> px(normalized.numel());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(normalized[i], 0.0, 1.0) * 255.0));
  }
  return px;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != width * height) throw ShapeError("pgm: pixel count does not match size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void saliency_to_pgm(const std::filesystem::path& checkpoint, const std::filesystem::path& input_csv,
                     const std::filesystem::path& out_pgm) {
  const Tensor grid = read_grid_csv(input_csv);
  const std::size_t h = grid.extent(0);
  const std::size_t w = grid.extent(1);
  const Shape input_shape{1, h, w};
  ModelPtr model = model_from_checkpoint(checkpoint, input_shape);
  const Tensor map = saliency_map(*model, reshape(grid, input_shape));
  write_pgm(out_pgm, w, h, to_gray(map));
}

}  // namespace opflow
