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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "opflow/network.hpp"

namespace opflow {

/// Reads a grid of comma-separated numbers, one image row per line, into a
/// [rows, cols] tensor. Blank lines and lines starting with '#' are skipped.
Tensor read_grid_csv(const std::filesystem::path& path);

/// |d score / d x| for one sample x, where score is the model output of the
/// highest-scoring class. Min-max normalized to [0, 1]; a constant gradient
/// gives all zeros. The result has the shape of x.
Tensor saliency_map(const Model& model, const Tensor& x);

/// round(255 * v) of a [0, 1] map.
std::vector<std::uint8_t> to_gray(const Tensor& normalized);

/// Binary PGM (P5), maxval 255.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels);

/// Loads a checkpoint for a single-channel image input of the grid's size,
/// computes the saliency map of the grid and writes it as PGM.
void saliency_to_pgm(const std::filesystem::path& checkpoint, const std::filesystem::path& input_csv,
                     const std::filesystem::path& out_pgm);

}  // namespace opflow
