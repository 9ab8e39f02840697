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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opflow/pipeline.hpp"

// Ready-to-run training templates on deterministic synthetic data.
namespace opflow::apphub {

/// 28x28 images [1,28,28] with pixel values in [0, 255]: uniform background
/// noise in [0, noise) plus one bright 8x8 square of level 180 to 255. The
/// square's quadrant is the label (0 top-left, 1 top-right, 2 bottom-left,
/// 3 bottom-right); label i is i % 4.
Dataset quadrant_images(std::size_t n, std::uint64_t seed, const std::string& key = "x",
                        const std::string& label_key = "y", double noise = 40.0);

/// Unpaired stripe images [size*size] in [0, 1]: `a` horizontal stripes in
/// group 0, `b` vertical stripes in group 1.
Dataset two_domain_patterns(std::size_t n, std::uint64_t seed, std::size_t size = 8,
                            const std::string& key_a = "a", const std::string& key_b = "b");

/// Standard normal vectors [dim].
Dataset latent_noise(std::size_t n, std::uint64_t seed, std::size_t dim = 16,
                     const std::string& key = "z");

/// One gaussian blob per image [size*size], peak 1 at a random centre.
Dataset blob_images(std::size_t n, std::uint64_t seed, std::size_t size = 8,
                    const std::string& key = "x");

/// Builds the features described by one `sources` entry of a data section,
/// e.g. {"generator": "latent_noise", "key": "z", "dim": 8}.
Dataset generate(const nlohmann::json& source, std::size_t n, std::uint64_t seed);

/// Generated training and evaluation sets for a data section. Source i of
/// split s (0 train, 1 eval) is seeded with mix_seed(seed, i, s).
struct GeneratedData {
  Dataset train;
  std::optional<Dataset> eval;
};
GeneratedData generate_data(const nlohmann::json& data, std::uint64_t seed);

nlohmann::json example_classification();
nlohmann::json example_progressive();
nlohmann::json example_adversarial();
nlohmann::json example_dcgan();
nlohmann::json example_cyclegan();

std::vector<std::string> example_names();
/// Throws ConfigError for an unknown name.
nlohmann::json example(const std::string& name);

}  // namespace opflow::apphub
