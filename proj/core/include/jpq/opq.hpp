// Copyright 2026-present the jpq project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jpq/codebook.hpp"

namespace jpq {

/// Learns a codebook together with an orthonormal rotation by alternating
/// (a) k-means on the rotated embeddings with the rotation fixed and
/// (b) the orthonormal Procrustes solution aligning embeddings to their
/// reconstructions with codes and centroids fixed.
///
/// outer_errors, when given, receives the mean total reconstruction error
/// after initialization and after every outer iteration; non-increasing.
Codebook train_opq_rotation(std::span<const float> embeddings,
                            std::size_t n,
                            std::uint32_t dim,
                            std::uint32_t num_subspaces,
                            std::uint32_t num_centroids,
                            std::uint32_t outer_iters,
                            std::uint64_t seed,
                            std::vector<double>* outer_errors = nullptr,
                            std::uint32_t kmeans_iters_per_outer = 5);

}  // namespace jpq
