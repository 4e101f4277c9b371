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

/// Learns a per-subspace k-means codebook (no rotation) minimizing the
/// reconstruction error. k-means++ initialization; empty clusters are
/// re-seeded from the point with the largest quantization error.
///
/// iter_errors, when given, receives the total mean squared reconstruction
/// error (summed over subspaces, averaged over points) after initialization
/// and after every Lloyd iteration; the sequence is non-increasing.
Codebook train_kmeans_codebook(std::span<const float> embeddings,
                               std::size_t n,
                               std::uint32_t dim,
                               std::uint32_t num_subspaces,
                               std::uint32_t num_centroids,
                               std::uint32_t iters,
                               std::uint64_t seed,
                               std::vector<double>* iter_errors = nullptr);

namespace detail {

/// One subspace worth of Lloyd iterations over contiguous points
/// (n rows of sub_dim floats). Centroids are updated in place; returns the
/// mean squared error after the final assignment. Exposed for reuse by the
/// rotation trainer.
double lloyd_iterations(std::span<const float> points,
                        std::size_t n,
                        std::uint32_t sub_dim,
                        std::span<float> centroids,
                        std::uint32_t num_centroids,
                        std::uint32_t iters,
                        std::vector<double>* iter_errors);

/// k-means++ seeding over contiguous points.
void kmeanspp_init(std::span<const float> points,
                   std::size_t n,
                   std::uint32_t sub_dim,
                   std::span<float> centroids,
                   std::uint32_t num_centroids,
                   Rng& rng);

}  // namespace detail

}  // namespace jpq
