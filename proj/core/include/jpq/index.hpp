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
#include <string>
#include <utility>
#include <vector>

#include "jpq/codebook.hpp"
#include "jpq/matrix.hpp"

namespace jpq {

/// Quantizes every corpus embedding: rotate, then pick the nearest centroid
/// per subspace (squared Euclidean, ties -> smallest index). mean_error,
/// when given, receives the mean squared reconstruction error.
CodeMatrix quantize_corpus(const Codebook& cb, const EmbeddingMatrix& embeddings,
                           double* mean_error = nullptr);

/// Concatenation of the selected centroids. Lives in the rotated space; no
/// inverse rotation is applied.
std::vector<float> reconstruct(const Codebook& cb, std::span<const std::uint8_t> codes);

/// Rotates the query and tabulates its subvector/centroid inner products.
LookupTable build_lookup_table(const Codebook& cb, std::span<const float> query);

/// Sum of table entries selected by the document's codes.
float adc_score(const LookupTable& table, std::span<const std::uint8_t> codes);

/// Top-n documents by quantized score. Uses a bounded heap of size n, never
/// a full sort. Scores non-increasing; ties broken by ascending row index.
std::vector<SearchHit> search_topk(const Codebook& cb, const CodeMatrix& codes,
                                   std::span<const float> query, std::size_t n);

/// search_topk with an externally built lookup table (saves the rotation
/// and table cost when scoring one query against several indexes).
std::vector<SearchHit> search_topk_with_table(const LookupTable& table,
                                              const CodeMatrix& codes, std::size_t n);

/// Exact byte count of the centroid + code sections of the on-disk index:
/// 4*K*D + N*M.
std::uint64_t index_payload_bytes(const Codebook& cb, const CodeMatrix& codes);

// "jpq" file: header [magic "JPQI", version u32=1, D u32, M u32, K u32,
// N u32, has_rotation u8], rotation (D*D f32, if present), centroids
// (M*K*(D/M) f32, subspace-major), codes (N*M u8, document-major), doc-id
// block as in the emb format. Little-endian; round-trips bit-exactly.

void serialize_index(const Codebook& cb, const CodeMatrix& codes, const std::string& path);
std::pair<Codebook, CodeMatrix> deserialize_index(const std::string& path);

}  // namespace jpq
