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
#include <vector>

#include "jpq/common.hpp"

namespace jpq {

/// Product-quantization codebook: num_subspaces sets of num_centroids
/// sub-vectors of dimension sub_dim, plus an optional orthonormal rotation.
/// All scoring happens in the rotated space; documents are rotated before
/// quantization and queries at lookup-table time.
struct Codebook {
    std::uint32_t num_subspaces = 0;   // M
    std::uint32_t num_centroids = 0;   // K, <= 256 so codes fit one byte
    std::uint32_t sub_dim = 0;         // D / M
    std::vector<float> centroids;      // [M][K][sub_dim], subspace-major
    std::vector<float> rotation;       // D*D row-major, empty if none

    std::uint32_t dim() const { return num_subspaces * sub_dim; }
    bool has_rotation() const { return !rotation.empty(); }

    std::span<const float> centroid(std::uint32_t subspace, std::uint32_t j) const {
        return std::span<const float>(centroids)
            .subspan((static_cast<std::size_t>(subspace) * num_centroids + j) * sub_dim,
                     sub_dim);
    }
    std::span<float> centroid_mut(std::uint32_t subspace, std::uint32_t j) {
        return std::span<float>(centroids)
            .subspan((static_cast<std::size_t>(subspace) * num_centroids + j) * sub_dim,
                     sub_dim);
    }

    /// Applies the rotation (identity when absent) to a D-dim vector.
    std::vector<float> rotate(std::span<const float> v) const {
        if (v.size() != dim()) {
            throw std::invalid_argument("rotate: dimension mismatch");
        }
        if (!has_rotation()) {
            return std::vector<float>(v.begin(), v.end());
        }
        const std::uint32_t d = dim();
        std::vector<float> out(d);
        for (std::uint32_t r = 0; r < d; ++r) {
            out[r] = static_cast<float>(
                dot(&rotation[static_cast<std::size_t>(r) * d], v.data(), d));
        }
        return out;
    }

    /// Applies the transpose of the rotation (inverse, since orthonormal).
    std::vector<float> rotate_back(std::span<const float> v) const {
        if (v.size() != dim()) {
            throw std::invalid_argument("rotate_back: dimension mismatch");
        }
        if (!has_rotation()) {
            return std::vector<float>(v.begin(), v.end());
        }
        const std::uint32_t d = dim();
        std::vector<float> out(d, 0.0f);
        for (std::uint32_t r = 0; r < d; ++r) {
            const float x = v[r];
            const float* row = &rotation[static_cast<std::size_t>(r) * d];
            for (std::uint32_t c = 0; c < d; ++c) {
                out[c] += row[c] * x;
            }
        }
        return out;
    }

    void validate() const;
};

/// One byte code per (document, subspace): the Index Assignments.
struct CodeMatrix {
    std::uint32_t num_subspaces = 0;
    std::vector<std::uint8_t> codes;  // count() * num_subspaces, document-major
    std::vector<std::string> doc_ids;

    std::size_t count() const { return doc_ids.size(); }

    std::span<const std::uint8_t> row(std::size_t i) const {
        return std::span<const std::uint8_t>(codes).subspan(
            i * num_subspaces, num_subspaces);
    }
};

/// Per-query table of query-subvector/centroid inner products.
struct LookupTable {
    std::uint32_t num_subspaces = 0;
    std::uint32_t num_centroids = 0;
    std::vector<float> tau;  // [M][K]

    float at(std::uint32_t subspace, std::uint32_t j) const {
        return tau[static_cast<std::size_t>(subspace) * num_centroids + j];
    }
};

struct SearchHit {
    std::uint32_t row = 0;
    float score = 0.0f;
};

inline void Codebook::validate() const {
    if (num_subspaces == 0 || num_centroids == 0 || sub_dim == 0) {
        throw std::invalid_argument("Codebook: zero dimension");
    }
    if (num_centroids > 256) {
        throw std::invalid_argument("Codebook: num_centroids must fit one byte");
    }
    if (centroids.size() != static_cast<std::size_t>(num_subspaces) * num_centroids * sub_dim) {
        throw std::invalid_argument("Codebook: centroid storage size mismatch");
    }
    check_finite(centroids, "Codebook centroids");
    if (has_rotation()) {
        const std::uint32_t d = dim();
        if (rotation.size() != static_cast<std::size_t>(d) * d) {
            throw std::invalid_argument("Codebook: rotation size mismatch");
        }
        // RtR must be close to identity.
        for (std::uint32_t i = 0; i < d; ++i) {
            for (std::uint32_t j = i; j < d; ++j) {
                double acc = 0.0;
                for (std::uint32_t r = 0; r < d; ++r) {
                    acc += static_cast<double>(rotation[static_cast<std::size_t>(r) * d + i]) *
                           rotation[static_cast<std::size_t>(r) * d + j];
                }
                const double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(acc - want) >= 1e-5) {
                    throw std::invalid_argument("Codebook: rotation not orthonormal");
                }
            }
        }
    }
}

}  // namespace jpq
