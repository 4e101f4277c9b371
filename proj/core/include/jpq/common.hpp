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

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jpq {

/// Deterministic RNG used by every randomized operation. Same seed on the
/// same platform gives bit-identical results.
using Rng = std::mt19937_64;

/// Raised when an on-disk index or checkpoint is malformed. Carries the
/// byte offset where parsing failed.
class CorruptIndexError : public std::runtime_error {
public:
    CorruptIndexError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc{0};
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

/// Relevance score between two embeddings of equal dimension.
inline float inner_product(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("inner_product: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    return dot(a.data(), b.data(), a.size());
}

/// Splits an embedding into num_subspaces equal contiguous views.
/// Concatenating the views reproduces the input exactly.
inline std::vector<std::span<const float>> split_subvectors(
    std::span<const float> e, std::size_t num_subspaces) {
    if (num_subspaces == 0 || e.size() % num_subspaces != 0) {
        throw std::invalid_argument(
            "split_subvectors: dimension " + std::to_string(e.size()) +
            " not divisible by " + std::to_string(num_subspaces));
    }
    const std::size_t sub = e.size() / num_subspaces;
    std::vector<std::span<const float>> out;
    out.reserve(num_subspaces);
    for (std::size_t i = 0; i < num_subspaces; ++i) {
        out.push_back(e.subspan(i * sub, sub));
    }
    return out;
}

inline void check_finite(std::span<const float> v, const char* what) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) + ": non-finite value");
        }
    }
}

}  // namespace jpq
