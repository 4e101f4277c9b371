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
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jpq/common.hpp"

namespace jpq {

/// Row-major matrix of embeddings (or raw features) with aligned string ids.
struct EmbeddingMatrix {
    std::uint32_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> values;  // count() * dim, row-major

    std::size_t count() const { return ids.size(); }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(values).subspan(i * dim, dim);
    }
    std::span<float> row_mut(std::size_t i) {
        return std::span<float>(values).subspan(i * dim, dim);
    }

    void validate() const {
        if (values.size() != ids.size() * static_cast<std::size_t>(dim)) {
            throw std::invalid_argument("EmbeddingMatrix: value count does not match ids*dim");
        }
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second) {
                throw std::invalid_argument("EmbeddingMatrix: duplicate id " + id);
            }
        }
        check_finite(values, "EmbeddingMatrix");
    }
};

/// Map id -> dense row index.
inline std::unordered_map<std::string, std::uint32_t> id_index(
    const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::uint32_t> out;
    out.reserve(ids.size());
    for (std::uint32_t i = 0; i < ids.size(); ++i) {
        out.emplace(ids[i], i);
    }
    return out;
}

/// Binary relevance judgments: query id -> set of relevant doc ids.
struct RelevanceLabels {
    std::unordered_map<std::string, std::unordered_set<std::string>> relevant;

    bool is_relevant(const std::string& qid, const std::string& did) const {
        auto it = relevant.find(qid);
        return it != relevant.end() && it->second.count(did) > 0;
    }

    /// Every referenced doc must exist in the corpus; every query needs at
    /// least one relevant document.
    void validate(const std::unordered_map<std::string, std::uint32_t>& corpus_ids) const {
        for (const auto& [qid, docs] : relevant) {
            if (docs.empty()) {
                throw std::invalid_argument("RelevanceLabels: query " + qid +
                                            " has no relevant documents");
            }
            for (const auto& did : docs) {
                if (corpus_ids.find(did) == corpus_ids.end()) {
                    throw std::invalid_argument("RelevanceLabels: unknown doc id " + did);
                }
            }
        }
    }
};

}  // namespace jpq
