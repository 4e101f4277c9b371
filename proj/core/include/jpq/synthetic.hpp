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
#include <string>

#include "jpq/matrix.hpp"

namespace jpq {

struct SyntheticSpec {
    std::uint32_t num_docs = 5000;
    std::uint32_t num_train_queries = 2000;
    std::uint32_t num_eval_queries = 500;
    std::uint32_t feature_dim = 32;
    std::uint32_t relevant_per_query = 1;
    double noise_scale = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_docs == 0 || feature_dim == 0) {
            throw std::invalid_argument("SyntheticSpec: empty corpus or zero dim");
        }
        if (relevant_per_query < 1 || relevant_per_query > num_docs) {
            throw std::invalid_argument("SyntheticSpec: bad relevant_per_query");
        }
        if (noise_scale < 0.0) {
            throw std::invalid_argument("SyntheticSpec: negative noise_scale");
        }
    }
};

struct SyntheticDataset {
    EmbeddingMatrix docs;
    EmbeddingMatrix train_queries;
    EmbeddingMatrix eval_queries;
    RelevanceLabels train_labels;
    RelevanceLabels eval_labels;
};

/// Gaussian doc features; each query is the mean of its designated relevant
/// docs plus Gaussian noise of scale noise_scale. Deterministic under seed.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes corpus.emb, queries-train.emb, queries-eval.emb, qrels-train.tsv
/// and qrels-eval.tsv into out_dir.
void write_synthetic(const SyntheticDataset& data, const std::string& out_dir);

}  // namespace jpq
