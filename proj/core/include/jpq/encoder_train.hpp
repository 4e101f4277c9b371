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
#include <vector>

#include "jpq/encoder.hpp"
#include "jpq/matrix.hpp"

namespace jpq {

/// One pairwise training example: (query, relevant doc, irrelevant doc).
struct TrainingTriple {
    std::string query_id;
    std::string positive_id;
    std::string negative_id;
};

enum class NegativeSource { random_irrelevant, given_list };

struct Stage1Config {
    std::uint32_t epochs = 20;
    double lr = 0.1;
    std::uint64_t seed = 0;
    NegativeSource negative_source = NegativeSource::random_irrelevant;
};

struct Stage1Stats {
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

/// Pre-index training of both towers with the logistic pairwise loss on
/// uncompressed scores, plain SGD. given_triples is required (and only
/// used) with NegativeSource::given_list.
Stage1Stats train_dual_encoders(EncoderParams<float>& query_encoder,
                                EncoderParams<float>& doc_encoder,
                                const EmbeddingMatrix& doc_features,
                                const EmbeddingMatrix& query_features,
                                const RelevanceLabels& labels,
                                const Stage1Config& config,
                                const std::vector<TrainingTriple>* given_triples = nullptr);

/// Encodes every row of a feature matrix.
EmbeddingMatrix encode_matrix(const EncoderParams<float>& params,
                              const EmbeddingMatrix& features);

}  // namespace jpq
