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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jpq/codebook.hpp"
#include "jpq/encoder.hpp"
#include "jpq/index.hpp"
#include "jpq/matrix.hpp"

namespace jpq {

enum class PairwiseLoss : std::uint8_t { ranknet = 0, lambdarank = 1 };

struct JpqConfig {
    std::uint32_t batch_size = 32;
    std::uint32_t n_hat = 200;            // negative pool depth
    std::uint32_t negatives_per_query = 1;
    double lr_query = 5e-6;
    double lr_centroids = 1e-4;
    std::uint32_t steps = 0;
    PairwiseLoss pairwise_loss = PairwiseLoss::lambdarank;
    std::uint64_t seed = 0;
    std::uint32_t validation_interval = 200;
    // AdamW settings; decoupled decay is applied to encoder weights only.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    // Ablation switch: compute the pairwise loss on uncompressed scores
    // against raw document embeddings instead of quantized scores.
    bool uncompressed_loss = false;

    void validate() const {
        if (negatives_per_query < 1 || n_hat < negatives_per_query) {
            throw std::invalid_argument("JpqConfig: need n_hat >= negatives_per_query >= 1");
        }
        if (lr_query < 0 || lr_centroids < 0) {
            throw std::invalid_argument("JpqConfig: negative learning rate");
        }
        if (batch_size == 0) {
            throw std::invalid_argument("JpqConfig: batch_size must be >= 1");
        }
    }
};

/// Loss value and the shared gradient magnitude alpha
/// (-dloss/ds_pos == dloss/ds_neg >= 0).
struct PairLoss {
    double loss = 0.0;
    double alpha = 0.0;
};

/// Pairwise loss from the two scores. The lambdarank variant is the
/// logistic loss scaled by a non-negative rank weight; ranknet ignores the
/// weight. Pure double math, usable directly in gradient checks.
PairLoss pair_loss_from_scores(double s_pos, double s_neg, PairwiseLoss kind,
                               double rank_weight = 1.0);

/// Quantized-score pairwise loss for one (query, d+, d-) triple. The query
/// is the raw encoder output; scoring happens in the rotated space.
PairLoss ranking_oriented_loss(const Codebook& cb, std::span<const float> query,
                               std::span<const std::uint8_t> codes_pos,
                               std::span<const std::uint8_t> codes_neg,
                               PairwiseLoss kind, double rank_weight = 1.0);

/// One pair's contribution to the centroid gradients.
struct PairGradient {
    double alpha = 0.0;
    std::vector<float> rotated_query;
    std::vector<std::uint8_t> codes_pos;
    std::vector<std::uint8_t> codes_neg;
};

/// Sparse gradient over centroids: (subspace, centroid) -> sub_dim values.
/// Per pair: -alpha*q_i at the positive's code, +alpha*q_i at the
/// negative's code; subspaces where the two codes agree contribute exactly
/// zero and stay absent.
using SparseCentroidGrad = std::map<std::pair<std::uint32_t, std::uint32_t>,
                                    std::vector<double>>;

SparseCentroidGrad centroid_gradients(std::span<const PairGradient> pairs,
                                      const Codebook& cb);

/// One pair's upstream gradient for the query encoder, already in the
/// rotated space: alpha * (recon(d-) - recon(d+)).
struct QueryPairTerm {
    std::span<const float> features;
    std::vector<float> upstream_rotated;
};

/// Backpropagates each term through the fixed rotation (transpose) and then
/// through the encoder; sums over the batch.
GradientBuffer<float> query_encoder_gradients(std::span<const QueryPairTerm> terms,
                                              const EncoderParams<float>& params,
                                              const Codebook& cb);

/// Negative pool for one query, retrieved with the current encoder and
/// centroids over the frozen code matrix.
struct NegativePool {
    std::vector<std::uint32_t> rows;    // irrelevant doc rows, rank order, <= n_hat
    std::vector<std::uint32_t> ranks;   // 1-based position in the retrieved list
    /// 1-based retrieved rank of a given doc row, if it was retrieved.
    std::optional<std::uint32_t> retrieved_rank(std::uint32_t doc_row) const;
    std::vector<SearchHit> retrieved;   // full ranked list at the depth used
};

NegativePool retrieve_negative_pool(const Codebook& cb, const CodeMatrix& codes,
                                    const LookupTable& table, const std::string& query_id,
                                    const RelevanceLabels& labels, std::uint32_t n_hat);

/// Per-query end-to-end negatives: encode with the current query encoder,
/// search with the current centroids, drop labeled positives, truncate to
/// n_hat, then sample k_sample uniformly without replacement.
std::vector<std::vector<std::uint32_t>> sample_negatives_end_to_end(
    const EncoderParams<float>& query_encoder, const Codebook& cb, const CodeMatrix& codes,
    const EmbeddingMatrix& query_features, std::span<const std::uint32_t> query_rows,
    const RelevanceLabels& labels, std::uint32_t n_hat, std::uint32_t k_sample, Rng& rng);

/// Mutable state of joint training. Index Assignments and the rotation are
/// frozen; only the query encoder and the centroids move.
struct TrainState {
    EncoderParams<float> query_encoder;
    Codebook codebook;
    CodeMatrix codes;
    GradientBuffer<double> enc_m;
    GradientBuffer<double> enc_v;
    std::vector<double> cent_m;
    std::vector<double> cent_v;
    std::uint64_t step = 0;

    TrainState(EncoderParams<float> qe, Codebook cb, CodeMatrix cm)
        : query_encoder(std::move(qe)),
          codebook(std::move(cb)),
          codes(std::move(cm)),
          enc_m(convert_encoder<float, double>(query_encoder)),
          enc_v(convert_encoder<float, double>(query_encoder)),
          cent_m(codebook.centroids.size(), 0.0),
          cent_v(codebook.centroids.size(), 0.0) {}
};

struct StepMetrics {
    std::uint32_t step = 0;
    double loss = 0.0;
    double mrr10 = 0.0;
    double recall100 = 0.0;
};

struct RetrievalMetrics {
    double mrr10 = 0.0;
    double recall100 = 0.0;
};

/// MRR@10 / Recall@100 of the quantized index under a given query encoder.
RetrievalMetrics evaluate_retrieval(const EncoderParams<float>& query_encoder,
                                    const Codebook& cb, const CodeMatrix& codes,
                                    const EmbeddingMatrix& query_features,
                                    const RelevanceLabels& labels);

/// Joint training loop. doc_embeddings is only consulted when
/// config.uncompressed_loss is set. Returns one metrics row per step;
/// mrr/recall columns carry the latest validation values.
std::vector<StepMetrics> jpq_train(TrainState& state,
                                   const EmbeddingMatrix& train_query_features,
                                   const RelevanceLabels& train_labels,
                                   const EmbeddingMatrix* val_query_features,
                                   const RelevanceLabels* val_labels,
                                   const JpqConfig& config,
                                   const EmbeddingMatrix* doc_embeddings = nullptr);

struct AblationRow {
    std::string name;
    double mrr10 = 0.0;
    double recall100 = 0.0;
};

/// Runs the four-variant ladder from the same initial state: no training,
/// encoder-only training with uncompressed loss, encoder-only training with
/// quantized loss, and full joint training.
std::vector<AblationRow> ablation_variants(const EncoderParams<float>& query_encoder,
                                           const Codebook& cb, const CodeMatrix& codes,
                                           const EmbeddingMatrix& doc_embeddings,
                                           const EmbeddingMatrix& train_query_features,
                                           const RelevanceLabels& train_labels,
                                           const EmbeddingMatrix& eval_query_features,
                                           const RelevanceLabels& eval_labels,
                                           const JpqConfig& config);

}  // namespace jpq
