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

#include "jpq/encoder_train.hpp"

#include <algorithm>
#include <cmath>

namespace jpq {

namespace {

struct TripleRows {
    std::uint32_t query = 0;
    std::uint32_t positive = 0;
    std::uint32_t negative = 0;
};

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void sgd_apply(EncoderParams<float>& p, const GradientBuffer<float>& g, double lr) {
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        auto& l = p.layers[li];
        const auto& gl = g.grads[li];
        for (std::size_t i = 0; i < l.weight.size(); ++i) {
            l.weight[i] -= static_cast<float>(lr * gl.weight[i]);
        }
        for (std::size_t i = 0; i < l.bias.size(); ++i) {
            l.bias[i] -= static_cast<float>(lr * gl.bias[i]);
        }
    }
}

}  // namespace

EmbeddingMatrix encode_matrix(const EncoderParams<float>& params,
                              const EmbeddingMatrix& features) {
    EmbeddingMatrix out;
    out.dim = params.output_dim();
    out.ids = features.ids;
    out.values.resize(features.count() * static_cast<std::size_t>(out.dim));
    for (std::size_t i = 0; i < features.count(); ++i) {
        const auto e = encode<float>(params, features.row(i));
        std::copy(e.begin(), e.end(), out.row_mut(i).begin());
    }
    return out;
}

Stage1Stats train_dual_encoders(EncoderParams<float>& query_encoder,
                                EncoderParams<float>& doc_encoder,
                                const EmbeddingMatrix& doc_features,
                                const EmbeddingMatrix& query_features,
                                const RelevanceLabels& labels,
                                const Stage1Config& config,
                                const std::vector<TrainingTriple>* given_triples) {
    if (labels.relevant.empty()) {
        throw std::invalid_argument("train_dual_encoders: empty labels");
    }
    if (config.epochs == 0) {
        throw std::invalid_argument("train_dual_encoders: epochs must be >= 1");
    }
    if (config.negative_source == NegativeSource::given_list && given_triples == nullptr) {
        throw std::invalid_argument("train_dual_encoders: given_list needs triples");
    }

    const auto doc_rows = id_index(doc_features.ids);
    const auto query_rows = id_index(query_features.ids);
    labels.validate(doc_rows);

    // Deterministic query order regardless of map iteration order.
    std::vector<std::string> qids;
    qids.reserve(labels.relevant.size());
    for (const auto& [qid, _] : labels.relevant) {
        if (query_rows.count(qid)) qids.push_back(qid);
    }
    std::sort(qids.begin(), qids.end());
    if (qids.empty()) {
        throw std::invalid_argument("train_dual_encoders: no labeled query has features");
    }

    Rng rng(config.seed);
    Stage1Stats stats;
    std::vector<TripleRows> triples;

    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        triples.clear();
        if (config.negative_source == NegativeSource::given_list) {
            for (const auto& t : *given_triples) {
                triples.push_back({query_rows.at(t.query_id), doc_rows.at(t.positive_id),
                                   doc_rows.at(t.negative_id)});
            }
        } else {
            std::uniform_int_distribution<std::uint32_t> doc_pick(
                0, static_cast<std::uint32_t>(doc_features.count() - 1));
            for (const auto& qid : qids) {
                const auto& rel = labels.relevant.at(qid);
                std::vector<std::string> pos(rel.begin(), rel.end());
                std::sort(pos.begin(), pos.end());
                const auto& pid = pos[epoch % pos.size()];
                std::uint32_t neg = doc_pick(rng);
                while (rel.count(doc_features.ids[neg])) neg = doc_pick(rng);
                triples.push_back({query_rows.at(qid), doc_rows.at(pid), neg});
            }
        }
        std::shuffle(triples.begin(), triples.end(), rng);

        double epoch_loss = 0.0;
        for (const auto& t : triples) {
            const auto q = encode<float>(query_encoder, query_features.row(t.query));
            const auto dp = encode<float>(doc_encoder, doc_features.row(t.positive));
            const auto dn = encode<float>(doc_encoder, doc_features.row(t.negative));

            const double s_pos = dot(q.data(), dp.data(), q.size());
            const double s_neg = dot(q.data(), dn.data(), q.size());
            const double diff = s_neg - s_pos;
            epoch_loss += softplus(diff);
            const float alpha = static_cast<float>(sigmoid(diff));

            std::vector<float> up_q(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) up_q[i] = alpha * (dn[i] - dp[i]);
            std::vector<float> up_pos(q.size());
            std::vector<float> up_neg(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) {
                up_pos[i] = -alpha * q[i];
                up_neg[i] = alpha * q[i];
            }

            GradientBuffer<float> gq(query_encoder);
            encode_backward<float>(query_encoder, query_features.row(t.query), up_q, gq);
            GradientBuffer<float> gd(doc_encoder);
            encode_backward<float>(doc_encoder, doc_features.row(t.positive), up_pos, gd);
            encode_backward<float>(doc_encoder, doc_features.row(t.negative), up_neg, gd);

            sgd_apply(query_encoder, gq, config.lr);
            sgd_apply(doc_encoder, gd, config.lr);
        }
        epoch_loss /= static_cast<double>(triples.size());
        if (epoch == 0) stats.first_epoch_loss = epoch_loss;
        stats.last_epoch_loss = epoch_loss;
    }
    return stats;
}

}  // namespace jpq
