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

#include "jpq/jpq_trainer.hpp"

#include <algorithm>
#include <cmath>

namespace jpq {

namespace {

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PairLoss pair_loss_from_scores(double s_pos, double s_neg, PairwiseLoss kind,
                               double rank_weight) {
    const double w = (kind == PairwiseLoss::lambdarank) ? rank_weight : 1.0;
    if (w < 0.0) {
        throw std::invalid_argument("pair_loss_from_scores: negative rank weight");
    }
    const double diff = s_neg - s_pos;
    return {w * softplus(diff), w * sigmoid(diff)};
}

PairLoss ranking_oriented_loss(const Codebook& cb, std::span<const float> query,
                               std::span<const std::uint8_t> codes_pos,
                               std::span<const std::uint8_t> codes_neg,
                               PairwiseLoss kind, double rank_weight) {
    const std::vector<float> q_rot = cb.rotate(query);
    const std::vector<float> rec_pos = reconstruct(cb, codes_pos);
    const std::vector<float> rec_neg = reconstruct(cb, codes_neg);
    const double s_pos = dot(q_rot.data(), rec_pos.data(), q_rot.size());
    const double s_neg = dot(q_rot.data(), rec_neg.data(), q_rot.size());
    return pair_loss_from_scores(s_pos, s_neg, kind, rank_weight);
}

SparseCentroidGrad centroid_gradients(std::span<const PairGradient> pairs,
                                      const Codebook& cb) {
    SparseCentroidGrad grad;
    for (const auto& p : pairs) {
        if (p.alpha < 0.0) {
            throw std::invalid_argument("centroid_gradients: negative alpha");
        }
        for (std::uint32_t s = 0; s < cb.num_subspaces; ++s) {
            const std::uint8_t jp = p.codes_pos[s];
            const std::uint8_t jn = p.codes_neg[s];
            if (jp == jn) continue;  // contributions cancel exactly
            const float* qs = p.rotated_query.data() + static_cast<std::size_t>(s) * cb.sub_dim;
            auto& gp = grad[{s, jp}];
            auto& gn = grad[{s, jn}];
            if (gp.empty()) gp.assign(cb.sub_dim, 0.0);
            if (gn.empty()) gn.assign(cb.sub_dim, 0.0);
            for (std::uint32_t i = 0; i < cb.sub_dim; ++i) {
                gp[i] -= p.alpha * qs[i];
                gn[i] += p.alpha * qs[i];
            }
        }
    }
    return grad;
}

GradientBuffer<float> query_encoder_gradients(std::span<const QueryPairTerm> terms,
                                              const EncoderParams<float>& params,
                                              const Codebook& cb) {
    GradientBuffer<float> buf(params);
    for (const auto& t : terms) {
        const std::vector<float> upstream = cb.rotate_back(t.upstream_rotated);
        encode_backward<float>(params, t.features, upstream, buf);
    }
    return buf;
}

std::optional<std::uint32_t> NegativePool::retrieved_rank(std::uint32_t doc_row) const {
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        if (retrieved[i].row == doc_row) return static_cast<std::uint32_t>(i + 1);
    }
    return std::nullopt;
}

NegativePool retrieve_negative_pool(const Codebook& cb, const CodeMatrix& codes,
                                    const LookupTable& table, const std::string& query_id,
                                    const RelevanceLabels& labels, std::uint32_t n_hat) {
    (void)cb;
    const auto it = labels.relevant.find(query_id);
    const std::size_t num_pos = it != labels.relevant.end() ? it->second.size() : 0;
    std::size_t depth = std::min<std::size_t>(codes.count(),
                                              static_cast<std::size_t>(n_hat) + num_pos);
    for (;;) {
        NegativePool pool;
        pool.retrieved = search_topk_with_table(table, codes, depth);
        for (std::size_t i = 0; i < pool.retrieved.size() && pool.rows.size() < n_hat; ++i) {
            const std::uint32_t row = pool.retrieved[i].row;
            if (it != labels.relevant.end() && it->second.count(codes.doc_ids[row])) continue;
            pool.rows.push_back(row);
            pool.ranks.push_back(static_cast<std::uint32_t>(i + 1));
        }
        if (!pool.rows.empty()) return pool;
        if (depth >= codes.count()) {
            throw std::invalid_argument("retrieve_negative_pool: no irrelevant document for " +
                                        query_id);
        }
        depth = std::min<std::size_t>(codes.count(), depth * 2);
    }
}

namespace {

// Uniform sample of k pool positions without replacement (partial
// Fisher-Yates, deterministic under the rng).
std::vector<std::size_t> sample_positions(std::size_t pool_size, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> sample_negatives_end_to_end(
    const EncoderParams<float>& query_encoder, const Codebook& cb, const CodeMatrix& codes,
    const EmbeddingMatrix& query_features, std::span<const std::uint32_t> query_rows,
    const RelevanceLabels& labels, std::uint32_t n_hat, std::uint32_t k_sample, Rng& rng) {
    if (n_hat < k_sample) {
        throw std::invalid_argument("sample_negatives_end_to_end: n_hat < k_sample");
    }
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(query_rows.size());
    for (const std::uint32_t qrow : query_rows) {
        const auto q = encode<float>(query_encoder, query_features.row(qrow));
        const auto table = build_lookup_table(cb, q);
        const auto pool = retrieve_negative_pool(cb, codes, table, query_features.ids[qrow],
                                                 labels, n_hat);
        const std::size_t k = std::min<std::size_t>(k_sample, pool.rows.size());
        std::vector<std::uint32_t> negs;
        negs.reserve(k);
        for (const std::size_t pos : sample_positions(pool.rows.size(), k, rng)) {
            negs.push_back(pool.rows[pos]);
        }
        out.push_back(std::move(negs));
    }
    return out;
}

RetrievalMetrics evaluate_retrieval(const EncoderParams<float>& query_encoder,
                                    const Codebook& cb, const CodeMatrix& codes,
                                    const EmbeddingMatrix& query_features,
                                    const RelevanceLabels& labels) {
    RetrievalMetrics m;
    std::size_t counted = 0;
    const std::size_t depth = std::min<std::size_t>(100, codes.count());
    for (std::size_t qrow = 0; qrow < query_features.count(); ++qrow) {
        const auto it = labels.relevant.find(query_features.ids[qrow]);
        if (it == labels.relevant.end()) continue;
        const auto q = encode<float>(query_encoder, query_features.row(qrow));
        const auto hits = search_topk(cb, codes, q, depth);
        double rr = 0.0;
        std::size_t found = 0;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            if (it->second.count(codes.doc_ids[hits[i].row])) {
                if (rr == 0.0 && i < 10) rr = 1.0 / static_cast<double>(i + 1);
                ++found;
            }
        }
        m.mrr10 += rr;
        m.recall100 += static_cast<double>(found) / static_cast<double>(it->second.size());
        ++counted;
    }
    if (counted > 0) {
        m.mrr10 /= static_cast<double>(counted);
        m.recall100 /= static_cast<double>(counted);
    }
    return m;
}

namespace {

// One AdamW coordinate step; decay term is decoupled from the moments.
template <typename T>
void adamw_step(T& param, double grad, double& m, double& v, double lr, double beta1,
                double beta2, double eps, double decay, std::uint64_t t) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    param = static_cast<T>(param - lr * (mhat / (std::sqrt(vhat) + eps) + decay * param));
}

}  // namespace

std::vector<StepMetrics> jpq_train(TrainState& state,
                                   const EmbeddingMatrix& train_query_features,
                                   const RelevanceLabels& train_labels,
                                   const EmbeddingMatrix* val_query_features,
                                   const RelevanceLabels* val_labels,
                                   const JpqConfig& config,
                                   const EmbeddingMatrix* doc_embeddings) {
    config.validate();
    if (config.uncompressed_loss && doc_embeddings == nullptr) {
        throw std::invalid_argument("jpq_train: uncompressed_loss needs document embeddings");
    }
    const Codebook& cb = state.codebook;
    const CodeMatrix& codes = state.codes;
    const auto doc_rows = id_index(codes.doc_ids);

    // Labeled queries in deterministic order.
    std::vector<std::uint32_t> train_rows;
    for (std::uint32_t i = 0; i < train_query_features.count(); ++i) {
        if (train_labels.relevant.count(train_query_features.ids[i])) {
            train_rows.push_back(i);
        }
    }
    if (train_rows.empty()) {
        throw std::invalid_argument("jpq_train: no labeled training query");
    }

    Rng rng(config.seed);
    std::vector<std::uint32_t> order = train_rows;
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    std::vector<StepMetrics> log;
    log.reserve(config.steps);
    RetrievalMetrics val{};
    if (val_query_features && val_labels) {
        val = evaluate_retrieval(state.query_encoder, cb, codes, *val_query_features,
                                 *val_labels);
    }

    std::vector<PairGradient> cent_pairs;
    std::vector<QueryPairTerm> enc_terms;
    std::vector<std::vector<float>> enc_upstreams;  // keeps spans in enc_terms alive

    for (std::uint32_t s = 0; s < config.steps; ++s) {
        cent_pairs.clear();
        enc_terms.clear();
        enc_upstreams.clear();
        double batch_loss = 0.0;
        std::size_t pair_count = 0;

        for (std::uint32_t b = 0; b < config.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const std::uint32_t qrow = order[cursor++];
            const std::string& qid = train_query_features.ids[qrow];
            const auto q = encode<float>(state.query_encoder, train_query_features.row(qrow));
            const auto table = build_lookup_table(cb, q);
            const auto pool = retrieve_negative_pool(cb, codes, table, qid, train_labels,
                                                     config.n_hat);

            // Positive: uniform over the labeled relevant documents.
            const auto& rel = train_labels.relevant.at(qid);
            std::vector<std::string> pos_ids(rel.begin(), rel.end());
            std::sort(pos_ids.begin(), pos_ids.end());
            std::uniform_int_distribution<std::size_t> pos_pick(0, pos_ids.size() - 1);
            const std::uint32_t pos_row = doc_rows.at(pos_ids[pos_pick(rng)]);
            const auto pos_rank = pool.retrieved_rank(pos_row);

            const std::size_t k =
                std::min<std::size_t>(config.negatives_per_query, pool.rows.size());
            const auto picks = sample_positions(pool.rows.size(), k, rng);

            const std::vector<float> q_rot = cb.rotate(q);
            double s_pos;
            std::vector<float> rec_pos;
            if (config.uncompressed_loss) {
                s_pos = dot(q.data(), doc_embeddings->row(pos_row).data(), q.size());
            } else {
                rec_pos = reconstruct(cb, codes.row(pos_row));
                s_pos = adc_score(table, codes.row(pos_row));
            }

            for (const std::size_t pick : picks) {
                const std::uint32_t neg_row = pool.rows[pick];
                double weight = 1.0;
                if (config.pairwise_loss == PairwiseLoss::lambdarank && pos_rank) {
                    weight = std::abs(1.0 / static_cast<double>(*pos_rank) -
                                      1.0 / static_cast<double>(pool.ranks[pick]));
                }
                double s_neg;
                if (config.uncompressed_loss) {
                    s_neg = dot(q.data(), doc_embeddings->row(neg_row).data(), q.size());
                } else {
                    s_neg = adc_score(table, codes.row(neg_row));
                }
                const PairLoss pl =
                    pair_loss_from_scores(s_pos, s_neg, config.pairwise_loss, weight);
                batch_loss += pl.loss;
                ++pair_count;

                if (config.uncompressed_loss) {
                    std::vector<float> up(q.size());
                    const auto dp = doc_embeddings->row(pos_row);
                    const auto dn = doc_embeddings->row(neg_row);
                    for (std::size_t i = 0; i < q.size(); ++i) {
                        up[i] = static_cast<float>(pl.alpha * (dn[i] - dp[i]));
                    }
                    // No rotation in the uncompressed score path.
                    enc_upstreams.push_back(std::move(up));
                } else {
                    const std::vector<float> rec_neg = reconstruct(cb, codes.row(neg_row));
                    std::vector<float> up(q.size());
                    for (std::size_t i = 0; i < q.size(); ++i) {
                        up[i] = static_cast<float>(pl.alpha * (rec_neg[i] - rec_pos[i]));
                    }
                    enc_upstreams.push_back(cb.rotate_back(up));
                    if (config.lr_centroids > 0.0) {
                        PairGradient pg;
                        pg.alpha = pl.alpha;
                        pg.rotated_query = q_rot;
                        const auto cp = codes.row(pos_row);
                        const auto cn = codes.row(neg_row);
                        pg.codes_pos.assign(cp.begin(), cp.end());
                        pg.codes_neg.assign(cn.begin(), cn.end());
                        cent_pairs.push_back(std::move(pg));
                    }
                }
                enc_terms.push_back(QueryPairTerm{train_query_features.row(qrow), {}});
            }
        }

        const double mean_loss =
            pair_count > 0 ? batch_loss / static_cast<double>(pair_count) : 0.0;
        if (!std::isfinite(mean_loss)) {
            throw std::runtime_error("jpq_train: non-finite loss at step " +
                                     std::to_string(state.step + 1));
        }
        const double scale = pair_count > 0 ? 1.0 / static_cast<double>(pair_count) : 0.0;
        ++state.step;

        if (config.lr_query > 0.0 && pair_count > 0) {
            // Upstreams are already in encoder-output space (rotated back or
            // never rotated); run plain backprop and sum.
            GradientBuffer<float> gbuf(state.query_encoder);
            for (std::size_t i = 0; i < enc_terms.size(); ++i) {
                encode_backward<float>(state.query_encoder, enc_terms[i].features,
                                       enc_upstreams[i], gbuf);
            }
            for (std::size_t li = 0; li < state.query_encoder.layers.size(); ++li) {
                auto& l = state.query_encoder.layers[li];
                const auto& g = gbuf.grads[li];
                auto& m = state.enc_m.grads[li];
                auto& v = state.enc_v.grads[li];
                for (std::size_t i = 0; i < l.weight.size(); ++i) {
                    adamw_step(l.weight[i], g.weight[i] * scale, m.weight[i], v.weight[i],
                               config.lr_query, config.beta1, config.beta2, config.adam_eps,
                               config.weight_decay, state.step);
                }
                for (std::size_t i = 0; i < l.bias.size(); ++i) {
                    adamw_step(l.bias[i], g.bias[i] * scale, m.bias[i], v.bias[i],
                               config.lr_query, config.beta1, config.beta2, config.adam_eps,
                               0.0, state.step);
                }
            }
        }

        if (config.lr_centroids > 0.0 && !cent_pairs.empty()) {
            const auto grad = centroid_gradients(cent_pairs, state.codebook);
            for (const auto& [key, g] : grad) {
                const std::size_t base =
                    (static_cast<std::size_t>(key.first) * cb.num_centroids + key.second) *
                    cb.sub_dim;
                for (std::uint32_t i = 0; i < cb.sub_dim; ++i) {
                    adamw_step(state.codebook.centroids[base + i], g[i] * scale,
                               state.cent_m[base + i], state.cent_v[base + i],
                               config.lr_centroids, config.beta1, config.beta2,
                               config.adam_eps, 0.0, state.step);
                }
            }
        }

        if (val_query_features && val_labels && config.validation_interval > 0 &&
            (state.step % config.validation_interval == 0 || s + 1 == config.steps)) {
            val = evaluate_retrieval(state.query_encoder, cb, codes, *val_query_features,
                                     *val_labels);
        }
        log.push_back({static_cast<std::uint32_t>(state.step), mean_loss, val.mrr10,
                       val.recall100});
    }
    return log;
}

std::vector<AblationRow> ablation_variants(const EncoderParams<float>& query_encoder,
                                           const Codebook& cb, const CodeMatrix& codes,
                                           const EmbeddingMatrix& doc_embeddings,
                                           const EmbeddingMatrix& train_query_features,
                                           const RelevanceLabels& train_labels,
                                           const EmbeddingMatrix& eval_query_features,
                                           const RelevanceLabels& eval_labels,
                                           const JpqConfig& config) {
    std::vector<AblationRow> rows;

    auto run_variant = [&](const std::string& name, JpqConfig cfg) {
        TrainState state(query_encoder, cb, codes);
        jpq_train(state, train_query_features, train_labels, nullptr, nullptr, cfg,
                  &doc_embeddings);
        const auto m = evaluate_retrieval(state.query_encoder, state.codebook, state.codes,
                                          eval_query_features, eval_labels);
        rows.push_back({name, m.mrr10, m.recall100});
    };

    {
        const auto m =
            evaluate_retrieval(query_encoder, cb, codes, eval_query_features, eval_labels);
        rows.push_back({"OPQ", m.mrr10, m.recall100});
    }
    {
        JpqConfig cfg = config;
        cfg.uncompressed_loss = true;
        cfg.lr_centroids = 0.0;
        run_variant("+JPQ Neg", cfg);
    }
    {
        JpqConfig cfg = config;
        cfg.uncompressed_loss = false;
        cfg.lr_centroids = 0.0;
        run_variant("+JPQ Loss", cfg);
    }
    {
        JpqConfig cfg = config;
        cfg.uncompressed_loss = false;
        run_variant("+Train PQ", cfg);
    }
    return rows;
}

}  // namespace jpq
