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

#include "jpq/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "jpq/emb_io.hpp"
#include "jpq/eval.hpp"

namespace jpq {

namespace {

std::string make_id(const char* prefix, std::uint32_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s%06u", prefix, i);
    return buf;
}

EmbeddingMatrix make_queries(const char* prefix, std::uint32_t count,
                             const EmbeddingMatrix& docs, const SyntheticSpec& spec,
                             RelevanceLabels& labels, Rng& rng) {
    std::normal_distribution<double> noise(0.0, spec.noise_scale);
    std::uniform_int_distribution<std::uint32_t> doc_pick(0, spec.num_docs - 1);

    EmbeddingMatrix q;
    q.dim = spec.feature_dim;
    q.values.resize(static_cast<std::size_t>(count) * spec.feature_dim);
    q.ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string qid = make_id(prefix, i);
        q.ids.push_back(qid);

        std::vector<std::uint32_t> rel;
        while (rel.size() < spec.relevant_per_query) {
            const std::uint32_t d = doc_pick(rng);
            if (std::find(rel.begin(), rel.end(), d) == rel.end()) rel.push_back(d);
        }
        auto row = std::span<float>(q.values).subspan(
            static_cast<std::size_t>(i) * spec.feature_dim, spec.feature_dim);
        for (std::uint32_t f = 0; f < spec.feature_dim; ++f) {
            double acc = 0.0;
            for (const std::uint32_t d : rel) acc += docs.row(d)[f];
            row[f] = static_cast<float>(acc / rel.size() + noise(rng));
        }
        for (const std::uint32_t d : rel) labels.relevant[qid].insert(docs.ids[d]);
    }
    return q;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    SyntheticDataset data;
    data.docs.dim = spec.feature_dim;
    data.docs.values.resize(static_cast<std::size_t>(spec.num_docs) * spec.feature_dim);
    for (auto& v : data.docs.values) v = static_cast<float>(unit(rng));
    data.docs.ids.reserve(spec.num_docs);
    for (std::uint32_t i = 0; i < spec.num_docs; ++i) {
        data.docs.ids.push_back(make_id("d", i));
    }

    data.train_queries = make_queries("qt", spec.num_train_queries, data.docs, spec,
                                      data.train_labels, rng);
    data.eval_queries = make_queries("qe", spec.num_eval_queries, data.docs, spec,
                                     data.eval_labels, rng);
    return data;
}

void write_synthetic(const SyntheticDataset& data, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    save_embeddings(data.docs, (dir / "corpus.emb").string());
    save_embeddings(data.train_queries, (dir / "queries-train.emb").string());
    save_embeddings(data.eval_queries, (dir / "queries-eval.emb").string());
    write_qrels(data.train_labels, (dir / "qrels-train.tsv").string());
    write_qrels(data.eval_labels, (dir / "qrels-eval.tsv").string());
}

}  // namespace jpq
