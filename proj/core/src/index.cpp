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

#include "jpq/index.hpp"

#include <algorithm>
#include <limits>

#include "jpq/detail/binary_io.hpp"

namespace jpq {

CodeMatrix quantize_corpus(const Codebook& cb, const EmbeddingMatrix& embeddings,
                           double* mean_error) {
    if (embeddings.dim != cb.dim()) {
        throw std::invalid_argument("quantize_corpus: dimension mismatch");
    }
    const std::size_t n = embeddings.count();
    CodeMatrix cm;
    cm.num_subspaces = cb.num_subspaces;
    cm.doc_ids = embeddings.ids;
    cm.codes.resize(n * cb.num_subspaces);

    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const std::vector<float> x = cb.rotate(embeddings.row(p));
        for (std::uint32_t s = 0; s < cb.num_subspaces; ++s) {
            const float* xs = x.data() + static_cast<std::size_t>(s) * cb.sub_dim;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_j = 0;
            for (std::uint32_t j = 0; j < cb.num_centroids; ++j) {
                const auto c = cb.centroid(s, j);
                double dd = 0.0;
                for (std::uint32_t i = 0; i < cb.sub_dim; ++i) {
                    const double diff = static_cast<double>(xs[i]) - c[i];
                    dd += diff * diff;
                }
                if (dd < best) {
                    best = dd;
                    best_j = j;
                }
            }
            cm.codes[p * cb.num_subspaces + s] = static_cast<std::uint8_t>(best_j);
            total += best;
        }
    }
    if (mean_error) {
        *mean_error = n > 0 ? total / static_cast<double>(n) : 0.0;
    }
    return cm;
}

std::vector<float> reconstruct(const Codebook& cb, std::span<const std::uint8_t> codes) {
    if (codes.size() != cb.num_subspaces) {
        throw CorruptIndexError("reconstruct: wrong code count", 0);
    }
    std::vector<float> out(cb.dim());
    for (std::uint32_t s = 0; s < cb.num_subspaces; ++s) {
        if (codes[s] >= cb.num_centroids) {
            throw CorruptIndexError("reconstruct: code out of range", s);
        }
        const auto c = cb.centroid(s, codes[s]);
        std::copy(c.begin(), c.end(), out.begin() + static_cast<std::size_t>(s) * cb.sub_dim);
    }
    return out;
}

LookupTable build_lookup_table(const Codebook& cb, std::span<const float> query) {
    if (query.size() != cb.dim()) {
        throw std::invalid_argument("build_lookup_table: dimension mismatch");
    }
    const std::vector<float> q = cb.rotate(query);
    LookupTable t;
    t.num_subspaces = cb.num_subspaces;
    t.num_centroids = cb.num_centroids;
    t.tau.resize(static_cast<std::size_t>(cb.num_subspaces) * cb.num_centroids);
    for (std::uint32_t s = 0; s < cb.num_subspaces; ++s) {
        const float* qs = q.data() + static_cast<std::size_t>(s) * cb.sub_dim;
        for (std::uint32_t j = 0; j < cb.num_centroids; ++j) {
            t.tau[static_cast<std::size_t>(s) * cb.num_centroids + j] =
                dot(qs, cb.centroid(s, j).data(), cb.sub_dim);
        }
    }
    return t;
}

float adc_score(const LookupTable& table, std::span<const std::uint8_t> codes) {
    float acc = 0.0f;
    const float* tau = table.tau.data();
    const std::uint32_t k = table.num_centroids;
    for (std::uint32_t s = 0; s < table.num_subspaces; ++s) {
        acc += tau[static_cast<std::size_t>(s) * k + codes[s]];
    }
    return acc;
}

namespace {

// (score desc, row asc) ordering; true when a ranks strictly better than b.
bool better(const SearchHit& a, const SearchHit& b) {
    return a.score > b.score || (a.score == b.score && a.row < b.row);
}

std::vector<SearchHit> bounded_topk(const LookupTable& table, const CodeMatrix& codes,
                                    std::size_t n) {
    const std::size_t count = codes.count();
    const std::size_t want = std::min(n, count);
    // Min-heap on "better": top() is the current worst kept hit.
    auto worse_first = [](const SearchHit& a, const SearchHit& b) { return better(a, b); };
    std::vector<SearchHit> heap;
    heap.reserve(want + 1);

    const std::uint8_t* row = codes.codes.data();
    const std::uint32_t m = codes.num_subspaces;
    const std::uint32_t k = table.num_centroids;
    const float* tau = table.tau.data();
    for (std::uint32_t p = 0; p < count; ++p, row += m) {
        float score = 0.0f;
        for (std::uint32_t s = 0; s < m; ++s) {
            score += tau[static_cast<std::size_t>(s) * k + row[s]];
        }
        const SearchHit hit{p, score};
        if (heap.size() < want) {
            heap.push_back(hit);
            std::push_heap(heap.begin(), heap.end(), worse_first);
        } else if (better(hit, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), worse_first);
            heap.back() = hit;
            std::push_heap(heap.begin(), heap.end(), worse_first);
        }
    }
    std::sort(heap.begin(), heap.end(), better);
    return heap;
}

}  // namespace

std::vector<SearchHit> search_topk_with_table(const LookupTable& table,
                                              const CodeMatrix& codes, std::size_t n) {
    if (codes.count() == 0) {
        throw std::invalid_argument("search_topk: empty index");
    }
    if (n == 0) {
        throw std::invalid_argument("search_topk: n must be positive");
    }
    if (table.num_subspaces != codes.num_subspaces) {
        throw std::invalid_argument("search_topk: table/code subspace mismatch");
    }
    return bounded_topk(table, codes, n);
}

std::vector<SearchHit> search_topk(const Codebook& cb, const CodeMatrix& codes,
                                   std::span<const float> query, std::size_t n) {
    return search_topk_with_table(build_lookup_table(cb, query), codes, n);
}

std::uint64_t index_payload_bytes(const Codebook& cb, const CodeMatrix& codes) {
    return 4ull * cb.centroids.size() + codes.codes.size();
}

void serialize_index(const Codebook& cb, const CodeMatrix& codes, const std::string& path) {
    if (codes.num_subspaces != cb.num_subspaces) {
        throw std::invalid_argument("serialize_index: codebook/code subspace mismatch");
    }
    detail::BinaryWriter w(path);
    w.magic("JPQI");
    w.u32(1);
    w.u32(cb.dim());
    w.u32(cb.num_subspaces);
    w.u32(cb.num_centroids);
    w.u32(static_cast<std::uint32_t>(codes.count()));
    w.u8(cb.has_rotation() ? 1 : 0);
    if (cb.has_rotation()) {
        w.f32(cb.rotation);
    }
    w.f32(cb.centroids);
    w.bytes(codes.codes);
    w.id_block(codes.doc_ids);
    w.commit();
}

std::pair<Codebook, CodeMatrix> deserialize_index(const std::string& path) {
    detail::BinaryReader r(path);
    r.expect_magic("JPQI", "jpq file");
    r.expect_version(1, "jpq file");
    const std::uint32_t dim = r.u32();
    Codebook cb;
    cb.num_subspaces = r.u32();
    cb.num_centroids = r.u32();
    const std::uint32_t n = r.u32();
    const std::uint8_t has_rot = r.u8();
    if (cb.num_subspaces == 0 || dim % cb.num_subspaces != 0) {
        throw CorruptIndexError("jpq file: dim not divisible by M", r.offset());
    }
    if (cb.num_centroids == 0 || cb.num_centroids > 256) {
        throw CorruptIndexError("jpq file: bad centroid count", r.offset());
    }
    cb.sub_dim = dim / cb.num_subspaces;
    if (has_rot) {
        cb.rotation.resize(static_cast<std::size_t>(dim) * dim);
        r.f32(cb.rotation);
    }
    cb.centroids.resize(static_cast<std::size_t>(cb.num_subspaces) * cb.num_centroids *
                        cb.sub_dim);
    r.f32(cb.centroids);

    CodeMatrix cm;
    cm.num_subspaces = cb.num_subspaces;
    cm.codes.resize(static_cast<std::size_t>(n) * cb.num_subspaces);
    r.bytes(cm.codes);
    cm.doc_ids = r.id_block(n);
    r.expect_exhausted("jpq file");

    for (std::size_t i = 0; i < cm.codes.size(); ++i) {
        if (cm.codes[i] >= cb.num_centroids) {
            throw CorruptIndexError("jpq file: code out of range", i);
        }
    }
    return {std::move(cb), std::move(cm)};
}

}  // namespace jpq
