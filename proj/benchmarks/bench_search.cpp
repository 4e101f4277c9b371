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

#include <benchmark/benchmark.h>

#include "jpq/eval.hpp"
#include "jpq/index.hpp"
#include "jpq/kmeans.hpp"

namespace {

struct Fixture {
    jpq::EmbeddingMatrix emb;
    jpq::Codebook cb;
    jpq::CodeMatrix codes;
    std::vector<float> query;

    Fixture(std::size_t n, std::uint32_t dim, std::uint32_t m, std::uint32_t k) {
        jpq::Rng rng(7);
        std::normal_distribution<float> unit(0.0f, 1.0f);
        emb.dim = dim;
        emb.values.resize(n * dim);
        for (auto& v : emb.values) v = unit(rng);
        emb.ids.reserve(n);
        for (std::size_t i = 0; i < n; ++i) emb.ids.push_back("d" + std::to_string(i));

        cb = jpq::train_kmeans_codebook(emb.values, n, dim, m, k, 4, 7);
        codes = jpq::quantize_corpus(cb, emb);
        query.resize(dim);
        for (auto& v : query) v = unit(rng);
    }
};

void BM_AdcSearch(benchmark::State& state) {
    static Fixture fx(20000, 128, 16, 256);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jpq::search_topk(fx.cb, fx.codes, fx.query, 100));
    }
}
BENCHMARK(BM_AdcSearch);

void BM_BruteForceSearch(benchmark::State& state) {
    static Fixture fx(20000, 128, 16, 256);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            jpq::brute_force_search(fx.emb.values, fx.emb.count(), fx.emb.dim, fx.query, 100));
    }
}
BENCHMARK(BM_BruteForceSearch);

void BM_LookupTable(benchmark::State& state) {
    static Fixture fx(20000, 128, 16, 256);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jpq::build_lookup_table(fx.cb, fx.query));
    }
}
BENCHMARK(BM_LookupTable);

}  // namespace

BENCHMARK_MAIN();
