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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "jpq/common.hpp"
#include "jpq/emb_io.hpp"
#include "jpq/matrix.hpp"

using namespace jpq;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::normal_distribution<float> unit(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = unit(rng);
    return v;
}

// Independent elementwise-sum oracle for inner products.
double naive_sum_product(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_CASE("inner_product basics") {
    const std::vector<float> e1 = {1, 0};
    const std::vector<float> e2 = {0, 1};
    CHECK(inner_product(e1, e2) == 0.0f);

    const std::vector<float> v = {1, 2, 3};
    CHECK(inner_product(v, v) == 14.0f);

    CHECK_THROWS_AS(inner_product(e1, v), std::invalid_argument);
}

TEST_CASE("inner_product matches summation oracle on random 64-dim pairs") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_vec(64, rng);
        const auto b = random_vec(64, rng);
        const double want = naive_sum_product(a, b);
        CHECK(inner_product(a, b) ==
              doctest::Approx(want).epsilon(1e-6).scale(std::abs(want) + 1.0));
    }
}

TEST_CASE("split_subvectors") {
    const std::vector<float> e = {1, 2, 3, 4};
    const auto parts = split_subvectors(e, 2);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0][0] == 1);
    CHECK(parts[0][1] == 2);
    CHECK(parts[1][0] == 3);
    CHECK(parts[1][1] == 4);

    const std::vector<float> six = {1, 2, 3, 4, 5, 6};
    const auto whole = split_subvectors(six, 1);
    REQUIRE(whole.size() == 1);
    CHECK(std::equal(whole[0].begin(), whole[0].end(), six.begin()));

    CHECK_THROWS_AS(split_subvectors(six, 4), std::invalid_argument);
}

TEST_CASE("split/concat round-trip and subvector score decomposition") {
    Rng rng(7);
    for (const std::size_t m : {1u, 2u, 4u, 8u}) {
        const auto e = random_vec(24, rng);
        const auto b = random_vec(24, rng);
        const auto parts = split_subvectors(e, m);

        std::vector<float> cat;
        for (const auto& p : parts) cat.insert(cat.end(), p.begin(), p.end());
        CHECK(cat == e);  // exact

        const auto b_parts = split_subvectors(b, m);
        double partial = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            partial += inner_product(parts[i], b_parts[i]);
        }
        const double full = inner_product(e, b);
        CHECK(partial == doctest::Approx(full).epsilon(1e-6).scale(std::abs(full) + 1.0));
    }
}

TEST_CASE("emb file round-trip is bit-identical") {
    Rng rng(3);
    EmbeddingMatrix m;
    m.dim = 5;
    m.ids = {"doc-a", "doc-b", "", "x"};
    m.values = random_vec(20, rng);

    const std::string path = "test_core_roundtrip.emb";
    save_embeddings(m, path);
    const auto loaded = load_embeddings(path);
    CHECK(loaded.dim == m.dim);
    CHECK(loaded.ids == m.ids);
    CHECK(loaded.values == m.values);

    // Re-saving produces byte-identical files.
    const std::string path2 = "test_core_roundtrip2.emb";
    save_embeddings(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), {});
    const std::string c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("emb loader rejects malformed files") {
    const std::string path = "test_core_bad.emb";
    {
        std::ofstream out(path, std::ios::binary);
        out << "JUNKxxxx";
    }
    CHECK_THROWS_AS(load_embeddings(path), CorruptIndexError);
    std::filesystem::remove(path);
    CHECK_THROWS(load_embeddings("does_not_exist.emb"));
}

TEST_CASE("matrix and label validation") {
    EmbeddingMatrix m;
    m.dim = 2;
    m.ids = {"a", "a"};
    m.values = {1, 2, 3, 4};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);

    m.ids = {"a", "b"};
    CHECK_NOTHROW(m.validate());

    RelevanceLabels labels;
    labels.relevant["q1"] = {"a"};
    CHECK_NOTHROW(labels.validate(id_index(m.ids)));
    labels.relevant["q2"] = {"missing"};
    CHECK_THROWS_AS(labels.validate(id_index(m.ids)), std::invalid_argument);
}
