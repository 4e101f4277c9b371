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
#include "jpq/eval.hpp"

using namespace jpq;

namespace {

RankedRun toy_run() {
    RankedRun run;
    run.per_query["q1"] = {{"a", 3.0f}, {"b", 2.0f}, {"c", 1.0f}};
    run.per_query["q2"] = {{"b", 5.0f}, {"c", 4.0f}, {"a", 3.0f}};
    return run;
}

RelevanceLabels toy_labels() {
    RelevanceLabels labels;
    labels.relevant["q1"] = {"a"};          // rank 1
    labels.relevant["q2"] = {"a"};          // rank 3
    return labels;
}

}  // namespace

TEST_CASE("mrr_at_k hand-computed values") {
    const auto run = toy_run();
    const auto labels = toy_labels();
    // k=3: (1/1 + 1/3) / 2.
    CHECK(mrr_at_k(run, labels, 3) == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
    // k=2: second query's hit is beyond the cutoff.
    CHECK(mrr_at_k(run, labels, 2) == doctest::Approx(0.5));
    // k=1 equals precision of the top hit.
    CHECK(mrr_at_k(run, labels, 1) == doctest::Approx(0.5));

    std::map<std::string, double> per_query;
    mrr_at_k(run, labels, 3, &per_query);
    CHECK(per_query.at("q1") == doctest::Approx(1.0));
    CHECK(per_query.at("q2") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("recall_at_k hand-computed values") {
    const auto run = toy_run();
    RelevanceLabels labels;
    labels.relevant["q1"] = {"a", "c"};
    labels.relevant["q2"] = {"a", "z"};  // z never retrieved
    // k=3: q1 finds 2/2, q2 finds 1/2.
    CHECK(recall_at_k(run, labels, 3) == doctest::Approx(0.75));
    // k=1: q1 finds 1/2, q2 finds 0/2.
    CHECK(recall_at_k(run, labels, 1) == doctest::Approx(0.25));
}

TEST_CASE("ndcg_at_k hand-computed values") {
    const auto run = toy_run();
    const auto labels = toy_labels();
    // q1: hit at rank 1, ideal is 1 -> 1. q2: hit at rank 3 -> 1/log2(4).
    const double q2 = (1.0 / std::log2(4.0)) / 1.0;
    CHECK(ndcg_at_k(run, labels, 3) == doctest::Approx((1.0 + q2) / 2.0));

    // Two relevant docs at ranks 2 and 3: DCG = 1/log2(3) + 1/log2(4),
    // ideal = 1 + 1/log2(3).
    RankedRun r2;
    r2.per_query["q"] = {{"x", 3.0f}, {"a", 2.0f}, {"b", 1.0f}};
    RelevanceLabels l2;
    l2.relevant["q"] = {"a", "b"};
    const double dcg = 1.0 / std::log2(3.0) + 1.0 / std::log2(4.0);
    const double ideal = 1.0 + 1.0 / std::log2(3.0);
    CHECK(ndcg_at_k(r2, l2, 3) == doctest::Approx(dcg / ideal));
}

TEST_CASE("metrics are monotone non-decreasing in k") {
    Rng rng(5);
    RankedRun run;
    RelevanceLabels labels;
    std::uniform_int_distribution<int> pick(0, 29);
    for (int q = 0; q < 10; ++q) {
        const std::string qid = "q" + std::to_string(q);
        std::vector<std::pair<std::string, float>> hits;
        for (int d = 0; d < 30; ++d) {
            hits.push_back({"d" + std::to_string(d), 30.0f - static_cast<float>(d)});
        }
        std::shuffle(hits.begin(), hits.end(), rng);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            hits[i].second = 30.0f - static_cast<float>(i);
        }
        run.per_query[qid] = hits;
        labels.relevant[qid] = {"d" + std::to_string(pick(rng)),
                                "d" + std::to_string(pick(rng))};
    }
    // MRR and recall are monotone in k; NDCG is not (the ideal DCG grows
    // with k too), so it only gets the range checks.
    double prev_mrr = 0.0, prev_rec = 0.0;
    for (std::uint32_t k = 1; k <= 30; ++k) {
        const double m = mrr_at_k(run, labels, k);
        const double r = recall_at_k(run, labels, k);
        const double n = ndcg_at_k(run, labels, k);
        CHECK(m >= prev_mrr - 1e-12);
        CHECK(r >= prev_rec - 1e-12);
        CHECK(m <= 1.0);
        CHECK(r <= 1.0);
        CHECK(n >= 0.0);
        CHECK(n <= 1.0 + 1e-12);
        prev_mrr = m;
        prev_rec = r;
    }
}

TEST_CASE("metrics throw when a run query is missing from the labels") {
    auto run = toy_run();
    RelevanceLabels labels;
    labels.relevant["q1"] = {"a"};
    CHECK_THROWS_AS(mrr_at_k(run, labels, 3), std::invalid_argument);
}

TEST_CASE("brute_force_search against an independent full sort") {
    Rng rng(9);
    std::normal_distribution<float> unit(0.0f, 1.0f);
    const std::size_t n = 200;
    const std::uint32_t dim = 16;
    std::vector<float> emb(n * dim);
    for (auto& v : emb) v = unit(rng);
    std::vector<float> q(dim);
    for (auto& v : q) v = unit(rng);

    // Second implementation: score every row with a plain double loop.
    std::vector<std::pair<float, std::uint32_t>> oracle;
    for (std::uint32_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::uint32_t c = 0; c < dim; ++c) {
            s += static_cast<double>(emb[static_cast<std::size_t>(r) * dim + c]) * q[c];
        }
        oracle.push_back({static_cast<float>(s), r});
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });

    const auto hits = brute_force_search(emb, n, dim, q, 10);
    REQUIRE(hits.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(hits[i].first == oracle[i].second);
        CHECK(hits[i].second == doctest::Approx(oracle[i].first).epsilon(1e-5));
    }

    CHECK_THROWS_AS(brute_force_search(std::vector<float>{}, 0, dim, q, 5),
                    std::invalid_argument);
}

TEST_CASE("compare_runs: identical reports give t=0, p=1") {
    RankedRun run = toy_run();
    RelevanceLabels labels = toy_labels();
    const auto rep = metric_report(run, labels, 3);
    const auto rows = compare_runs({rep, rep});
    REQUIRE(!rows.empty());
    for (const auto& r : rows) {
        CHECK(r.mean_delta == doctest::Approx(0.0));
        CHECK(r.p_value == doctest::Approx(1.0));
    }
}

TEST_CASE("compare_runs: constant nonzero delta flags zero variance") {
    MetricReport a, b;
    a.k = b.k = 10;
    for (int i = 0; i < 5; ++i) {
        const std::string q = "q" + std::to_string(i);
        a.per_query_mrr[q] = 0.5;
        b.per_query_mrr[q] = 0.7;
        a.per_query_recall[q] = 0.5;
        b.per_query_recall[q] = 0.5;
        a.per_query_ndcg[q] = 0.5;
        b.per_query_ndcg[q] = 0.5;
    }
    const auto rows = compare_runs({a, b});
    bool saw_mrr = false;
    for (const auto& r : rows) {
        if (r.metric == "mrr") {
            saw_mrr = true;
            CHECK(r.zero_variance);
            CHECK(r.mean_delta == doctest::Approx(0.2));
            CHECK(r.p_value == doctest::Approx(0.0));
        }
    }
    CHECK(saw_mrr);
}

TEST_CASE("compare_runs matches a hand-computed paired t-test") {
    // Deltas: {0.1, -0.1, 0.3, 0.2, 0.0}: mean 0.1, sd 0.158113883,
    // t = 0.1 / (sd/sqrt(5)) = 1.41421356, df=4, two-tailed p = 0.230139.
    MetricReport a, b;
    a.k = b.k = 10;
    const double deltas[5] = {0.1, -0.1, 0.3, 0.2, 0.0};
    for (int i = 0; i < 5; ++i) {
        const std::string q = "q" + std::to_string(i);
        a.per_query_mrr[q] = 0.5;
        b.per_query_mrr[q] = 0.5 + deltas[i];
        a.per_query_recall[q] = b.per_query_recall[q] = 0.5;
        a.per_query_ndcg[q] = b.per_query_ndcg[q] = 0.5;
    }
    const auto rows = compare_runs({a, b});
    for (const auto& r : rows) {
        if (r.metric == "mrr") {
            CHECK(r.mean_delta == doctest::Approx(0.1).epsilon(1e-9));
            CHECK(r.t_stat == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
            CHECK(r.p_value == doctest::Approx(0.230139).epsilon(1e-4));
        }
    }
}

TEST_CASE("run file round-trip preserves ranking") {
    RankedRun run;
    run.per_query["q1"] = {{"a", 1.25f}, {"b", 1.0f}};
    run.per_query["q0"] = {{"c", -0.5f}};
    const std::string path = "test_eval_run.tsv";
    write_run(run, path);
    const auto loaded = read_run(path);
    REQUIRE(loaded.per_query.size() == 2);
    CHECK(loaded.per_query.at("q1").size() == 2);
    CHECK(loaded.per_query.at("q1")[0].first == "a");
    CHECK(loaded.per_query.at("q1")[1].first == "b");
    CHECK(loaded.per_query.at("q0")[0].first == "c");
    CHECK(loaded.per_query.at("q0")[0].second == doctest::Approx(-0.5));
    std::filesystem::remove(path);
}

TEST_CASE("run reader rejects malformed rows") {
    const std::string path = "test_eval_bad_run.tsv";
    {
        std::ofstream out(path);
        out << "q1\td1\tnot_a_rank\t1.0\n";
    }
    CHECK_THROWS_AS(read_run(path), std::invalid_argument);
    {
        std::ofstream out(path);
        out << "q1\td1\t1\t1.0\nq1\td1\t2\t0.5\n";  // duplicate doc
    }
    CHECK_THROWS_AS(read_run(path), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST_CASE("qrels round-trip and byte reproducibility") {
    RelevanceLabels labels;
    labels.relevant["q2"] = {"b", "a"};
    labels.relevant["q1"] = {"z"};
    const std::string p1 = "test_eval_qrels1.tsv";
    const std::string p2 = "test_eval_qrels2.tsv";
    write_qrels(labels, p1);
    const auto loaded = read_qrels(p1);
    CHECK(loaded.relevant == labels.relevant);
    write_qrels(loaded, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), {});
    const std::string c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}
