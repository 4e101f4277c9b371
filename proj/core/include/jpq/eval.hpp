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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jpq/matrix.hpp"

namespace jpq {

/// Per-query ranked lists with scores, keyed by query id.
struct RankedRun {
    std::map<std::string, std::vector<std::pair<std::string, float>>> per_query;
};

/// Truncated metrics plus the per-query values behind them.
struct MetricReport {
    std::uint32_t k = 0;
    double mrr = 0.0;
    double recall = 0.0;
    double ndcg = 0.0;
    std::map<std::string, double> per_query_mrr;
    std::map<std::string, double> per_query_recall;
    std::map<std::string, double> per_query_ndcg;
};

/// Exact top-n rows by inner product; ties broken by ascending row index.
std::vector<std::pair<std::uint32_t, float>> brute_force_search(
    std::span<const float> embeddings, std::size_t n_docs, std::uint32_t dim,
    std::span<const float> query, std::size_t n);

double mrr_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                std::map<std::string, double>* per_query = nullptr);
double recall_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                   std::map<std::string, double>* per_query = nullptr);
/// Binary-gain DCG with 1/log2(rank+1) discounts, normalized by the ideal.
double ndcg_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                 std::map<std::string, double>* per_query = nullptr);

MetricReport metric_report(const RankedRun& run, const RelevanceLabels& labels,
                           std::uint32_t k);

/// Paired two-tailed t-test row for one metric of one report against the
/// baseline. zero_variance marks the degenerate constant-delta case, where
/// p is reported as 0 (or 1 when the delta itself is zero).
struct SignificanceRow {
    std::string metric;
    std::size_t report_index = 0;
    double mean_delta = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    bool zero_variance = false;
};

/// Compares every report against reports[0] per metric. All reports must
/// cover the same query set.
std::vector<SignificanceRow> compare_runs(const std::vector<MetricReport>& reports);

// Run file: TSV "query_id \t doc_id \t rank \t score", rank 1-based.
// Qrels file: TSV "query_id \t 0 \t doc_id \t 1".

void write_run(const RankedRun& run, const std::string& path);
RankedRun read_run(const std::string& path);
void write_qrels(const RelevanceLabels& labels, const std::string& path);
RelevanceLabels read_qrels(const std::string& path);

}  // namespace jpq
