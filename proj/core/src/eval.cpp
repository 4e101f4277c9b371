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

#include "jpq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace jpq {

std::vector<std::pair<std::uint32_t, float>> brute_force_search(
    std::span<const float> embeddings, std::size_t n_docs, std::uint32_t dim,
    std::span<const float> query, std::size_t n) {
    if (n_docs == 0) {
        throw std::invalid_argument("brute_force_search: empty corpus");
    }
    if (query.size() != dim || embeddings.size() != n_docs * dim) {
        throw std::invalid_argument("brute_force_search: dimension mismatch");
    }
    std::vector<std::pair<std::uint32_t, float>> scored(n_docs);
    for (std::size_t p = 0; p < n_docs; ++p) {
        scored[p] = {static_cast<std::uint32_t>(p),
                     dot(embeddings.data() + p * dim, query.data(), dim)};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    scored.resize(std::min(n, n_docs));
    return scored;
}

namespace {

using PerQueryFn = double (*)(const std::vector<std::pair<std::string, float>>&,
                              const std::unordered_set<std::string>&, std::uint32_t);

double mean_metric(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                   PerQueryFn fn, std::map<std::string, double>* per_query) {
    if (k < 1) {
        throw std::invalid_argument("metric: k must be >= 1");
    }
    double total = 0.0;
    for (const auto& [qid, ranked] : run.per_query) {
        const auto it = labels.relevant.find(qid);
        if (it == labels.relevant.end()) {
            throw std::invalid_argument("metric: query " + qid + " missing from labels");
        }
        const double v = fn(ranked, it->second, k);
        if (per_query) (*per_query)[qid] = v;
        total += v;
    }
    return run.per_query.empty() ? 0.0 : total / static_cast<double>(run.per_query.size());
}

double query_mrr(const std::vector<std::pair<std::string, float>>& ranked,
                 const std::unordered_set<std::string>& rel, std::uint32_t k) {
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (rel.count(ranked[i].first)) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

double query_recall(const std::vector<std::pair<std::string, float>>& ranked,
                    const std::unordered_set<std::string>& rel, std::uint32_t k) {
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    std::size_t found = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (rel.count(ranked[i].first)) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(rel.size());
}

double query_ndcg(const std::vector<std::pair<std::string, float>>& ranked,
                  const std::unordered_set<std::string>& rel, std::uint32_t k) {
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (rel.count(ranked[i].first)) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    double ideal = 0.0;
    const std::size_t ideal_depth = std::min<std::size_t>(k, rel.size());
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        ideal += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

}  // namespace

double mrr_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                std::map<std::string, double>* per_query) {
    return mean_metric(run, labels, k, query_mrr, per_query);
}

double recall_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                   std::map<std::string, double>* per_query) {
    return mean_metric(run, labels, k, query_recall, per_query);
}

double ndcg_at_k(const RankedRun& run, const RelevanceLabels& labels, std::uint32_t k,
                 std::map<std::string, double>* per_query) {
    return mean_metric(run, labels, k, query_ndcg, per_query);
}

MetricReport metric_report(const RankedRun& run, const RelevanceLabels& labels,
                           std::uint32_t k) {
    MetricReport r;
    r.k = k;
    r.mrr = mrr_at_k(run, labels, k, &r.per_query_mrr);
    r.recall = recall_at_k(run, labels, k, &r.per_query_recall);
    r.ndcg = ndcg_at_k(run, labels, k, &r.per_query_ndcg);
    return r;
}

namespace {

SignificanceRow paired_t(const std::string& metric, std::size_t index,
                         const std::map<std::string, double>& base,
                         const std::map<std::string, double>& other) {
    SignificanceRow row;
    row.metric = metric;
    row.report_index = index;

    std::vector<double> deltas;
    deltas.reserve(base.size());
    for (const auto& [qid, v] : base) {
        const auto it = other.find(qid);
        if (it == other.end()) {
            throw std::invalid_argument("compare_runs: query sets differ at " + qid);
        }
        deltas.push_back(it->second - v);
    }
    if (other.size() != base.size()) {
        throw std::invalid_argument("compare_runs: query sets differ in size");
    }
    const double n = static_cast<double>(deltas.size());
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= n;
    double var = 0.0;
    for (double d : deltas) var += (d - mean) * (d - mean);
    var = deltas.size() > 1 ? var / (n - 1.0) : 0.0;

    row.mean_delta = mean;
    if (var == 0.0) {
        row.zero_variance = true;
        row.t_stat = 0.0;
        row.p_value = (mean == 0.0) ? 1.0 : 0.0;
        return row;
    }
    row.t_stat = mean / std::sqrt(var / n);
    boost::math::students_t_distribution<double> dist(n - 1.0);
    row.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(row.t_stat)));
    return row;
}

}  // namespace

std::vector<SignificanceRow> compare_runs(const std::vector<MetricReport>& reports) {
    if (reports.size() < 2) {
        throw std::invalid_argument("compare_runs: need at least two reports");
    }
    std::vector<SignificanceRow> rows;
    for (std::size_t i = 1; i < reports.size(); ++i) {
        rows.push_back(paired_t("mrr", i, reports[0].per_query_mrr, reports[i].per_query_mrr));
        rows.push_back(
            paired_t("recall", i, reports[0].per_query_recall, reports[i].per_query_recall));
        rows.push_back(
            paired_t("ndcg", i, reports[0].per_query_ndcg, reports[i].per_query_ndcg));
    }
    return rows;
}

void write_run(const RankedRun& run, const std::string& path) {
    const std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("io error: cannot open " + tmp);
    }
    char score_buf[32];
    for (const auto& [qid, ranked] : run.per_query) {
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            std::snprintf(score_buf, sizeof(score_buf), "%.8g",
                          static_cast<double>(ranked[i].second));
            out << qid << '\t' << ranked[i].first << '\t' << (i + 1) << '\t' << score_buf
                << '\n';
        }
    }
    out.close();
    std::filesystem::rename(tmp, path);
}

RankedRun read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("io error: cannot open " + path);
    }
    RankedRun run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, did, rank_s, score_s;
        if (!std::getline(ss, qid, '\t') || !std::getline(ss, did, '\t') ||
            !std::getline(ss, rank_s, '\t') || !std::getline(ss, score_s)) {
            throw std::invalid_argument("run file: malformed line " + std::to_string(line_no));
        }
        try {
            (void)std::stoul(rank_s);
            run.per_query[qid].emplace_back(did, std::stof(score_s));
        } catch (const std::exception&) {
            throw std::invalid_argument("run file: malformed line " + std::to_string(line_no));
        }
    }
    for (const auto& [qid, ranked] : run.per_query) {
        std::unordered_set<std::string> seen;
        for (const auto& [did, _] : ranked) {
            if (!seen.insert(did).second) {
                throw std::invalid_argument("run file: duplicate doc " + did + " for query " +
                                            qid);
            }
        }
    }
    return run;
}

void write_qrels(const RelevanceLabels& labels, const std::string& path) {
    const std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("io error: cannot open " + tmp);
    }
    // Sorted for byte-reproducible output.
    std::vector<std::string> qids;
    for (const auto& [qid, _] : labels.relevant) qids.push_back(qid);
    std::sort(qids.begin(), qids.end());
    for (const auto& qid : qids) {
        std::vector<std::string> dids(labels.relevant.at(qid).begin(),
                                      labels.relevant.at(qid).end());
        std::sort(dids.begin(), dids.end());
        for (const auto& did : dids) {
            out << qid << "\t0\t" << did << "\t1\n";
        }
    }
    out.close();
    std::filesystem::rename(tmp, path);
}

RelevanceLabels read_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("io error: cannot open " + path);
    }
    RelevanceLabels labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, ignored, did, rel_s;
        if (!std::getline(ss, qid, '\t') || !std::getline(ss, ignored, '\t') ||
            !std::getline(ss, did, '\t') || !std::getline(ss, rel_s)) {
            throw std::invalid_argument("qrels file: malformed line " +
                                        std::to_string(line_no));
        }
        try {
            if (std::stoi(rel_s) > 0) labels.relevant[qid].insert(did);
        } catch (const std::exception&) {
            throw std::invalid_argument("qrels file: malformed line " +
                                        std::to_string(line_no));
        }
    }
    return labels;
}

}  // namespace jpq
