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

#include "jpq/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "jpq/emb_io.hpp"
#include "jpq/encoder_train.hpp"
#include "jpq/eval.hpp"
#include "jpq/opq.hpp"

namespace jpq {

namespace {

void require_file(const std::string& path, const char* what) {
    if (path.empty() || !std::filesystem::exists(path)) {
        throw std::invalid_argument(std::string(what) + " file missing: " +
                                    (path.empty() ? "(unset)" : path));
    }
}

std::map<std::string, std::string> parse_kv_lines(std::istream& in, const char* what) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(std::string(what) + ": expected key=value at line " +
                                        std::to_string(line_no));
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_kv(PipelineConfig& c, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        auto as_u32 = [&] { return static_cast<std::uint32_t>(std::stoul(value)); };
        auto as_u64 = [&] { return std::stoull(value); };
        auto as_f64 = [&] { return std::stod(value); };
        if (key == "out_dir") c.out_dir = value;
        else if (key == "corpus") c.corpus = value;
        else if (key == "train_queries") c.train_queries = value;
        else if (key == "eval_queries") c.eval_queries = value;
        else if (key == "train_qrels") c.train_qrels = value;
        else if (key == "eval_qrels") c.eval_qrels = value;
        else if (key == "feature_dim") c.feature_dim = as_u32();
        else if (key == "embed_dim") c.embed_dim = as_u32();
        else if (key == "hidden_dim") c.hidden_dim = as_u32();
        else if (key == "num_subspaces") c.num_subspaces = as_u32();
        else if (key == "num_centroids") c.num_centroids = as_u32();
        else if (key == "num_docs") c.synthetic.num_docs = as_u32();
        else if (key == "num_train_queries") c.synthetic.num_train_queries = as_u32();
        else if (key == "num_eval_queries") c.synthetic.num_eval_queries = as_u32();
        else if (key == "relevant_per_query") c.synthetic.relevant_per_query = as_u32();
        else if (key == "noise_scale") c.synthetic.noise_scale = as_f64();
        else if (key == "stage1_epochs") c.stage1_epochs = as_u32();
        else if (key == "stage1_lr") c.stage1_lr = as_f64();
        else if (key == "opq_iters") c.opq_iters = as_u32();
        else if (key == "batch_size") c.jpq.batch_size = as_u32();
        else if (key == "n_hat") c.jpq.n_hat = as_u32();
        else if (key == "negatives_per_query") c.jpq.negatives_per_query = as_u32();
        else if (key == "lr_query") c.jpq.lr_query = as_f64();
        else if (key == "lr_centroids") c.jpq.lr_centroids = as_f64();
        else if (key == "steps") c.jpq.steps = as_u32();
        else if (key == "validation_interval") c.jpq.validation_interval = as_u32();
        else if (key == "weight_decay") c.jpq.weight_decay = as_f64();
        else if (key == "pairwise_loss") {
            if (value == "ranknet") c.jpq.pairwise_loss = PairwiseLoss::ranknet;
            else if (value == "lambdarank") c.jpq.pairwise_loss = PairwiseLoss::lambdarank;
            else throw std::invalid_argument("config: unknown pairwise_loss " + value);
        } else if (key == "seed") {
            c.seed = as_u64();
        } else {
            throw std::invalid_argument("config: unknown key " + key);
        }
    }
    c.synthetic.feature_dim = c.feature_dim;
    c.synthetic.seed = c.seed;
    c.jpq.seed = c.seed;
}

std::string loss_name(PairwiseLoss l) {
    return l == PairwiseLoss::ranknet ? "ranknet" : "lambdarank";
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path,
                                    const std::vector<std::string>& overrides) {
    require_file(path, "config");
    std::ifstream in(path);
    auto kv = parse_kv_lines(in, "config file");
    for (const auto& o : overrides) {
        std::istringstream ss(o);
        auto extra = parse_kv_lines(ss, "config override");
        for (auto& [k, v] : extra) kv[k] = v;
    }
    PipelineConfig c;
    apply_kv(c, kv);
    return c;
}

PipelineConfig PipelineConfig::from_overrides(const std::vector<std::string>& overrides) {
    PipelineConfig c;
    std::map<std::string, std::string> kv;
    for (const auto& o : overrides) {
        std::istringstream ss(o);
        auto extra = parse_kv_lines(ss, "config override");
        for (auto& [k, v] : extra) kv[k] = v;
    }
    apply_kv(c, kv);
    return c;
}

std::uint64_t PipelineConfig::config_hash() const {
    std::ostringstream ss;
    ss << feature_dim << '|' << embed_dim << '|' << hidden_dim << '|' << num_subspaces << '|'
       << num_centroids << '|' << synthetic.num_docs << '|' << synthetic.num_train_queries
       << '|' << synthetic.num_eval_queries << '|' << synthetic.relevant_per_query << '|'
       << synthetic.noise_scale << '|' << stage1_epochs << '|' << stage1_lr << '|'
       << opq_iters << '|' << jpq.batch_size << '|' << jpq.n_hat << '|'
       << jpq.negatives_per_query << '|' << jpq.lr_query << '|' << jpq.lr_centroids << '|'
       << jpq.steps << '|' << jpq.validation_interval << '|' << jpq.weight_decay << '|'
       << loss_name(jpq.pairwise_loss) << '|' << seed;
    const std::string s = ss.str();
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string PipelineConfig::tag() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08x",
                  static_cast<std::uint32_t>(config_hash() & 0xffffffffu));
    return buf;
}

std::string PipelineConfig::artifact(const std::string& stem, const std::string& ext) const {
    return (std::filesystem::path(out_dir) / (stem + "-" + tag() + "." + ext)).string();
}

void PipelineConfig::validate() const {
    if (num_subspaces == 0 || embed_dim % num_subspaces != 0) {
        throw std::invalid_argument("config: embed_dim not divisible by num_subspaces");
    }
    jpq.validate();
}

void cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    const auto data = generate_synthetic(spec);
    write_synthetic(data, out_dir);
    std::cout << "generated " << spec.num_docs << " docs, " << spec.num_train_queries
              << " train queries, " << spec.num_eval_queries << " eval queries in " << out_dir
              << "\n";
}

void cmd_train_encoders(const PipelineConfig& config) {
    config.validate();
    require_file(config.corpus, "corpus");
    require_file(config.train_queries, "train_queries");
    require_file(config.train_qrels, "train_qrels");

    const auto docs = load_embeddings(config.corpus);
    const auto queries = load_embeddings(config.train_queries);
    const auto labels = read_qrels(config.train_qrels);

    auto query_encoder =
        make_encoder<float>(config.feature_dim, config.hidden_dim, config.embed_dim,
                            config.seed);
    auto doc_encoder =
        make_encoder<float>(config.feature_dim, config.hidden_dim, config.embed_dim,
                            config.seed + 1);

    Stage1Config s1;
    s1.epochs = config.stage1_epochs;
    s1.lr = config.stage1_lr;
    s1.seed = config.seed;
    const auto stats =
        train_dual_encoders(query_encoder, doc_encoder, docs, queries, labels, s1);

    std::filesystem::create_directories(config.out_dir);
    save_encoder(query_encoder, config.artifact("query-encoder", "enc"));
    save_encoder(doc_encoder, config.artifact("doc-encoder", "enc"));
    save_embeddings(encode_matrix(doc_encoder, docs), config.artifact("corpus-emb", "emb"));
    std::cout << "stage1 loss: first epoch " << stats.first_epoch_loss << ", last epoch "
              << stats.last_epoch_loss << "\n";
}

void cmd_build_index(const PipelineConfig& config) {
    config.validate();
    const std::string emb_path = config.artifact("corpus-emb", "emb");
    require_file(emb_path, "corpus embeddings");
    const auto emb = load_embeddings(emb_path);
    if (emb.dim % config.num_subspaces != 0) {
        throw std::invalid_argument("cmd_build_index: dim not divisible by num_subspaces");
    }

    const auto cb = train_opq_rotation(emb.values, emb.count(), emb.dim,
                                       config.num_subspaces, config.num_centroids,
                                       config.opq_iters, config.seed);
    double mse = 0.0;
    const auto codes = quantize_corpus(cb, emb, &mse);
    serialize_index(cb, codes, config.artifact("index", "jpq"));
    std::cout << "index built: reconstruction error " << mse << ", payload "
              << index_payload_bytes(cb, codes) << " bytes\n";
}

void cmd_train_jpq(const PipelineConfig& config) {
    config.validate();
    const std::string index_path = config.artifact("index", "jpq");
    const std::string enc_path = config.artifact("query-encoder", "enc");
    require_file(index_path, "index");
    require_file(enc_path, "query encoder");
    require_file(config.train_queries, "train_queries");
    require_file(config.train_qrels, "train_qrels");

    auto [cb, codes] = deserialize_index(index_path);
    TrainState state(load_encoder(enc_path), std::move(cb), std::move(codes));

    const auto train_q = load_embeddings(config.train_queries);
    const auto train_labels = read_qrels(config.train_qrels);

    EmbeddingMatrix eval_q;
    RelevanceLabels eval_labels;
    const bool have_val = !config.eval_queries.empty() && !config.eval_qrels.empty();
    if (have_val) {
        eval_q = load_embeddings(config.eval_queries);
        eval_labels = read_qrels(config.eval_qrels);
    }

    const auto log = jpq_train(state, train_q, train_labels, have_val ? &eval_q : nullptr,
                               have_val ? &eval_labels : nullptr, config.jpq);

    serialize_index(state.codebook, state.codes, config.artifact("index-jpq", "jpq"));
    save_encoder(state.query_encoder, config.artifact("query-encoder-jpq", "enc"));

    const std::string csv_path = config.artifact("metrics", "csv");
    {
        const std::string tmp = csv_path + ".tmp";
        std::ofstream csv(tmp, std::ios::trunc);
        csv << "step,loss,mrr10,recall100\n";
        char buf[128];
        for (const auto& row : log) {
            std::snprintf(buf, sizeof(buf), "%u,%.6g,%.6g,%.6g\n", row.step, row.loss,
                          row.mrr10, row.recall100);
            csv << buf;
        }
        csv.close();
        std::filesystem::rename(tmp, csv_path);
    }
    if (!log.empty()) {
        std::cout << "jpq training done: final loss " << log.back().loss << ", mrr10 "
                  << log.back().mrr10 << ", recall100 " << log.back().recall100 << "\n";
    } else {
        std::cout << "jpq training done: 0 steps\n";
    }
}

namespace {

// Prefer the jointly trained artifacts when present.
std::pair<std::string, std::string> pick_search_artifacts(const PipelineConfig& config) {
    std::string index_path = config.artifact("index-jpq", "jpq");
    std::string enc_path = config.artifact("query-encoder-jpq", "enc");
    if (!std::filesystem::exists(index_path)) index_path = config.artifact("index", "jpq");
    if (!std::filesystem::exists(enc_path)) enc_path = config.artifact("query-encoder", "enc");
    return {index_path, enc_path};
}

}  // namespace

void cmd_search(const PipelineConfig& config, const std::string& queries_path, std::size_t n,
                const std::string& run_path) {
    config.validate();
    const auto [index_path, enc_path] = pick_search_artifacts(config);
    require_file(index_path, "index");
    require_file(enc_path, "query encoder");
    require_file(queries_path, "queries");

    const auto [cb, codes] = deserialize_index(index_path);
    const auto encoder = load_encoder(enc_path);
    const auto queries = load_embeddings(queries_path);

    RankedRun run;
    const std::size_t warmup = queries.count() >= 100 ? 5 : 0;
    double total_ns = 0.0;
    std::size_t timed = 0;
    for (std::size_t i = 0; i < queries.count(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto q = encode<float>(encoder, queries.row(i));
        const auto hits = search_topk(cb, codes, q, n);
        const auto t1 = std::chrono::steady_clock::now();
        if (i >= warmup) {
            total_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
            ++timed;
        }
        auto& ranked = run.per_query[queries.ids[i]];
        ranked.reserve(hits.size());
        for (const auto& h : hits) ranked.emplace_back(codes.doc_ids[h.row], h.score);
    }
    write_run(run, run_path);
    if (timed > 0) {
        std::cout << "searched " << queries.count() << " queries, mean latency "
                  << (total_ns / static_cast<double>(timed)) / 1e6 << " ms\n";
    }
}

void cmd_eval(const std::string& run_path, const std::string& qrels_path,
              const std::vector<std::uint32_t>& ks, const std::string& csv_path) {
    require_file(run_path, "run");
    require_file(qrels_path, "qrels");
    const auto run = read_run(run_path);
    const auto labels = read_qrels(qrels_path);

    if (run.per_query.empty()) {
        std::cout << "warning: empty run file, all metrics 0\n";
    }
    std::ostringstream csv;
    csv << "k,mrr,recall,ndcg\n";
    std::printf("%6s %10s %10s %10s\n", "k", "mrr", "recall", "ndcg");
    for (const std::uint32_t k : ks) {
        const auto r = run.per_query.empty() ? MetricReport{k, 0, 0, 0, {}, {}, {}}
                                             : metric_report(run, labels, k);
        std::printf("%6u %10.4f %10.4f %10.4f\n", k, r.mrr, r.recall, r.ndcg);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%u,%.6g,%.6g,%.6g\n", k, r.mrr, r.recall, r.ndcg);
        csv << buf;
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path + ".tmp", std::ios::trunc);
        out << csv.str();
        out.close();
        std::filesystem::rename(csv_path + ".tmp", csv_path);
    }
}

void cmd_ablation(const PipelineConfig& config) {
    config.validate();
    const std::string index_path = config.artifact("index", "jpq");
    const std::string enc_path = config.artifact("query-encoder", "enc");
    const std::string emb_path = config.artifact("corpus-emb", "emb");
    require_file(index_path, "index");
    require_file(enc_path, "query encoder");
    require_file(emb_path, "corpus embeddings");
    require_file(config.train_queries, "train_queries");
    require_file(config.train_qrels, "train_qrels");
    require_file(config.eval_queries, "eval_queries");
    require_file(config.eval_qrels, "eval_qrels");

    const auto [cb, codes] = deserialize_index(index_path);
    const auto rows = ablation_variants(
        load_encoder(enc_path), cb, codes, load_embeddings(emb_path),
        load_embeddings(config.train_queries), read_qrels(config.train_qrels),
        load_embeddings(config.eval_queries), read_qrels(config.eval_qrels), config.jpq);

    std::printf("%-12s %10s %10s\n", "variant", "mrr10", "recall100");
    for (const auto& r : rows) {
        std::printf("%-12s %10.4f %10.4f\n", r.name.c_str(), r.mrr10, r.recall100);
    }
}

void cmd_bench_latency(const PipelineConfig& config, const std::string& queries_path,
                       std::size_t n) {
    config.validate();
    const auto [index_path, enc_path] = pick_search_artifacts(config);
    require_file(index_path, "index");
    require_file(enc_path, "query encoder");
    require_file(queries_path, "queries");

    const auto [cb, codes] = deserialize_index(index_path);
    const auto encoder = load_encoder(enc_path);
    const auto queries = load_embeddings(queries_path);

    std::vector<std::vector<float>> encoded(queries.count());
    for (std::size_t i = 0; i < queries.count(); ++i) {
        encoded[i] = encode<float>(encoder, queries.row(i));
    }

    const std::size_t warmup = queries.count() >= 100 ? 5 : 0;
    double adc_ns = 0.0;
    std::size_t timed = 0;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        volatile float sink = search_topk(cb, codes, encoded[i], n).front().score;
        (void)sink;
        const auto t1 = std::chrono::steady_clock::now();
        if (i >= warmup) {
            adc_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
            ++timed;
        }
    }
    std::cout << "adc search: mean " << (adc_ns / timed) / 1e6 << " ms over " << timed
              << " queries (n=" << n << ", N=" << codes.count() << ")\n";

    const std::string emb_path = config.artifact("corpus-emb", "emb");
    if (std::filesystem::exists(emb_path)) {
        const auto emb = load_embeddings(emb_path);
        double bf_ns = 0.0;
        for (std::size_t i = warmup; i < encoded.size(); ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile float sink =
                brute_force_search(emb.values, emb.count(), emb.dim, encoded[i], n)
                    .front()
                    .second;
            (void)sink;
            const auto t1 = std::chrono::steady_clock::now();
            bf_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
        }
        std::cout << "brute force: mean " << (bf_ns / timed) / 1e6 << " ms, speedup "
                  << bf_ns / adc_ns << "x\n";
    }
}

}  // namespace jpq
