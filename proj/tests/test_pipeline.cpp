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

#include "jpq/emb_io.hpp"
#include "jpq/eval.hpp"
#include "jpq/pipeline.hpp"

using namespace jpq;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("synthetic generation: shapes, labels and determinism") {
    SyntheticSpec spec;
    spec.num_docs = 100;
    spec.num_train_queries = 40;
    spec.num_eval_queries = 10;
    spec.feature_dim = 8;
    spec.relevant_per_query = 2;
    spec.noise_scale = 0.1;
    spec.seed = 7;

    const auto a = generate_synthetic(spec);
    CHECK(a.docs.count() == 100);
    CHECK(a.docs.dim == 8);
    CHECK(a.train_queries.count() == 40);
    CHECK(a.eval_queries.count() == 10);
    CHECK(a.train_labels.relevant.size() == 40);
    CHECK(a.eval_labels.relevant.size() == 10);
    CHECK_NOTHROW(a.docs.validate());
    const auto doc_idx = id_index(a.docs.ids);
    CHECK_NOTHROW(a.train_labels.validate(doc_idx));
    CHECK_NOTHROW(a.eval_labels.validate(doc_idx));
    for (const auto& [qid, rel] : a.train_labels.relevant) {
        CHECK(rel.size() == 2);
    }

    const auto b = generate_synthetic(spec);
    CHECK(a.docs.values == b.docs.values);
    CHECK(a.train_queries.values == b.train_queries.values);
    CHECK(a.train_labels.relevant == b.train_labels.relevant);

    spec.seed = 8;
    const auto c = generate_synthetic(spec);
    CHECK(a.docs.values != c.docs.values);
}

TEST_CASE("synthetic queries with zero noise equal their relevant doc") {
    SyntheticSpec spec;
    spec.num_docs = 50;
    spec.num_train_queries = 20;
    spec.num_eval_queries = 5;
    spec.feature_dim = 6;
    spec.relevant_per_query = 1;
    spec.noise_scale = 0.0;
    spec.seed = 3;

    const auto data = generate_synthetic(spec);
    const auto doc_idx = id_index(data.docs.ids);
    for (std::size_t qi = 0; qi < data.train_queries.count(); ++qi) {
        const auto& qid = data.train_queries.ids[qi];
        const auto& rel = data.train_labels.relevant.at(qid);
        REQUIRE(rel.size() == 1);
        const auto row = doc_idx.at(*rel.begin());
        const auto d = data.docs.row(row);
        const auto q = data.train_queries.row(qi);
        for (std::uint32_t f = 0; f < 6; ++f) {
            CHECK(q[f] == doctest::Approx(d[f]).epsilon(1e-6));
        }
    }
}

TEST_CASE("write_synthetic produces loadable, byte-reproducible files") {
    SyntheticSpec spec;
    spec.num_docs = 30;
    spec.num_train_queries = 10;
    spec.num_eval_queries = 4;
    spec.feature_dim = 4;
    spec.seed = 5;

    TempDir dir1("jpq_test_syn1");
    TempDir dir2("jpq_test_syn2");
    const auto data = generate_synthetic(spec);
    write_synthetic(data, dir1.str());
    write_synthetic(data, dir2.str());

    for (const char* name : {"corpus.emb", "queries-train.emb", "queries-eval.emb",
                             "qrels-train.tsv", "qrels-eval.tsv"}) {
        CHECK(fs::exists(dir1.path / name));
        CHECK(slurp(dir1.file(name)) == slurp(dir2.file(name)));
    }
    const auto docs = load_embeddings(dir1.file("corpus.emb"));
    CHECK(docs.values == data.docs.values);
    const auto labels = read_qrels(dir1.file("qrels-train.tsv"));
    CHECK(labels.relevant == data.train_labels.relevant);
}

TEST_CASE("config parsing: overrides, comments, unknown keys") {
    const auto c = PipelineConfig::from_overrides(
        {"feature_dim=16", "steps=100", "lr_query=1e-5", "pairwise_loss=ranknet",
         "seed=42"});
    CHECK(c.feature_dim == 16);
    CHECK(c.synthetic.feature_dim == 16);  // kept in sync
    CHECK(c.jpq.steps == 100);
    CHECK(c.jpq.lr_query == doctest::Approx(1e-5));
    CHECK(c.jpq.pairwise_loss == PairwiseLoss::ranknet);
    CHECK(c.jpq.seed == 42);

    CHECK_THROWS_AS(PipelineConfig::from_overrides({"no_such_key=1"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PipelineConfig::from_overrides({"not a kv pair"}),
                    std::invalid_argument);

    TempDir dir("jpq_test_cfg");
    {
        std::ofstream out(dir.file("cfg.txt"));
        out << "# comment line\n";
        out << "feature_dim = 12   # trailing comment\n";
        out << "\n";
        out << "num_docs=77\n";
    }
    const auto f = PipelineConfig::load(dir.file("cfg.txt"), {"num_docs=88"});
    CHECK(f.feature_dim == 12);
    CHECK(f.synthetic.num_docs == 88);  // override wins
    CHECK_THROWS_AS(PipelineConfig::load(dir.file("missing.txt")), std::invalid_argument);
}

TEST_CASE("config hash: stable, path-independent, sensitive to settings") {
    const auto a = PipelineConfig::from_overrides({"steps=10"});
    auto b = PipelineConfig::from_overrides({"steps=10"});
    CHECK(a.config_hash() == b.config_hash());
    CHECK(a.tag().size() == 8);

    b.out_dir = "somewhere/else";
    b.corpus = "other.emb";
    CHECK(a.config_hash() == b.config_hash());  // paths excluded

    const auto c = PipelineConfig::from_overrides({"steps=11"});
    CHECK(a.config_hash() != c.config_hash());

    CHECK(a.artifact("index", "jpq") ==
          (fs::path(a.out_dir) / ("index-" + a.tag() + ".jpq")).string());
}

TEST_CASE("config validation") {
    auto c = PipelineConfig::from_overrides({"embed_dim=10", "num_subspaces=4"});
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = PipelineConfig::from_overrides({"embed_dim=8", "num_subspaces=4"});
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("end-to-end mini pipeline") {
    TempDir dir("jpq_test_e2e");
    auto cfg = PipelineConfig::from_overrides(
        {"feature_dim=8", "embed_dim=16", "hidden_dim=16", "num_subspaces=4",
         "num_centroids=16", "num_docs=150", "num_train_queries=60",
         "num_eval_queries=20", "noise_scale=0.05", "stage1_epochs=8", "stage1_lr=0.05",
         "opq_iters=3", "steps=20", "batch_size=8", "n_hat=30", "lr_query=1e-4",
         "lr_centroids=1e-3", "validation_interval=10", "seed=9"});
    cfg.out_dir = dir.str();
    cfg.corpus = dir.file("corpus.emb");
    cfg.train_queries = dir.file("queries-train.emb");
    cfg.eval_queries = dir.file("queries-eval.emb");
    cfg.train_qrels = dir.file("qrels-train.tsv");
    cfg.eval_qrels = dir.file("qrels-eval.tsv");

    cmd_gen_synthetic(cfg.synthetic, cfg.out_dir);
    cmd_train_encoders(cfg);
    CHECK(fs::exists(cfg.artifact("query-encoder", "enc")));
    CHECK(fs::exists(cfg.artifact("doc-encoder", "enc")));
    CHECK(fs::exists(cfg.artifact("corpus-emb", "emb")));

    cmd_build_index(cfg);
    CHECK(fs::exists(cfg.artifact("index", "jpq")));

    cmd_train_jpq(cfg);
    CHECK(fs::exists(cfg.artifact("index-jpq", "jpq")));
    CHECK(fs::exists(cfg.artifact("query-encoder-jpq", "enc")));
    const std::string metrics = slurp(cfg.artifact("metrics", "csv"));
    CHECK(metrics.rfind("step,loss,mrr10,recall100\n", 0) == 0);
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 21);  // header + 20 steps

    const std::string run_path = dir.file("eval.run");
    cmd_search(cfg, cfg.eval_queries, 100, run_path);
    const auto run = read_run(run_path);
    CHECK(run.per_query.size() == 20);
    for (const auto& [qid, hits] : run.per_query) {
        CHECK(hits.size() == 100);
    }
    cmd_eval(run_path, cfg.eval_qrels, {10, 100}, dir.file("metrics-eval.csv"));
    CHECK(fs::exists(dir.file("metrics-eval.csv")));

    // The run carries real signal on this near-noiseless dataset.
    const auto labels = read_qrels(cfg.eval_qrels);
    CHECK(recall_at_k(run, labels, 100) > 0.3);
}

TEST_CASE("cmd_train_encoders fails cleanly when inputs are missing") {
    TempDir dir("jpq_test_missing");
    auto cfg = PipelineConfig::from_overrides({});
    cfg.out_dir = dir.str();
    cfg.corpus = dir.file("nope.emb");
    cfg.train_queries = dir.file("nope2.emb");
    cfg.train_qrels = dir.file("nope3.tsv");
    CHECK_THROWS_AS(cmd_train_encoders(cfg), std::invalid_argument);
}
