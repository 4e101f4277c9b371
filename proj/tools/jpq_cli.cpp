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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jpq/pipeline.hpp"

namespace {

jpq::PipelineConfig load_config(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
    if (config_path.empty()) {
        return jpq::PipelineConfig::from_overrides(overrides);
    }
    return jpq::PipelineConfig::load(config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trainable product-quantization retrieval engine"};
    app.require_subcommand(1);
    // Let -c/-s appear after the subcommand name too.
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "key=value config file");
    app.add_option("-s,--set", overrides, "config override, key=value (repeatable)");

    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic dataset");
    std::string gen_out = "data";
    gen->add_option("--out", gen_out, "output directory");

    app.add_subcommand("train-encoders", "stage 1: train the dual encoders");
    app.add_subcommand("build-index", "learn rotation + codebook and quantize the corpus");
    app.add_subcommand("train-jpq", "jointly train query encoder and centroids");
    app.add_subcommand("ablation", "run the four-variant training ladder");

    auto* search = app.add_subcommand("search", "encode queries and retrieve top-n");
    std::string search_queries, search_run = "run.tsv";
    std::size_t search_n = 100;
    search->add_option("--queries", search_queries, "query features emb file")->required();
    search->add_option("-n", search_n, "results per query");
    search->add_option("--run", search_run, "output run file");

    auto* ev = app.add_subcommand("eval", "score a run file against qrels");
    std::string eval_run, eval_qrels, eval_csv;
    std::vector<std::uint32_t> eval_ks = {10, 100};
    ev->add_option("--run", eval_run, "run file")->required();
    ev->add_option("--qrels", eval_qrels, "qrels file")->required();
    ev->add_option("-k", eval_ks, "cutoffs");
    ev->add_option("--csv", eval_csv, "also write metrics CSV here");

    auto* bench = app.add_subcommand("bench-latency", "single-threaded search latency");
    std::string bench_queries;
    std::size_t bench_n = 100;
    bench->add_option("--queries", bench_queries, "query features emb file")->required();
    bench->add_option("-n", bench_n, "results per query");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto config = load_config(config_path, overrides);
            jpq::cmd_gen_synthetic(config.synthetic, gen_out);
        } else if (app.got_subcommand("train-encoders")) {
            jpq::cmd_train_encoders(load_config(config_path, overrides));
        } else if (app.got_subcommand("build-index")) {
            jpq::cmd_build_index(load_config(config_path, overrides));
        } else if (app.got_subcommand("train-jpq")) {
            jpq::cmd_train_jpq(load_config(config_path, overrides));
        } else if (app.got_subcommand("ablation")) {
            jpq::cmd_ablation(load_config(config_path, overrides));
        } else if (search->parsed()) {
            jpq::cmd_search(load_config(config_path, overrides), search_queries, search_n,
                            search_run);
        } else if (ev->parsed()) {
            jpq::cmd_eval(eval_run, eval_qrels, eval_ks, eval_csv);
        } else if (bench->parsed()) {
            jpq::cmd_bench_latency(load_config(config_path, overrides), bench_queries,
                                   bench_n);
        }
    } catch (const jpq::CorruptIndexError& e) {
        std::cerr << "error corrupt-index: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error invalid-argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error io: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
