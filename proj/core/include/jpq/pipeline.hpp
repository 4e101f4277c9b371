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
#include <string>
#include <vector>

#include "jpq/jpq_trainer.hpp"
#include "jpq/synthetic.hpp"

namespace jpq {

/// Flat key=value pipeline configuration. Derived artifacts are
/// content-addressed: filenames carry a hash of the non-path settings so a
/// changed config never silently reuses stale files.
struct PipelineConfig {
    // Paths.
    std::string out_dir = "out";
    std::string corpus;          // features "emb" file
    std::string train_queries;   // features "emb" file
    std::string eval_queries;    // features "emb" file
    std::string train_qrels;
    std::string eval_qrels;

    // Model dimensions.
    std::uint32_t feature_dim = 32;
    std::uint32_t embed_dim = 64;
    std::uint32_t hidden_dim = 64;
    std::uint32_t num_subspaces = 8;
    std::uint32_t num_centroids = 64;

    // Synthetic generation.
    SyntheticSpec synthetic;

    // Stage 1.
    std::uint32_t stage1_epochs = 20;
    double stage1_lr = 0.1;

    // Index build.
    std::uint32_t opq_iters = 10;

    JpqConfig jpq;
    std::uint64_t seed = 0;

    /// Parses a config file plus key=value overrides (overrides win).
    static PipelineConfig load(const std::string& path,
                               const std::vector<std::string>& overrides = {});
    /// Overrides only, no file.
    static PipelineConfig from_overrides(const std::vector<std::string>& overrides);

    /// FNV-1a hash of every non-path setting, canonically serialized.
    std::uint64_t config_hash() const;
    /// Eight hex characters of config_hash, used in artifact filenames.
    std::string tag() const;
    /// out_dir/stem-<tag>.<ext>
    std::string artifact(const std::string& stem, const std::string& ext) const;

    void validate() const;
};

void cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir);
void cmd_train_encoders(const PipelineConfig& config);
void cmd_build_index(const PipelineConfig& config);
void cmd_train_jpq(const PipelineConfig& config);
void cmd_search(const PipelineConfig& config, const std::string& queries_path, std::size_t n,
                const std::string& run_path);
void cmd_eval(const std::string& run_path, const std::string& qrels_path,
              const std::vector<std::uint32_t>& ks, const std::string& csv_path = "");
void cmd_ablation(const PipelineConfig& config);
void cmd_bench_latency(const PipelineConfig& config, const std::string& queries_path,
                       std::size_t n);

}  // namespace jpq
