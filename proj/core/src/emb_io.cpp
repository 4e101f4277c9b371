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

#include "jpq/emb_io.hpp"

#include "jpq/detail/binary_io.hpp"

namespace jpq {

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
    detail::BinaryWriter w(path);
    w.magic("JPQE");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(m.count()));
    w.u32(m.dim);
    w.f32(m.values);
    w.id_block(m.ids);
    w.commit();
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    detail::BinaryReader r(path);
    r.expect_magic("JPQE", "emb file");
    r.expect_version(1, "emb file");
    const std::uint32_t count = r.u32();
    EmbeddingMatrix m;
    m.dim = r.u32();
    m.values.resize(static_cast<std::size_t>(count) * m.dim);
    r.f32(m.values);
    m.ids = r.id_block(count);
    r.expect_exhausted("emb file");
    return m;
}

}  // namespace jpq
