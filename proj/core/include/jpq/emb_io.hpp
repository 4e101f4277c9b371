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

#include <string>

#include "jpq/matrix.hpp"

namespace jpq {

// "emb" file: magic "JPQE", version u32=1, count u32, dim u32, count*dim
// f32 values, then per row a u16 length-prefixed UTF-8 id. Little-endian.
// Round-trips bit-exactly.

void save_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

}  // namespace jpq
