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

#include "jpq/encoder.hpp"

#include "jpq/detail/binary_io.hpp"

namespace jpq {

void save_encoder(const EncoderParams<float>& p, const std::string& path) {
    detail::BinaryWriter w(path);
    w.magic("JPQF");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
        w.u32(l.in);
        w.u32(l.out);
        w.u8(static_cast<std::uint8_t>(l.act));
    }
    for (const auto& l : p.layers) {
        w.f32(l.weight);
        w.f32(l.bias);
    }
    w.commit();
}

EncoderParams<float> load_encoder(const std::string& path) {
    detail::BinaryReader r(path);
    r.expect_magic("JPQF", "enc file");
    r.expect_version(1, "enc file");
    const std::uint32_t nl = r.u32();
    EncoderParams<float> p;
    p.layers.resize(nl);
    for (auto& l : p.layers) {
        l.in = r.u32();
        l.out = r.u32();
        const std::uint8_t act = r.u8();
        if (act > 1) {
            throw CorruptIndexError("enc file: unknown activation", r.offset() - 1);
        }
        l.act = static_cast<Activation>(act);
    }
    for (auto& l : p.layers) {
        l.weight.resize(static_cast<std::size_t>(l.out) * l.in);
        r.f32(l.weight);
        l.bias.resize(l.out);
        r.f32(l.bias);
    }
    r.expect_exhausted("enc file");
    return p;
}

}  // namespace jpq
