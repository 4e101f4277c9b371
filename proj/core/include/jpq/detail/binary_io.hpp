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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "jpq/common.hpp"

namespace jpq::detail {

static_assert(std::endian::native == std::endian::little,
              "little-endian host required by the on-disk formats");

/// Buffered little-endian writer with atomic commit (temp file + rename).
class BinaryWriter {
public:
    explicit BinaryWriter(std::string path) : path_(std::move(path)) {}

    void u8(std::uint8_t v) { raw(&v, 1); }
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void magic(const char m[4]) { raw(m, 4); }
    void f32(std::span<const float> v) { raw(v.data(), v.size() * 4); }
    void bytes(std::span<const std::uint8_t> v) { raw(v.data(), v.size()); }

    void id_block(const std::vector<std::string>& ids) {
        for (const auto& id : ids) {
            if (id.size() > 0xffff) {
                throw std::invalid_argument("id longer than 65535 bytes: " + id);
            }
            u16(static_cast<std::uint16_t>(id.size()));
            raw(id.data(), id.size());
        }
    }

    std::uint64_t offset() const { return buf_.size(); }

    void commit() {
        const std::string tmp = path_ + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw std::runtime_error("io error: cannot open " + tmp + " for writing");
            }
            out.write(reinterpret_cast<const char*>(buf_.data()),
                      static_cast<std::streamsize>(buf_.size()));
            if (!out) {
                throw std::runtime_error("io error: short write to " + tmp);
            }
        }
        std::filesystem::rename(tmp, path_);
    }

private:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    std::string path_;
    std::vector<std::uint8_t> buf_;
};

/// Whole-file little-endian reader. Truncation and bad tags raise
/// CorruptIndexError carrying the failing offset.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in) {
            throw std::runtime_error("io error: cannot open " + path);
        }
        const auto size = in.tellg();
        in.seekg(0);
        buf_.resize(static_cast<std::size_t>(size));
        in.read(reinterpret_cast<char*>(buf_.data()), size);
        if (!in) {
            throw std::runtime_error("io error: short read from " + path);
        }
    }

    std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
    std::uint16_t u16() { std::uint16_t v; raw(&v, 2); return v; }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }

    void expect_magic(const char m[4], const char* what) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, m, 4) != 0) {
            throw CorruptIndexError(std::string(what) + ": bad magic", pos_ - 4);
        }
    }

    void expect_version(std::uint32_t want, const char* what) {
        const std::uint32_t got = u32();
        if (got != want) {
            throw CorruptIndexError(std::string(what) + ": unsupported version " +
                                        std::to_string(got),
                                    pos_ - 4);
        }
    }

    void f32(std::span<float> out) { raw(out.data(), out.size() * 4); }
    void bytes(std::span<std::uint8_t> out) { raw(out.data(), out.size()); }

    std::vector<std::string> id_block(std::size_t count) {
        std::vector<std::string> ids(count);
        for (auto& id : ids) {
            const std::uint16_t len = u16();
            id.resize(len);
            raw(id.data(), len);
        }
        return ids;
    }

    std::uint64_t offset() const { return pos_; }
    bool exhausted() const { return pos_ == buf_.size(); }

    void expect_exhausted(const char* what) {
        if (!exhausted()) {
            throw CorruptIndexError(std::string(what) + ": trailing bytes", pos_);
        }
    }

private:
    void raw(void* p, std::size_t n) {
        if (pos_ + n > buf_.size()) {
            throw CorruptIndexError("truncated file", pos_);
        }
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

}  // namespace jpq::detail
