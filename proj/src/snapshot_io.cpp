// Copyright 2026-present the livemod project
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

#include "snapshot_io.h"

#include <fmt/format.h>

#include <bit>

#include "livemod/errors.h"

namespace livemod::detail {

void
ByteWriter::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void
ByteWriter::u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void
ByteWriter::f64(double v) {
    u64(std::bit_cast<uint64_t>(v));
}

void
ByteWriter::str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.append(s);
}

void
ByteWriter::section(std::string_view tag, const ByteWriter& payload) {
    buf_.append(tag);
    u64(payload.bytes().size());
    buf_.append(payload.bytes());
}

std::string_view
ByteReader::raw(size_t n) {
    if (n > remaining()) {
        throw_error(ErrorCode::CORRUPT_SNAPSHOT,
                    fmt::format("truncated: need {} bytes at offset {}, have {}",
                                n,
                                pos_,
                                remaining()));
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
}

uint32_t
ByteReader::u32() {
    auto b = raw(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
}

uint64_t
ByteReader::u64() {
    auto b = raw(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
}

double
ByteReader::f64() {
    return std::bit_cast<double>(u64());
}

std::string
ByteReader::str() {
    uint32_t n = u32();
    return std::string(raw(n));
}

ByteReader
ByteReader::section(std::string_view tag) {
    auto got = raw(tag.size());
    if (got != tag) {
        throw_error(ErrorCode::CORRUPT_SNAPSHOT,
                    fmt::format("expected section '{}' at offset {}", tag, pos_ - tag.size()));
    }
    uint64_t n = u64();
    return ByteReader(raw(n));
}

}  // namespace livemod::detail
