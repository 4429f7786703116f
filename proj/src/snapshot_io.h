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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace livemod::detail {

/// Little-endian byte sink for snapshot files.
class ByteWriter {
public:
    void
    u32(uint32_t v);
    void
    u64(uint64_t v);
    void
    i32(int32_t v) {
        u32(static_cast<uint32_t>(v));
    }
    void
    i64(int64_t v) {
        u64(static_cast<uint64_t>(v));
    }
    void
    f64(double v);
    void
    str(std::string_view s);
    void
    raw(std::string_view s) {
        buf_.append(s);
    }

    /// Appends tag + u64 length + payload.
    void
    section(std::string_view tag, const ByteWriter& payload);

    const std::string&
    bytes() const {
        return buf_;
    }

private:
    std::string buf_;
};

/// Bounds-checked reader; any overrun throws CORRUPT_SNAPSHOT.
class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {
    }

    uint32_t
    u32();
    uint64_t
    u64();
    int32_t
    i32() {
        return static_cast<int32_t>(u32());
    }
    int64_t
    i64() {
        return static_cast<int64_t>(u64());
    }
    double
    f64();
    std::string
    str();
    std::string_view
    raw(size_t n);

    /// Reads a section header, checks the tag, and returns a reader over its payload.
    ByteReader
    section(std::string_view tag);

    bool
    done() const {
        return pos_ == bytes_.size();
    }

    size_t
    remaining() const {
        return bytes_.size() - pos_;
    }

private:
    std::string_view bytes_;
    size_t pos_{0};
};

}  // namespace livemod::detail
