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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace livemod {

constexpr double kDefaultClipLen = 20.0;
constexpr double kDefaultMinPartial = 5.0;

using FeatureTokens = std::vector<std::vector<double>>;

/// Identity of one clip inside a corpus: (stream, clip index).
struct ClipRef {
    std::string stream_id;
    int64_t clip_index{0};

    auto
    operator<=>(const ClipRef&) const = default;
    bool
    operator==(const ClipRef&) const = default;
};

std::string
to_string(const ClipRef& ref);

/// A fixed-length multimodal segment of a stream. Tokens are already-extracted
/// numeric features; start_s is relative to the stream start.
struct Clip {
    std::string stream_id;
    int64_t clip_index{0};
    double start_s{0.0};
    double duration_s{0.0};
    FeatureTokens visual_tokens;
    FeatureTokens audio_tokens;
    std::string asr_text;
    std::optional<int> label;
    std::optional<std::string> source_stream_id;

    ClipRef
    ref() const {
        return {stream_id, clip_index};
    }

    bool
    operator==(const Clip&) const = default;
};

struct Segment {
    int64_t clip_index{0};
    double start_s{0.0};
    double duration_s{0.0};

    bool
    operator==(const Segment&) const = default;
};

/// Tiles [0, total_duration_s] into clips of clip_len seconds. A trailing
/// partial clip is kept only when it lasts at least min_partial_s.
std::vector<Segment>
segment_stream(double total_duration_s,
               double clip_len = kDefaultClipLen,
               double min_partial_s = kDefaultMinPartial);

struct StreamManifest {
    std::string stream_id;
    double total_duration_s{0.0};
    std::vector<Clip> clips;

    bool
    operator==(const StreamManifest&) const = default;
};

/// Checks the clip invariants of a single stream and fills total_duration_s.
void
validate_manifest(StreamManifest& manifest, double clip_len = kDefaultClipLen);

StreamManifest
parse_manifest(std::string_view jsonl, double clip_len = kDefaultClipLen);

std::string
serialize_manifest(const StreamManifest& manifest);

StreamManifest
read_manifest_file(const std::filesystem::path& path, double clip_len = kDefaultClipLen);

void
write_manifest_file(const StreamManifest& manifest, const std::filesystem::path& path);

}  // namespace livemod
