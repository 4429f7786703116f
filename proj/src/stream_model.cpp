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

#include "livemod/stream_model.h"

#include <fmt/format.h>

#include <cmath>
#include <json.hpp>

#include "livemod/errors.h"
#include "livemod/file_io.h"

namespace livemod {

namespace {

constexpr double kTimeTolerance = 1e-6;

using nlohmann::json;

[[noreturn]] void
parse_fail(size_t line_no, const std::string& what) {
    throw_error(ErrorCode::PARSE_ERROR, fmt::format("line {}: {}", line_no, what));
}

[[noreturn]] void
invalid_field(int64_t clip_index, std::string_view field, const std::string& what) {
    throw_error(ErrorCode::VALIDATION_ERROR,
                fmt::format("clip {}: field '{}' {}", clip_index, field, what));
}

FeatureTokens
tokens_from_json(const json& value, size_t line_no, std::string_view key) {
    if (!value.is_array()) {
        parse_fail(line_no, fmt::format("'{}' must be an array of float arrays", key));
    }
    FeatureTokens tokens;
    tokens.reserve(value.size());
    for (const auto& token : value) {
        if (!token.is_array()) {
            parse_fail(line_no, fmt::format("'{}' must be an array of float arrays", key));
        }
        auto& out = tokens.emplace_back();
        out.reserve(token.size());
        for (const auto& x : token) {
            if (!x.is_number()) {
                parse_fail(line_no, fmt::format("'{}' contains a non-numeric entry", key));
            }
            out.push_back(x.get<double>());
        }
    }
    return tokens;
}

template <typename T>
T
required(const json& obj, const char* key, size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        parse_fail(line_no, fmt::format("missing key '{}'", key));
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        parse_fail(line_no, fmt::format("key '{}' has the wrong type", key));
    }
}

Clip
clip_from_json(const json& obj, size_t line_no) {
    if (!obj.is_object()) {
        parse_fail(line_no, "record is not a JSON object");
    }
    Clip clip;
    clip.stream_id = required<std::string>(obj, "stream_id", line_no);
    auto index = obj.find("clip_index");
    if (index == obj.end() || !index->is_number_integer()) {
        parse_fail(line_no, "'clip_index' must be an integer");
    }
    clip.clip_index = index->get<int64_t>();
    clip.start_s = required<double>(obj, "start_s", line_no);
    clip.duration_s = required<double>(obj, "duration_s", line_no);
    for (const char* key : {"visual_tokens", "audio_tokens", "asr_text"}) {
        if (!obj.contains(key)) {
            parse_fail(line_no, fmt::format("missing key '{}'", key));
        }
    }
    clip.visual_tokens = tokens_from_json(obj["visual_tokens"], line_no, "visual_tokens");
    clip.audio_tokens = tokens_from_json(obj["audio_tokens"], line_no, "audio_tokens");
    clip.asr_text = required<std::string>(obj, "asr_text", line_no);
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_integer()) {
            parse_fail(line_no, "'label' must be an integer");
        }
        clip.label = it->get<int>();
    }
    if (auto it = obj.find("source_stream_id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) {
            parse_fail(line_no, "'source_stream_id' must be a string");
        }
        clip.source_stream_id = it->get<std::string>();
    }
    return clip;
}

json
clip_to_json(const Clip& clip) {
    json obj = {
        {"stream_id", clip.stream_id},
        {"clip_index", clip.clip_index},
        {"start_s", clip.start_s},
        {"duration_s", clip.duration_s},
        {"visual_tokens", clip.visual_tokens},
        {"audio_tokens", clip.audio_tokens},
        {"asr_text", clip.asr_text},
    };
    if (clip.label) {
        obj["label"] = *clip.label;
    }
    if (clip.source_stream_id) {
        obj["source_stream_id"] = *clip.source_stream_id;
    }
    return obj;
}

void
check_tokens(const Clip& clip, const FeatureTokens& tokens, std::string_view field) {
    for (const auto& token : tokens) {
        for (double x : token) {
            if (!std::isfinite(x)) {
                invalid_field(clip.clip_index, field, "contains a non-finite value");
            }
        }
    }
}

}  // namespace

std::string
to_string(const ClipRef& ref) {
    return fmt::format("{}#{}", ref.stream_id, ref.clip_index);
}

std::vector<Segment>
segment_stream(double total_duration_s, double clip_len, double min_partial_s) {
    if (!(total_duration_s > 0.0) || !std::isfinite(total_duration_s)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "total_duration_s must be positive");
    }
    if (!(clip_len > 0.0) || !std::isfinite(clip_len)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip_len must be positive");
    }
    if (min_partial_s < 0.0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "min_partial_s must be non-negative");
    }
    std::vector<Segment> segments;
    // Full clips are counted with a tolerance so that 60/20 does not lose its last clip.
    auto full = static_cast<int64_t>(std::floor(total_duration_s / clip_len + 1e-9));
    segments.reserve(static_cast<size_t>(full) + 1);
    for (int64_t i = 0; i < full; ++i) {
        segments.push_back({i, static_cast<double>(i) * clip_len, clip_len});
    }
    double tail = total_duration_s - static_cast<double>(full) * clip_len;
    if (tail > kTimeTolerance && tail >= min_partial_s) {
        segments.push_back({full, static_cast<double>(full) * clip_len, tail});
    }
    return segments;
}

void
validate_manifest(StreamManifest& manifest, double clip_len) {
    if (manifest.clips.empty()) {
        throw_error(ErrorCode::VALIDATION_ERROR, "no records");
    }
    if (manifest.stream_id.empty()) {
        manifest.stream_id = manifest.clips.front().stream_id;
    }
    if (manifest.stream_id.empty()) {
        invalid_field(manifest.clips.front().clip_index, "stream_id", "must be non-empty");
    }
    double total = 0.0;
    for (size_t i = 0; i < manifest.clips.size(); ++i) {
        const Clip& clip = manifest.clips[i];
        if (clip.stream_id != manifest.stream_id) {
            invalid_field(clip.clip_index,
                          "stream_id",
                          fmt::format("'{}' differs from manifest stream '{}'",
                                      clip.stream_id,
                                      manifest.stream_id));
        }
        if (clip.clip_index != static_cast<int64_t>(i)) {
            invalid_field(clip.clip_index,
                          "clip_index",
                          fmt::format("expected {} (indices must start at 0 with no gaps)", i));
        }
        double expected_start = static_cast<double>(clip.clip_index) * clip_len;
        if (std::abs(clip.start_s - expected_start) > kTimeTolerance) {
            invalid_field(clip.clip_index,
                          "start_s",
                          fmt::format("is {}, expected clip_index * clip_len = {}",
                                      clip.start_s,
                                      expected_start));
        }
        if (!(clip.duration_s > 0.0) || clip.duration_s > clip_len + kTimeTolerance) {
            invalid_field(clip.clip_index, "duration_s", "must lie in (0, clip_len]");
        }
        bool last = i + 1 == manifest.clips.size();
        if (!last && clip.duration_s < clip_len - kTimeTolerance) {
            invalid_field(clip.clip_index, "duration_s", "is partial on a non-final clip");
        }
        check_tokens(clip, clip.visual_tokens, "visual_tokens");
        check_tokens(clip, clip.audio_tokens, "audio_tokens");
        total += clip.duration_s;
    }
    manifest.total_duration_s = total;
}

StreamManifest
parse_manifest(std::string_view jsonl, double clip_len) {
    StreamManifest manifest;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < jsonl.size()) {
        size_t end = jsonl.find('\n', pos);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        std::string_view line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            parse_fail(line_no, fmt::format("malformed JSON ({})", e.what()));
        }
        manifest.clips.push_back(clip_from_json(obj, line_no));
    }
    if (manifest.clips.empty()) {
        throw_error(ErrorCode::PARSE_ERROR, "no records");
    }
    validate_manifest(manifest, clip_len);
    return manifest;
}

std::string
serialize_manifest(const StreamManifest& manifest) {
    std::string out;
    for (const auto& clip : manifest.clips) {
        out += clip_to_json(clip).dump();
        out += '\n';
    }
    return out;
}

StreamManifest
read_manifest_file(const std::filesystem::path& path, double clip_len) {
    try {
        return parse_manifest(read_text_file(path), clip_len);
    } catch (const Error& e) {
        throw Error(e.code(), fmt::format("{}: {}", path.string(), e.detail()));
    }
}

void
write_manifest_file(const StreamManifest& manifest, const std::filesystem::path& path) {
    write_text_file(path, serialize_manifest(manifest));
}

}  // namespace livemod
