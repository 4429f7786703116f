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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "livemod/evalkit.h"
#include "livemod/stream_model.h"

namespace livemod {

struct ValueRange {
    double lo{0.0};
    double hi{0.0};

    bool
    operator==(const ValueRange&) const = default;
};

/// Synthetic corpus description. Reference streams are the known-violating
/// set; every query stream is benign, preset-violating or a rebroadcast of a
/// reference stream.
struct CorpusConfig {
    uint64_t seed{1};
    size_t n_reference{16};
    size_t n_benign{40};
    size_t n_preset{8};
    size_t n_rebroadcast{12};
    /// Fraction of benign streams that reuse a reference stream's background.
    double adversarial_fraction{0.25};
    ValueRange duration_s{120.0, 300.0};
    /// Query time minus reference time; drawn as a whole number of clips.
    ValueRange offset_s{-60.0, 120.0};
    ValueRange noise_level{0.1, 0.5};
    /// Preset classes including benign class 0.
    size_t num_preset_classes{4};
    ValueRange preset_strength{0.4, 0.9};
    uint64_t preset_seed{9001};
    std::vector<std::string> categories{"sports", "film"};
    double clip_len{kDefaultClipLen};
    double background_weight{0.4};
    /// Noise every clip carries, including references.
    double base_noise{0.05};
    size_t visual_tokens{2};
    size_t audio_tokens{2};
    size_t audio_dim{32};
    size_t asr_words{8};
    double silent_fraction{0.1};

    /// Throws INVALID_ARGUMENT naming the field.
    void
    validate() const;

    bool
    operator==(const CorpusConfig&) const = default;
};

std::string
corpus_config_to_json(const CorpusConfig& cfg);

/// Unknown keys and bad types are CONFIG_ERROR; missing keys keep defaults.
CorpusConfig
corpus_config_from_json(std::string_view text);

enum class StreamKind { REFERENCE, BENIGN, ADVERSARIAL, PRESET, REBROADCAST };

std::string_view
stream_kind_name(StreamKind kind);

struct StreamTruth {
    std::string stream_id;
    StreamKind kind{StreamKind::BENIGN};
    std::string category;          // references only
    size_t preset_class{0};        // preset streams
    std::string source_stream_id;  // rebroadcasts
    int64_t offset_clips{0};       // rebroadcasts: query clip index - reference clip index
    double offset_s{0.0};          // the same offset in seconds
    double noise_level{0.0};       // rebroadcasts
    std::string background_of;     // adversarial streams
    size_t clips{0};

    /// Whether the stream counts as a violation for evaluation.
    bool
    violating() const {
        return kind == StreamKind::PRESET || kind == StreamKind::REBROADCAST;
    }

    bool
    operator==(const StreamTruth&) const = default;
};

struct GroundTruth {
    std::vector<StreamTruth> references;
    std::vector<StreamTruth> queries;

    const StreamTruth*
    query(std::string_view stream_id) const;

    const StreamTruth*
    reference(std::string_view stream_id) const;

    bool
    operator==(const GroundTruth&) const = default;
};

std::string
truth_to_json(const GroundTruth& truth);

GroundTruth
truth_from_json(std::string_view text);

struct Corpus {
    CorpusConfig config;
    std::vector<std::pair<std::string, StreamManifest>> references;  // (category, manifest)
    std::vector<StreamManifest> queries;
    GroundTruth truth;
};

Corpus
generate_corpus(const CorpusConfig& cfg);

/// Layout: refs/<category>/<stream>.jsonl, queries/<stream>.jsonl,
/// truth.json, corpus_config.json.
void
write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

Corpus
read_corpus(const std::filesystem::path& dir);

/// Query clip -> the reference clip it replays, for every rebroadcast clip
/// inside the aligned window.
std::map<ClipRef, ClipRef>
aligned_clips(const GroundTruth& truth);

/// Pooled 768-dim visual embeddings for a dimension sweep over rebroadcast
/// query clips against all reference clips.
struct SweepData {
    std::vector<std::pair<ClipRef, EmbeddingVector>> corpus;
    std::vector<SweepQuery> queries;
};

SweepData
sweep_data(const Corpus& corpus);

}  // namespace livemod
