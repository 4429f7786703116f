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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "livemod/aggregation.h"
#include "livemod/pipeline_config.h"
#include "livemod/preset_scorer.h"
#include "livemod/reranker.h"
#include "livemod/stream_model.h"
#include "livemod/vector_index.h"

namespace livemod {

enum class Decision { ALLOW, REVIEW, ENFORCE };  // ordered by severity

enum class EvidencePath { NONE, PRESET, REFERENCE, BOTH };

std::string_view
decision_name(Decision d);

std::string_view
path_name(EvidencePath p);

struct PresetEvidence {
    size_t cls{0};  // most probable violation class
    double probability{0.0};
    bool triggered{false};

    bool
    operator==(const PresetEvidence&) const = default;
};

struct ReferenceEvidence {
    std::string reference_stream;
    std::string category;
    VerdictKind verdict{VerdictKind::NO_MATCH};
    size_t l_max{0};
    double agg_score{0.0};

    bool
    operator==(const ReferenceEvidence&) const = default;
};

struct RetrievedRef {
    ClipRef ref;
    std::string category;
    double similarity{0.0};

    bool
    operator==(const RetrievedRef&) const = default;
};

struct ModerationOutcome {
    std::string stream_id;
    int64_t clip_index{0};
    double start_s{0.0};
    double end_s{0.0};
    Decision decision{Decision::ALLOW};
    EvidencePath path{EvidencePath::NONE};
    std::optional<PresetEvidence> preset;        // absent when the preset path is disabled
    std::optional<ReferenceEvidence> reference;  // strongest match state touched by this clip
    std::vector<ReferenceEvidence> matches;      // every match state touched, by reference stream
    std::vector<RetrievedRef> retrieved;         // merged top_k before reranking

    bool
    operator==(const ModerationOutcome&) const = default;
};

std::string
outcome_to_json(const ModerationOutcome& o);

ModerationOutcome
outcome_from_json(std::string_view line);

std::vector<ModerationOutcome>
parse_outcomes(std::string_view jsonl);

std::string
serialize_outcomes(std::span<const ModerationOutcome> outcomes);

struct StreamSummary {
    std::string stream_id;
    Decision decision{Decision::ALLOW};  // most severe clip decision
    std::optional<int64_t> first_enforcement;
    size_t clips{0};
};

struct StreamResult {
    std::vector<ModerationOutcome> outcomes;
    StreamSummary summary;
};

struct StageTiming {
    double preset_s{0.0};
    double retrieval_s{0.0};
    double rerank_s{0.0};
    double aggregation_s{0.0};
};

/// Dual-path moderation engine. Streams are serialized per stream id; index
/// reads run concurrently and reference registration takes the writer lock.
class ModerationEngine {
public:
    ModerationEngine(PipelineConfig config,
                     std::shared_ptr<const PresetScorer> preset_scorer,
                     std::shared_ptr<const PairScorer> pair_scorer);

    /// Builds scorers from the config (loading checkpoints if requested).
    explicit ModerationEngine(PipelineConfig config);

    const PipelineConfig&
    config() const {
        return config_;
    }

    /// Returns the number of clips indexed. Duplicate clips are CONFLICT and
    /// leave the engine unchanged.
    size_t
    register_reference(StreamManifest manifest, const std::string& category);

    ModerationOutcome
    ingest_clip(const Clip& clip);

    StreamResult
    ingest_stream(StreamManifest manifest);

    /// Streams are sharded over config().workers threads by stream id; the
    /// result order follows the input order.
    std::vector<StreamResult>
    ingest_streams(std::span<const StreamManifest> manifests);

    size_t
    reference_count() const;

    std::shared_ptr<const HnswIndex>
    index(const std::string& category) const;

    void
    save_indices(const std::filesystem::path& dir) const;

    /// Replaces the indices with a snapshot and attaches the reference
    /// manifests' modal data; every indexed clip must appear in `references`.
    void
    load_indices(const std::filesystem::path& dir,
                 std::span<const std::pair<std::string, StreamManifest>> references);

    StageTiming
    timing() const;

    /// Clears per-stream ordering and match state; references stay.
    void
    reset_streams();

private:
    struct ReferenceEntry {
        std::string category;
        double start_s{0.0};
        ModalEmbeddings emb;
    };

    struct StreamState {
        std::mutex mutex;
        std::optional<int64_t> last_clip_index;
        std::map<std::string, MatchState> matches;  // by reference stream
    };

    ModalEmbeddings
    embed(const Clip& clip) const;

    StreamState&
    stream_state(const std::string& stream_id);

    ModerationOutcome
    process(const Clip& clip, StreamState& state);

    PipelineConfig config_;
    AggParams agg_params_;
    std::shared_ptr<const PresetScorer> preset_scorer_;
    std::shared_ptr<const PairScorer> pair_scorer_;
    CategoryRegistry registry_;

    mutable std::shared_mutex ref_mutex_;
    std::map<ClipRef, ReferenceEntry> references_;

    std::mutex streams_mutex_;
    std::map<std::string, std::unique_ptr<StreamState>> streams_;

    mutable std::mutex timing_mutex_;
    StageTiming timing_;
};

std::shared_ptr<const PresetScorer>
make_preset_scorer(const PipelineConfig& config);

std::shared_ptr<const PairScorer>
make_pair_scorer(const PipelineConfig& config);

}  // namespace livemod
