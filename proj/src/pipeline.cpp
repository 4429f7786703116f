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


#include "livemod/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "livemod/errors.h"

namespace livemod {

namespace {

using ojson = nlohmann::ordered_json;

class StageClock {
public:
    explicit StageClock(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {
    }
    ~StageClock() {
        sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

template <typename E>
E
enum_from(std::string_view name, std::initializer_list<std::pair<std::string_view, E>> table, const char* what) {
    for (const auto& [n, e] : table) {
        if (n == name) {
            return e;
        }
    }
    throw_error(ErrorCode::PARSE_ERROR, fmt::format("unknown {} '{}'", what, name));
}

VerdictKind
verdict_from(std::string_view name) {
    return enum_from<VerdictKind>(name,
                                  {{"no_match", VerdictKind::NO_MATCH},
                                   {"weak", VerdictKind::WEAK},
                                   {"confirmed", VerdictKind::CONFIRMED}},
                                  "verdict");
}

ojson
reference_json(const ReferenceEvidence& r) {
    return {{"reference_stream", r.reference_stream},
            {"category", r.category},
            {"verdict", verdict_name(r.verdict)},
            {"l_max", r.l_max},
            {"agg_score", r.agg_score}};
}

ReferenceEvidence
reference_from(const nlohmann::json& j) {
    return {j.at("reference_stream").get<std::string>(),
            j.at("category").get<std::string>(),
            verdict_from(j.at("verdict").get<std::string>()),
            j.at("l_max").get<size_t>(),
            j.at("agg_score").get<double>()};
}

/// Strongest first: verdict, then chain length, then score, then stream id.
bool
stronger(const ReferenceEvidence& a, const ReferenceEvidence& b) {
    if (a.verdict != b.verdict) {
        return a.verdict > b.verdict;
    }
    if (a.l_max != b.l_max) {
        return a.l_max > b.l_max;
    }
    if (a.agg_score != b.agg_score) {
        return a.agg_score > b.agg_score;
    }
    return a.reference_stream < b.reference_stream;
}

void
validate_clip(const Clip& clip, double clip_len) {
    if (clip.stream_id.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip has an empty stream_id");
    }
    if (clip.clip_index < 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip_index must be >= 0");
    }
    if (!(clip.duration_s > 0.0) || clip.duration_s > clip_len + 1e-9) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("clip {} duration_s must lie in (0, clip_len]", to_string(clip.ref())));
    }
    if (std::abs(clip.start_s - static_cast<double>(clip.clip_index) * clip_len) > 1e-6) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("clip {} start_s must equal clip_index * clip_len", to_string(clip.ref())));
    }
}

}  // namespace

std::string_view
decision_name(Decision d) {
    switch (d) {
        case Decision::ALLOW:
            return "allow";
        case Decision::REVIEW:
            return "review";
        case Decision::ENFORCE:
            return "enforce";
    }
    return "unknown";
}

std::string_view
path_name(EvidencePath p) {
    switch (p) {
        case EvidencePath::NONE:
            return "none";
        case EvidencePath::PRESET:
            return "preset";
        case EvidencePath::REFERENCE:
            return "reference";
        case EvidencePath::BOTH:
            return "both";
    }
    return "unknown";
}

std::string
outcome_to_json(const ModerationOutcome& o) {
    ojson j;
    j["stream_id"] = o.stream_id;
    j["clip_index"] = o.clip_index;
    j["start_s"] = o.start_s;
    j["end_s"] = o.end_s;
    j["decision"] = decision_name(o.decision);
    j["path"] = path_name(o.path);
    if (o.preset) {
        j["preset"] = {{"class", o.preset->cls},
                       {"probability", o.preset->probability},
                       {"triggered", o.preset->triggered}};
    } else {
        j["preset"] = nullptr;
    }
    j["reference"] = o.reference ? reference_json(*o.reference) : ojson(nullptr);
    j["matches"] = ojson::array();
    for (const auto& m : o.matches) {
        j["matches"].push_back(reference_json(m));
    }
    j["retrieved"] = ojson::array();
    for (const auto& r : o.retrieved) {
        j["retrieved"].push_back({{"stream_id", r.ref.stream_id},
                                  {"clip_index", r.ref.clip_index},
                                  {"category", r.category},
                                  {"similarity", r.similarity}});
    }
    return j.dump();
}

ModerationOutcome
outcome_from_json(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        ModerationOutcome o;
        o.stream_id = j.at("stream_id").get<std::string>();
        o.clip_index = j.at("clip_index").get<int64_t>();
        o.start_s = j.at("start_s").get<double>();
        o.end_s = j.at("end_s").get<double>();
        o.decision = enum_from<Decision>(j.at("decision").get<std::string>(),
                                         {{"allow", Decision::ALLOW},
                                          {"review", Decision::REVIEW},
                                          {"enforce", Decision::ENFORCE}},
                                         "decision");
        o.path = enum_from<EvidencePath>(j.at("path").get<std::string>(),
                                         {{"none", EvidencePath::NONE},
                                          {"preset", EvidencePath::PRESET},
                                          {"reference", EvidencePath::REFERENCE},
                                          {"both", EvidencePath::BOTH}},
                                         "path");
        if (!j.at("preset").is_null()) {
            const auto& p = j["preset"];
            o.preset = PresetEvidence{p.at("class").get<size_t>(),
                                      p.at("probability").get<double>(),
                                      p.at("triggered").get<bool>()};
        }
        if (!j.at("reference").is_null()) {
            o.reference = reference_from(j["reference"]);
        }
        for (const auto& m : j.at("matches")) {
            o.matches.push_back(reference_from(m));
        }
        for (const auto& r : j.at("retrieved")) {
            o.retrieved.push_back({{r.at("stream_id").get<std::string>(), r.at("clip_index").get<int64_t>()},
                                   r.at("category").get<std::string>(),
                                   r.at("similarity").get<double>()});
        }
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::PARSE_ERROR, std::string("bad outcome record: ") + e.what());
    }
}

std::vector<ModerationOutcome>
parse_outcomes(std::string_view jsonl) {
    std::vector<ModerationOutcome> out;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < jsonl.size()) {
        size_t end = jsonl.find('\n', pos);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        ++line_no;
        auto line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            out.push_back(outcome_from_json(line));
        } catch (const Error& e) {
            throw_error(ErrorCode::PARSE_ERROR, fmt::format("line {}: {}", line_no, e.detail()));
        }
    }
    return out;
}

std::string
serialize_outcomes(std::span<const ModerationOutcome> outcomes) {
    std::string out;
    for (const auto& o : outcomes) {
        out += outcome_to_json(o);
        out += '\n';
    }
    return out;
}

std::shared_ptr<const PresetScorer>
make_preset_scorer(const PipelineConfig& config) {
    const auto& p = config.preset_scorer;
    if (p.kind == "student") {
        std::shared_ptr<const PresetScorer> scorer;
        try {
            scorer = std::make_shared<StudentPresetScorer>(MlpClassifier::load(p.checkpoint));
        } catch (const Error& e) {
            throw_error(ErrorCode::CONFIG_ERROR, "preset_scorer.checkpoint: " + e.detail());
        }
        if (scorer->num_classes() != p.num_classes) {
            throw_error(ErrorCode::CONFIG_ERROR, "preset student class count differs from preset_scorer.num_classes");
        }
        return scorer;
    }
    return std::make_shared<PrototypePresetScorer>(
        PrototypeScorerParams{p.num_classes, p.kappa, p.benign_bias, p.seed, config.embedding_dim});
}

std::shared_ptr<const PairScorer>
make_pair_scorer(const PipelineConfig& config) {
    const auto& r = config.reranker;
    if (r.kind == "student") {
        try {
            return std::make_shared<StudentPairScorer>(MlpClassifier::load(r.checkpoint));
        } catch (const Error& e) {
            throw_error(ErrorCode::CONFIG_ERROR, "reranker.checkpoint: " + e.detail());
        }
    }
    return std::make_shared<FusionScorer>(r.weights, r.calibration);
}

ModerationEngine::ModerationEngine(PipelineConfig config,
                                   std::shared_ptr<const PresetScorer> preset_scorer,
                                   std::shared_ptr<const PairScorer> pair_scorer)
    : config_(std::move(config)), preset_scorer_(std::move(preset_scorer)), pair_scorer_(std::move(pair_scorer)) {
    config_.validate();
    config_.hnsw.ef_search = static_cast<uint32_t>(config_.ef_search);
    agg_params_ = config_.agg_params();
    if (!preset_scorer_ || !pair_scorer_) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "engine needs a preset scorer and a pair scorer");
    }
    if (preset_scorer_->num_classes() != config_.preset_thresholds.size() + 1) {
        throw_error(ErrorCode::CONFIG_ERROR, "preset scorer class count does not match preset_thresholds");
    }
}

ModerationEngine::ModerationEngine(PipelineConfig config)
    : ModerationEngine(config, make_preset_scorer(config), make_pair_scorer(config)) {
}

ModalEmbeddings
ModerationEngine::embed(const Clip& clip) const {
    ModalEmbeddings m;
    if (!clip.visual_tokens.empty()) {
        auto pooled = mean_pool(clip.visual_tokens);
        if (pooled.dim() < config_.embedding_dim) {
            throw_error(ErrorCode::INVALID_ARGUMENT,
                        fmt::format("visual tokens of {} have dim {} < embedding_dim {}",
                                    to_string(clip.ref()),
                                    pooled.dim(),
                                    config_.embedding_dim));
        }
        m.visual = truncate(pooled, config_.embedding_dim);
    }
    if (!clip.audio_tokens.empty()) {
        m.audio = mean_pool(clip.audio_tokens);
    }
    m.asr_text = clip.asr_text;
    return m;
}

size_t
ModerationEngine::register_reference(StreamManifest manifest, const std::string& category) {
    if (manifest.clips.empty()) {
        return 0;
    }
    if (category.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "category name must be non-empty");
    }
    validate_manifest(manifest, config_.clip_len);
    std::vector<ReferenceEntry> entries;
    for (const auto& clip : manifest.clips) {
        if (clip.visual_tokens.empty()) {
            throw_error(ErrorCode::INVALID_ARGUMENT,
                        fmt::format("reference clip {} has no visual tokens", to_string(clip.ref())));
        }
        entries.push_back({category, clip.start_s, embed(clip)});
    }
    std::unique_lock lock(ref_mutex_);
    for (const auto& clip : manifest.clips) {
        if (references_.count(clip.ref()) != 0) {
            throw_error(ErrorCode::CONFLICT,
                        fmt::format("reference clip {} is already registered", to_string(clip.ref())));
        }
    }
    auto index = registry_.get_or_create(category, config_.hnsw);
    for (size_t i = 0; i < entries.size(); ++i) {
        index->insert(manifest.clips[i].ref(), *entries[i].emb.visual);
        references_.emplace(manifest.clips[i].ref(), std::move(entries[i]));
    }
    return entries.size();
}

ModerationEngine::StreamState&
ModerationEngine::stream_state(const std::string& stream_id) {
    std::lock_guard lock(streams_mutex_);
    auto& slot = streams_[stream_id];
    if (!slot) {
        slot = std::make_unique<StreamState>();
    }
    return *slot;
}

ModerationOutcome
ModerationEngine::ingest_clip(const Clip& clip) {
    validate_clip(clip, config_.clip_len);
    auto& state = stream_state(clip.stream_id);
    std::lock_guard lock(state.mutex);
    if (state.last_clip_index && clip.clip_index <= *state.last_clip_index) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("clip_index {} of stream {} does not follow {}",
                                clip.clip_index,
                                clip.stream_id,
                                *state.last_clip_index));
    }
    auto outcome = process(clip, state);
    state.last_clip_index = clip.clip_index;
    return outcome;
}

ModerationOutcome
ModerationEngine::process(const Clip& clip, StreamState& state) {
    StageTiming local;
    ModerationOutcome o;
    o.stream_id = clip.stream_id;
    o.clip_index = clip.clip_index;
    o.start_s = clip.start_s;
    o.end_s = clip.start_s + clip.duration_s;

    bool preset_evidence = false;
    bool preset_near = false;
    if (config_.enable_preset) {
        StageClock clock(local.preset_s);
        auto p = preset_scorer_->score(clip);
        if (p.size() != config_.preset_thresholds.size() + 1) {
            throw_error(ErrorCode::CONTRACT_VIOLATION, "preset scorer returned the wrong number of classes");
        }
        PresetEvidence ev;
        std::optional<size_t> best_triggered;
        for (size_t c = 1; c < p.size(); ++c) {
            double threshold = config_.preset_thresholds[c - 1];
            if (ev.cls == 0 || p[c] > p[ev.cls]) {
                ev.cls = c;
            }
            if (p[c] >= threshold && (!best_triggered || p[c] > p[*best_triggered])) {
                best_triggered = c;
            }
            if (p[c] >= threshold - config_.review_margins.preset) {
                preset_near = true;
            }
        }
        if (best_triggered) {
            ev.cls = *best_triggered;
            ev.triggered = true;
            preset_evidence = true;
        }
        ev.probability = p[ev.cls];
        o.preset = ev;
    }

    bool reference_evidence = false;
    bool reference_near = false;
    if (config_.enable_reference && !clip.visual_tokens.empty()) {
        auto emb = embed(clip);
        std::shared_lock ref_lock(ref_mutex_);
        std::vector<RetrievedRef> hits;
        {
            StageClock clock(local.retrieval_s);
            size_t ef = std::max(config_.ef_search, config_.top_k);
            for (const auto& category : registry_.categories()) {
                auto index = registry_.find(category);
                for (const auto& h : index->search(*emb.visual, config_.top_k, ef)) {
                    hits.push_back({h.ref, category, h.similarity});
                }
            }
            std::sort(hits.begin(), hits.end(), [](const RetrievedRef& a, const RetrievedRef& b) {
                if (a.similarity != b.similarity) {
                    return a.similarity > b.similarity;
                }
                return a.ref < b.ref;
            });
        }
        std::vector<RerankedCandidate> survivors;
        {
            StageClock clock(local.rerank_s);
            std::vector<RerankCandidate> candidates;
            for (const auto& h : hits) {
                candidates.push_back({h.ref, h.similarity, &references_.at(h.ref).emb});
            }
            survivors = rerank(candidates, clip.ref(), emb, *pair_scorer_, config_.rerank_tau);
        }
        {
            StageClock clock(local.aggregation_s);
            std::map<std::string, std::vector<std::pair<AggCandidate, std::string>>> groups;
            for (const auto& s : survivors) {
                const auto& entry = references_.at(s.ref);
                groups[s.ref.stream_id].push_back({{entry.start_s, s.score.value, s.ref.stream_id}, entry.category});
            }
            for (auto& [ref_stream, group] : groups) {
                // candidates of one clip enter in reference time order
                std::stable_sort(group.begin(), group.end(), [](const auto& a, const auto& b) {
                    return a.first.c_time < b.first.c_time;
                });
                std::vector<AggCandidate> cands;
                for (const auto& g : group) {
                    cands.push_back(g.first);
                }
                auto it = state.matches.find(ref_stream);
                if (it == state.matches.end()) {
                    it = state.matches.emplace(ref_stream, MatchState(clip.stream_id, ref_stream)).first;
                }
                it->second.process_query_clip(clip.start_s, cands, agg_params_);
                auto v = verdict(it->second, agg_params_);
                o.matches.push_back({ref_stream, group.front().second, v.kind, v.l_max, v.agg_score});
                reference_evidence |= v.kind == VerdictKind::CONFIRMED;
                reference_near |= v.kind == VerdictKind::WEAK && v.l_max + 1 >= agg_params_.l_min;
            }
            if (!o.matches.empty()) {
                o.reference = *std::min_element(o.matches.begin(), o.matches.end(), stronger);
            }
        }
        if (hits.size() > config_.top_k) {
            hits.resize(config_.top_k);
        }
        o.retrieved = std::move(hits);
    }

    if (preset_evidence || reference_evidence) {
        o.decision = Decision::ENFORCE;
        o.path = preset_evidence && reference_evidence ? EvidencePath::BOTH
                 : preset_evidence                     ? EvidencePath::PRESET
                                                       : EvidencePath::REFERENCE;
    } else if (preset_near || reference_near) {
        o.decision = Decision::REVIEW;
        o.path = preset_near && reference_near ? EvidencePath::BOTH
                 : preset_near                 ? EvidencePath::PRESET
                                               : EvidencePath::REFERENCE;
    }

    std::lock_guard lock(timing_mutex_);
    timing_.preset_s += local.preset_s;
    timing_.retrieval_s += local.retrieval_s;
    timing_.rerank_s += local.rerank_s;
    timing_.aggregation_s += local.aggregation_s;
    return o;
}

StreamResult
ModerationEngine::ingest_stream(StreamManifest manifest) {
    validate_manifest(manifest, config_.clip_len);
    StreamResult result;
    result.summary.stream_id = manifest.stream_id;
    for (const auto& clip : manifest.clips) {
        auto o = ingest_clip(clip);
        result.summary.decision = std::max(result.summary.decision, o.decision);
        if (o.decision == Decision::ENFORCE && !result.summary.first_enforcement) {
            result.summary.first_enforcement = o.clip_index;
        }
        result.outcomes.push_back(std::move(o));
    }
    result.summary.clips = result.outcomes.size();
    return result;
}

std::vector<StreamResult>
ModerationEngine::ingest_streams(std::span<const StreamManifest> manifests) {
    std::vector<StreamResult> results(manifests.size());
    std::vector<std::exception_ptr> errors(manifests.size());
    const size_t workers = std::min(config_.workers, std::max<size_t>(1, manifests.size()));
    auto run_shard = [&](size_t shard) {
        for (size_t i = 0; i < manifests.size(); ++i) {
            if (fnv1a64(manifests[i].stream_id) % workers != shard) {
                continue;
            }
            try {
                results[i] = ingest_stream(manifests[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run_shard(0);
    } else {
        std::vector<std::thread> threads;
        for (size_t s = 0; s < workers; ++s) {
            threads.emplace_back(run_shard, s);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

size_t
ModerationEngine::reference_count() const {
    std::shared_lock lock(ref_mutex_);
    return references_.size();
}

std::shared_ptr<const HnswIndex>
ModerationEngine::index(const std::string& category) const {
    return registry_.find(category);
}

void
ModerationEngine::save_indices(const std::filesystem::path& dir) const {
    std::shared_lock lock(ref_mutex_);
    registry_.save(dir);
}

void
ModerationEngine::load_indices(const std::filesystem::path& dir,
                               std::span<const std::pair<std::string, StreamManifest>> references) {
    CategoryRegistry loaded;
    loaded.load(dir);
    std::map<ClipRef, ReferenceEntry> entries;
    for (const auto& [category, original] : references) {
        auto manifest = original;
        validate_manifest(manifest, config_.clip_len);
        auto index = loaded.find(category);
        if (!index) {
            throw_error(ErrorCode::CORRUPT_SNAPSHOT, "snapshot has no index for category " + category);
        }
        if (index->dim() != config_.embedding_dim) {
            throw_error(ErrorCode::CONFIG_ERROR,
                        fmt::format("snapshot dim {} differs from embedding_dim {}", index->dim(), config_.embedding_dim));
        }
        for (const auto& clip : manifest.clips) {
            ReferenceEntry entry{category, clip.start_s, embed(clip)};
            auto stored = index->vector_of(clip.ref());
            if (!stored || !entry.emb.visual || !(*stored == *entry.emb.visual)) {
                throw_error(ErrorCode::CORRUPT_SNAPSHOT,
                            fmt::format("snapshot does not hold reference clip {} as given", to_string(clip.ref())));
            }
            if (!entries.emplace(clip.ref(), std::move(entry)).second) {
                throw_error(ErrorCode::CONFLICT, "duplicate reference clip " + to_string(clip.ref()));
            }
        }
    }
    size_t indexed = 0;
    for (const auto& category : loaded.categories()) {
        indexed += loaded.find(category)->size();
    }
    if (indexed != entries.size()) {
        throw_error(ErrorCode::CORRUPT_SNAPSHOT,
                    fmt::format("snapshot holds {} clips but the references list {}", indexed, entries.size()));
    }
    std::unique_lock lock(ref_mutex_);
    registry_.load(dir);
    references_ = std::move(entries);
}

StageTiming
ModerationEngine::timing() const {
    std::lock_guard lock(timing_mutex_);
    return timing_;
}

void
ModerationEngine::reset_streams() {
    std::lock_guard lock(streams_mutex_);
    streams_.clear();
}

}  // namespace livemod
