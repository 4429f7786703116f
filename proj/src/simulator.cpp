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


#include "livemod/simulator.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <random>
#include <set>

#include "livemod/embedding.h"
#include "livemod/errors.h"
#include "livemod/file_io.h"
#include "livemod/preset_scorer.h"

namespace livemod {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr uint64_t kBackgroundSalt = 0x4247ULL;
constexpr uint64_t kContentSalt = 0x434eULL;
constexpr uint64_t kAudioSalt = 0x4155ULL;
constexpr uint64_t kNoiseSalt = 0x4e53ULL;
constexpr uint64_t kWordSalt = 0x5744ULL;
constexpr uint64_t kStreamSalt = 0x5354ULL;
constexpr uint64_t kOrderSalt = 0x4f52ULL;
constexpr size_t kMinAligned = 3;
constexpr double kTokenJitter = 0.02;
constexpr double kValueQuantum = 1e-5;

constexpr std::array<const char*, 20> kSyllables = {"ka", "lo", "mi", "su", "te", "ra", "no", "vi", "pe", "du",
                                                    "sha", "gon", "bel", "tir", "qua", "zen", "mor", "fi", "lan", "ek"};

void
check(bool ok, const std::string& msg) {
    if (!ok) {
        throw_error(ErrorCode::INVALID_ARGUMENT, msg);
    }
}

void
check_range(const ValueRange& r, const char* name, double min_lo) {
    check(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi && r.lo >= min_lo,
          fmt::format("{} must satisfy {} <= lo <= hi", name, min_lo));
}

double
draw(std::mt19937_64& rng, const ValueRange& r) {
    if (r.lo == r.hi) {
        return r.lo;
    }
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double
quantize(double x) {
    return std::round(x / kValueQuantum) * kValueQuantum;
}

std::string
word(uint64_t id) {
    std::string w;
    for (int i = 0; i < 3; ++i) {
        w += kSyllables[id % kSyllables.size()];
        id /= kSyllables.size();
    }
    return w;
}

/// What a clip shows; the rendering adds noise on top.
struct ClipSource {
    uint64_t background{0};
    uint64_t content{0};
    std::optional<size_t> preset_class;
    double preset_strength{0.0};
};

class ClipRenderer {
public:
    explicit ClipRenderer(const CorpusConfig& cfg) : cfg_(cfg) {
        for (size_t c = 1; c < cfg.num_preset_classes; ++c) {
            auto p = preset_prototype(cfg.preset_seed, c);
            prototypes_.emplace(c, std::vector<double>(p.values().begin(), p.values().end()));
        }
    }

    /// `noise` is the clip-level perturbation; `asr_error` the chance each
    /// spoken word is misrecognized.
    Clip
    render(const ClipSource& src,
           const Segment& seg,
           const std::string& stream_id,
           double noise,
           double asr_error,
           uint64_t noise_seed,
           std::mt19937_64& rng) const {
        Clip clip;
        clip.stream_id = stream_id;
        clip.clip_index = seg.clip_index;
        clip.start_s = seg.start_s;
        clip.duration_s = seg.duration_s;

        const double w = cfg_.background_weight;
        auto bg = synthetic_base(src.background, kMaxEmbeddingDim);
        auto ct = synthetic_base(src.content, kMaxEmbeddingDim);
        std::vector<double> center(kMaxEmbeddingDim);
        for (size_t i = 0; i < kMaxEmbeddingDim; ++i) {
            double content = ct[i];
            if (src.preset_class) {
                const auto& proto = prototypes_.at(*src.preset_class);
                content = src.preset_strength * proto[i] + (1.0 - src.preset_strength) * ct[i];
            }
            center[i] = w * bg[i] + (1.0 - w) * content;
        }
        clip.visual_tokens = tokens(center, noise, mix_seed(noise_seed, 1), cfg_.visual_tokens);

        auto abg = synthetic_base(mix_seed(src.background, kAudioSalt), cfg_.audio_dim);
        auto act = synthetic_base(mix_seed(src.content, kAudioSalt), cfg_.audio_dim);
        std::vector<double> audio(cfg_.audio_dim);
        for (size_t i = 0; i < cfg_.audio_dim; ++i) {
            audio[i] = w * abg[i] + (1.0 - w) * act[i];
        }
        clip.audio_tokens = tokens(audio, noise, mix_seed(noise_seed, 2), cfg_.audio_tokens);

        clip.asr_text = speech(src.content, asr_error, rng);
        if (src.preset_class) {
            clip.label = static_cast<int>(*src.preset_class);
        }
        return clip;
    }

private:
    FeatureTokens
    tokens(const std::vector<double>& center, double noise, uint64_t seed, size_t count) const {
        const size_t dim = center.size();
        auto shared = gaussian_noise(mix_seed(seed, kNoiseSalt), dim);
        FeatureTokens out(count, std::vector<double>(dim));
        for (size_t t = 0; t < count; ++t) {
            auto jitter = gaussian_noise(mix_seed(seed, t + 1), dim);
            for (size_t i = 0; i < dim; ++i) {
                out[t][i] = quantize(center[i] + noise * shared[i] + kTokenJitter * jitter[i]);
            }
        }
        return out;
    }

    std::string
    speech(uint64_t content, double asr_error, std::mt19937_64& rng) const {
        const uint64_t silence = mix_seed(content, kWordSalt) % 10000;
        if (static_cast<double>(silence) < cfg_.silent_fraction * 10000.0) {
            return "";
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::string text;
        for (size_t i = 0; i < cfg_.asr_words; ++i) {
            uint64_t id = mix_seed(mix_seed(content, kWordSalt), i + 1);
            if (asr_error > 0.0 && u(rng) < asr_error) {
                id = rng();
            }
            if (!text.empty()) {
                text += ' ';
            }
            text += word(id);
        }
        return text;
    }

    const CorpusConfig& cfg_;
    std::map<size_t, std::vector<double>> prototypes_;
};

uint64_t
latent(uint64_t seed, uint64_t salt, uint64_t stream, uint64_t clip) {
    return mix_seed(mix_seed(mix_seed(seed, salt), stream), clip);
}

std::vector<Segment>
draw_segments(std::mt19937_64& rng, const CorpusConfig& cfg) {
    return segment_stream(draw(rng, cfg.duration_s), cfg.clip_len);
}

double
total_duration(const std::vector<Segment>& segs) {
    double total = 0.0;
    for (const auto& s : segs) {
        total += s.duration_s;
    }
    return total;
}

ojson
range_json(const ValueRange& r) {
    return ojson::array({r.lo, r.hi});
}

ValueRange
range_from(const json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw_error(ErrorCode::CONFIG_ERROR, fmt::format("{} must be a [lo, hi] pair", key));
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

StreamKind
kind_from(std::string_view name) {
    for (auto k : {StreamKind::REFERENCE, StreamKind::BENIGN, StreamKind::ADVERSARIAL, StreamKind::PRESET,
                   StreamKind::REBROADCAST}) {
        if (stream_kind_name(k) == name) {
            return k;
        }
    }
    throw_error(ErrorCode::PARSE_ERROR, fmt::format("unknown stream kind '{}'", name));
}

ojson
stream_truth_json(const StreamTruth& t) {
    ojson j = {{"stream_id", t.stream_id}, {"kind", stream_kind_name(t.kind)}, {"clips", t.clips}};
    switch (t.kind) {
        case StreamKind::REFERENCE:
            j["category"] = t.category;
            break;
        case StreamKind::PRESET:
            j["preset_class"] = t.preset_class;
            break;
        case StreamKind::REBROADCAST:
            j["source_stream_id"] = t.source_stream_id;
            j["offset_clips"] = t.offset_clips;
            j["offset_s"] = t.offset_s;
            j["noise_level"] = t.noise_level;
            break;
        case StreamKind::ADVERSARIAL:
            j["background_of"] = t.background_of;
            break;
        case StreamKind::BENIGN:
            break;
    }
    return j;
}

StreamTruth
stream_truth_from(const json& j) {
    StreamTruth t;
    t.stream_id = j.at("stream_id").get<std::string>();
    t.kind = kind_from(j.at("kind").get<std::string>());
    t.clips = j.at("clips").get<size_t>();
    t.category = j.value("category", "");
    t.preset_class = j.value("preset_class", size_t{0});
    t.source_stream_id = j.value("source_stream_id", "");
    t.offset_clips = j.value("offset_clips", int64_t{0});
    t.offset_s = j.value("offset_s", 0.0);
    t.noise_level = j.value("noise_level", 0.0);
    t.background_of = j.value("background_of", "");
    return t;
}

}  // namespace

void
CorpusConfig::validate() const {
    check(n_reference + n_benign + n_preset + n_rebroadcast >= 1, "corpus needs at least one stream");
    check(n_rebroadcast == 0 || n_reference >= 1, "rebroadcasts need at least one reference stream");
    check(adversarial_fraction >= 0.0 && adversarial_fraction <= 1.0, "adversarial_fraction must lie in [0,1]");
    check(clip_len > 0.0 && std::isfinite(clip_len), "clip_len must be > 0");
    check_range(duration_s, "duration_s", static_cast<double>(kMinAligned) * clip_len);
    check_range(offset_s, "offset_s", -1e300);
    check_range(noise_level, "noise_level", 0.0);
    check_range(preset_strength, "preset_strength", 0.0);
    check(preset_strength.hi <= 1.0, "preset_strength must lie in [0,1]");
    check(num_preset_classes >= 2, "num_preset_classes must be >= 2 (benign plus one violation class)");
    check(!categories.empty(), "categories must be non-empty");
    for (const auto& c : categories) {
        check(!c.empty() && c.find('/') == std::string::npos, "category names must be non-empty path-safe strings");
    }
    check(background_weight >= 0.0 && background_weight < 1.0, "background_weight must lie in [0,1)");
    check(base_noise >= 0.0 && std::isfinite(base_noise), "base_noise must be >= 0");
    check(visual_tokens >= 1 && audio_tokens >= 1, "token counts must be >= 1");
    check(is_supported_dimension(audio_dim), "audio_dim must be a supported dimension");
    check(asr_words >= 1, "asr_words must be >= 1");
    check(silent_fraction >= 0.0 && silent_fraction <= 1.0, "silent_fraction must lie in [0,1]");
    double lo_clips = std::ceil(offset_s.lo / clip_len);
    double hi_clips = std::floor(offset_s.hi / clip_len);
    check(n_rebroadcast == 0 || lo_clips <= hi_clips, "offset_s must contain a whole number of clips");
}

std::string
corpus_config_to_json(const CorpusConfig& c) {
    ojson j = {
        {"seed", c.seed},
        {"n_reference", c.n_reference},
        {"n_benign", c.n_benign},
        {"n_preset", c.n_preset},
        {"n_rebroadcast", c.n_rebroadcast},
        {"adversarial_fraction", c.adversarial_fraction},
        {"duration_s", range_json(c.duration_s)},
        {"offset_s", range_json(c.offset_s)},
        {"noise_level", range_json(c.noise_level)},
        {"num_preset_classes", c.num_preset_classes},
        {"preset_strength", range_json(c.preset_strength)},
        {"preset_seed", c.preset_seed},
        {"categories", c.categories},
        {"clip_len", c.clip_len},
        {"background_weight", c.background_weight},
        {"base_noise", c.base_noise},
        {"visual_tokens", c.visual_tokens},
        {"audio_tokens", c.audio_tokens},
        {"audio_dim", c.audio_dim},
        {"asr_words", c.asr_words},
        {"silent_fraction", c.silent_fraction},
    };
    return j.dump(2) + "\n";
}

CorpusConfig
corpus_config_from_json(std::string_view text) {
    CorpusConfig c;
    try {
        auto j = json::parse(text);
        if (!j.is_object()) {
            throw_error(ErrorCode::CONFIG_ERROR, "corpus config must be a JSON object");
        }
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") {
                c.seed = value.get<uint64_t>();
            } else if (key == "n_reference") {
                c.n_reference = value.get<size_t>();
            } else if (key == "n_benign") {
                c.n_benign = value.get<size_t>();
            } else if (key == "n_preset") {
                c.n_preset = value.get<size_t>();
            } else if (key == "n_rebroadcast") {
                c.n_rebroadcast = value.get<size_t>();
            } else if (key == "adversarial_fraction") {
                c.adversarial_fraction = value.get<double>();
            } else if (key == "duration_s") {
                c.duration_s = range_from(value, "duration_s");
            } else if (key == "offset_s") {
                c.offset_s = range_from(value, "offset_s");
            } else if (key == "noise_level") {
                c.noise_level = range_from(value, "noise_level");
            } else if (key == "num_preset_classes") {
                c.num_preset_classes = value.get<size_t>();
            } else if (key == "preset_strength") {
                c.preset_strength = range_from(value, "preset_strength");
            } else if (key == "preset_seed") {
                c.preset_seed = value.get<uint64_t>();
            } else if (key == "categories") {
                c.categories = value.get<std::vector<std::string>>();
            } else if (key == "clip_len") {
                c.clip_len = value.get<double>();
            } else if (key == "background_weight") {
                c.background_weight = value.get<double>();
            } else if (key == "base_noise") {
                c.base_noise = value.get<double>();
            } else if (key == "visual_tokens") {
                c.visual_tokens = value.get<size_t>();
            } else if (key == "audio_tokens") {
                c.audio_tokens = value.get<size_t>();
            } else if (key == "audio_dim") {
                c.audio_dim = value.get<size_t>();
            } else if (key == "asr_words") {
                c.asr_words = value.get<size_t>();
            } else if (key == "silent_fraction") {
                c.silent_fraction = value.get<double>();
            } else {
                throw_error(ErrorCode::CONFIG_ERROR, fmt::format("unknown corpus config key '{}'", key));
            }
        }
    } catch (const json::exception& e) {
        throw_error(ErrorCode::CONFIG_ERROR, std::string("corpus config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw_error(ErrorCode::CONFIG_ERROR, e.detail());
    }
    return c;
}

std::string_view
stream_kind_name(StreamKind kind) {
    switch (kind) {
        case StreamKind::REFERENCE:
            return "reference";
        case StreamKind::BENIGN:
            return "benign";
        case StreamKind::ADVERSARIAL:
            return "adversarial";
        case StreamKind::PRESET:
            return "preset";
        case StreamKind::REBROADCAST:
            return "rebroadcast";
    }
    return "unknown";
}

const StreamTruth*
GroundTruth::query(std::string_view stream_id) const {
    for (const auto& t : queries) {
        if (t.stream_id == stream_id) {
            return &t;
        }
    }
    return nullptr;
}

const StreamTruth*
GroundTruth::reference(std::string_view stream_id) const {
    for (const auto& t : references) {
        if (t.stream_id == stream_id) {
            return &t;
        }
    }
    return nullptr;
}

std::string
truth_to_json(const GroundTruth& truth) {
    ojson j = {{"references", ojson::array()}, {"queries", ojson::array()}};
    for (const auto& t : truth.references) {
        j["references"].push_back(stream_truth_json(t));
    }
    for (const auto& t : truth.queries) {
        j["queries"].push_back(stream_truth_json(t));
    }
    return j.dump(2) + "\n";
}

GroundTruth
truth_from_json(std::string_view text) {
    GroundTruth truth;
    try {
        auto j = json::parse(text);
        for (const auto& t : j.at("references")) {
            truth.references.push_back(stream_truth_from(t));
        }
        for (const auto& t : j.at("queries")) {
            truth.queries.push_back(stream_truth_from(t));
        }
    } catch (const json::exception& e) {
        throw_error(ErrorCode::PARSE_ERROR, std::string("truth.json: ") + e.what());
    }
    std::set<std::string> ids;
    for (const auto* list : {&truth.references, &truth.queries}) {
        for (const auto& t : *list) {
            if (t.stream_id.empty() || !ids.insert(t.stream_id).second) {
                throw_error(ErrorCode::VALIDATION_ERROR, "truth.json: empty or duplicate stream id " + t.stream_id);
            }
        }
    }
    for (const auto& t : truth.queries) {
        if (t.kind == StreamKind::REBROADCAST && truth.reference(t.source_stream_id) == nullptr) {
            throw_error(ErrorCode::VALIDATION_ERROR,
                        fmt::format("truth.json: rebroadcast {} names unknown source {}", t.stream_id, t.source_stream_id));
        }
    }
    return truth;
}

Corpus
generate_corpus(const CorpusConfig& cfg) {
    cfg.validate();
    Corpus corpus;
    corpus.config = cfg;
    ClipRenderer renderer(cfg);
    const double L = cfg.clip_len;

    struct RefInfo {
        uint64_t background;
        std::vector<uint64_t> contents;
    };
    std::vector<RefInfo> refs;
    for (size_t r = 0; r < cfg.n_reference; ++r) {
        std::mt19937_64 rng(latent(cfg.seed, kStreamSalt, 0, r));
        auto segs = draw_segments(rng, cfg);
        StreamManifest m;
        m.stream_id = fmt::format("ref_{:03d}", r);
        m.total_duration_s = total_duration(segs);
        RefInfo info{latent(cfg.seed, kBackgroundSalt, 0, r), {}};
        for (const auto& seg : segs) {
            ClipSource src{info.background,
                           latent(cfg.seed, kContentSalt, r, static_cast<uint64_t>(seg.clip_index)),
                           std::nullopt,
                           0.0};
            info.contents.push_back(src.content);
            m.clips.push_back(renderer.render(src, seg, m.stream_id, cfg.base_noise, 0.0, rng(), rng));
        }
        const auto& category = cfg.categories[r % cfg.categories.size()];
        corpus.truth.references.push_back(
            {m.stream_id, StreamKind::REFERENCE, category, 0, "", 0, 0.0, 0.0, "", m.clips.size()});
        corpus.references.emplace_back(category, std::move(m));
        refs.push_back(std::move(info));
    }

    // query plans, named after a seeded shuffle so ids carry no label
    std::vector<std::pair<StreamKind, size_t>> plans;
    const auto n_adversarial =
        cfg.n_reference == 0 ? size_t{0}
                             : static_cast<size_t>(std::llround(cfg.adversarial_fraction * static_cast<double>(cfg.n_benign)));
    for (size_t i = 0; i < cfg.n_benign; ++i) {
        plans.emplace_back(i < n_adversarial ? StreamKind::ADVERSARIAL : StreamKind::BENIGN, i);
    }
    for (size_t i = 0; i < cfg.n_preset; ++i) {
        plans.emplace_back(StreamKind::PRESET, i);
    }
    for (size_t i = 0; i < cfg.n_rebroadcast; ++i) {
        plans.emplace_back(StreamKind::REBROADCAST, i);
    }
    std::mt19937_64 order_rng(mix_seed(cfg.seed, kOrderSalt));
    std::shuffle(plans.begin(), plans.end(), order_rng);

    for (size_t q = 0; q < plans.size(); ++q) {
        const auto [kind, i] = plans[q];
        const uint64_t stream_key = (static_cast<uint64_t>(kind) << 32) + i;
        std::mt19937_64 rng(latent(cfg.seed, kStreamSalt, 1, stream_key));
        auto segs = draw_segments(rng, cfg);
        StreamManifest m;
        m.stream_id = fmt::format("live_{:03d}", q);
        m.total_duration_s = total_duration(segs);
        StreamTruth t;
        t.stream_id = m.stream_id;
        t.kind = kind;
        t.clips = segs.size();

        uint64_t background = latent(cfg.seed, kBackgroundSalt, 1, stream_key);
        if (kind == StreamKind::ADVERSARIAL) {
            background = refs[i % refs.size()].background;
            t.background_of = corpus.references[i % refs.size()].second.stream_id;
        }
        auto fresh = [&](const Segment& seg) {
            return latent(cfg.seed, kContentSalt, (1ULL << 40) + stream_key, static_cast<uint64_t>(seg.clip_index));
        };

        int64_t k = 0;
        const RefInfo* source = nullptr;
        if (kind == StreamKind::REBROADCAST) {
            const size_t r = i % refs.size();
            source = &refs[r];
            const auto n_src = static_cast<int64_t>(source->contents.size());
            const auto n_q = static_cast<int64_t>(segs.size());
            auto k_lo = std::max(static_cast<int64_t>(std::ceil(cfg.offset_s.lo / L)), static_cast<int64_t>(kMinAligned) - n_src);
            auto k_hi = std::min(static_cast<int64_t>(std::floor(cfg.offset_s.hi / L)), n_q - static_cast<int64_t>(kMinAligned));
            if (k_lo > k_hi) {
                throw_error(ErrorCode::INVALID_ARGUMENT,
                            "offset_s and duration_s leave no offset with 3 aligned clips for " + m.stream_id);
            }
            k = std::uniform_int_distribution<int64_t>(k_lo, k_hi)(rng);
            t.source_stream_id = corpus.references[r].second.stream_id;
            t.offset_clips = k;
            t.offset_s = static_cast<double>(k) * L;
            t.noise_level = draw(rng, cfg.noise_level);
        }
        if (kind == StreamKind::PRESET) {
            t.preset_class = 1 + i % (cfg.num_preset_classes - 1);
        }

        for (const auto& seg : segs) {
            ClipSource src{background, fresh(seg), std::nullopt, 0.0};
            double noise = cfg.base_noise;
            double asr_error = 0.0;
            std::optional<std::string> replayed;
            if (source != nullptr) {
                const int64_t j = seg.clip_index - k;
                if (j >= 0 && j < static_cast<int64_t>(source->contents.size())) {
                    src = {source->background, source->contents[static_cast<size_t>(j)], std::nullopt, 0.0};
                    noise = t.noise_level;
                    asr_error = std::min(0.5, 0.5 * t.noise_level);
                    replayed = t.source_stream_id;
                }
            }
            if (kind == StreamKind::PRESET) {
                src.preset_class = t.preset_class;
                src.preset_strength = draw(rng, cfg.preset_strength);
            }
            auto clip = renderer.render(src, seg, m.stream_id, noise, asr_error, rng(), rng);
            clip.source_stream_id = replayed;
            m.clips.push_back(std::move(clip));
        }
        corpus.truth.queries.push_back(std::move(t));
        corpus.queries.push_back(std::move(m));
    }
    return corpus;
}

void
write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    try {
        fs::create_directories(dir / "refs");
        fs::create_directories(dir / "queries");
        for (const auto& [category, m] : corpus.references) {
            fs::create_directories(dir / "refs" / category);
            write_manifest_file(m, dir / "refs" / category / (m.stream_id + ".jsonl"));
        }
        for (const auto& m : corpus.queries) {
            write_manifest_file(m, dir / "queries" / (m.stream_id + ".jsonl"));
        }
    } catch (const fs::filesystem_error& e) {
        throw_error(ErrorCode::IO_ERROR, e.what());
    }
    write_text_file(dir / "truth.json", truth_to_json(corpus.truth));
    write_text_file(dir / "corpus_config.json", corpus_config_to_json(corpus.config));
}

Corpus
read_corpus(const std::filesystem::path& dir) {
    Corpus corpus;
    corpus.config = corpus_config_from_json(read_text_file(dir / "corpus_config.json"));
    corpus.truth = truth_from_json(read_text_file(dir / "truth.json"));
    const double L = corpus.config.clip_len;
    for (const auto& t : corpus.truth.references) {
        corpus.references.emplace_back(t.category,
                                       read_manifest_file(dir / "refs" / t.category / (t.stream_id + ".jsonl"), L));
    }
    for (const auto& t : corpus.truth.queries) {
        corpus.queries.push_back(read_manifest_file(dir / "queries" / (t.stream_id + ".jsonl"), L));
    }
    return corpus;
}

std::map<ClipRef, ClipRef>
aligned_clips(const GroundTruth& truth) {
    std::map<ClipRef, ClipRef> out;
    for (const auto& t : truth.queries) {
        if (t.kind != StreamKind::REBROADCAST) {
            continue;
        }
        const auto* src = truth.reference(t.source_stream_id);
        if (src == nullptr) {
            throw_error(ErrorCode::VALIDATION_ERROR, "rebroadcast source missing: " + t.source_stream_id);
        }
        for (int64_t i = 0; i < static_cast<int64_t>(t.clips); ++i) {
            const int64_t j = i - t.offset_clips;
            if (j >= 0 && j < static_cast<int64_t>(src->clips)) {
                out.emplace(ClipRef{t.stream_id, i}, ClipRef{src->stream_id, j});
            }
        }
    }
    return out;
}

SweepData
sweep_data(const Corpus& corpus) {
    SweepData data;
    for (const auto& [category, m] : corpus.references) {
        for (const auto& clip : m.clips) {
            data.corpus.emplace_back(clip.ref(), mean_pool(clip.visual_tokens));
        }
    }
    auto aligned = aligned_clips(corpus.truth);
    for (const auto& m : corpus.queries) {
        for (const auto& clip : m.clips) {
            auto it = aligned.find(clip.ref());
            if (it != aligned.end()) {
                data.queries.push_back({to_string(clip.ref()), mean_pool(clip.visual_tokens), {it->second}});
            }
        }
    }
    return data;
}

}  // namespace livemod
