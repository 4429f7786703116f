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

#include "livemod/reranker.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "livemod/errors.h"

namespace livemod {

namespace {

std::set<std::string>
token_set(std::string_view text) {
    std::set<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                tokens.insert(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) {
        tokens.insert(std::move(current));
    }
    return tokens;
}

void
check_pair(const ClipPair& pair) {
    if (pair.query_emb == nullptr || pair.candidate_emb == nullptr) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip pair is missing embeddings");
    }
}

std::optional<double>
shared_cosine(const std::optional<EmbeddingVector>& a, const std::optional<EmbeddingVector>& b) {
    if (!a || !b) {
        return std::nullopt;
    }
    return cosine(*a, *b);
}

// Components shared by both sides of the pair.
RerankScore
components(const ClipPair& pair) {
    check_pair(pair);
    RerankScore s;
    s.visual_sim = shared_cosine(pair.query_emb->visual, pair.candidate_emb->visual);
    s.audio_sim = shared_cosine(pair.query_emb->audio, pair.candidate_emb->audio);
    if (!pair.query_emb->asr_text.empty() && !pair.candidate_emb->asr_text.empty()) {
        s.text_sim = text_similarity(pair.query_emb->asr_text, pair.candidate_emb->asr_text);
    }
    return s;
}

double
logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

ModalEmbeddings
embed_modalities(const Clip& clip, const EmbeddingProvider& provider) {
    ModalEmbeddings m;
    if (!clip.visual_tokens.empty()) {
        m.visual = provider.embed(clip, Modality::VISUAL);
    }
    if (!clip.audio_tokens.empty()) {
        m.audio = provider.embed(clip, Modality::AUDIO);
    }
    m.asr_text = clip.asr_text;
    return m;
}

void
FusionWeights::validate() const {
    if (visual < 0.0 || text < 0.0 || audio < 0.0 || !std::isfinite(visual + text + audio)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "fusion weights must be finite and >= 0");
    }
    if (visual + text + audio <= 0.0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "fusion weights may not all be zero");
    }
}

double
text_similarity(std::string_view a, std::string_view b) {
    auto ta = token_set(a);
    auto tb = token_set(b);
    if (ta.empty() && tb.empty()) {
        return 0.0;
    }
    size_t common = 0;
    for (const auto& t : ta) {
        common += tb.count(t);
    }
    return static_cast<double>(common) / static_cast<double>(ta.size() + tb.size() - common);
}

RerankScore
score_pair(const ClipPair& pair, const FusionWeights& weights, const Calibration& calibration) {
    weights.validate();
    RerankScore s = components(pair);
    double num = 0.0;
    double den = 0.0;
    auto add = [&](const std::optional<double>& sim, double w) {
        if (sim) {
            num += w * *sim;
            den += w;
        }
    };
    add(s.visual_sim, weights.visual);
    add(s.text_sim, weights.text);
    add(s.audio_sim, weights.audio);
    if (den <= 0.0) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    "no weighted modality is present on both sides of " + to_string(pair.query) +
                        " / " + to_string(pair.candidate));
    }
    s.fusion = num / den;
    s.value = logistic(calibration.a * s.fusion + calibration.b);
    return s;
}

FusionScorer::FusionScorer(FusionWeights weights, Calibration calibration)
    : weights_(weights), calibration_(calibration) {
    weights_.validate();
}

RerankScore
FusionScorer::score(const ClipPair& pair) const {
    return score_pair(pair, weights_, calibration_);
}

std::vector<double>
pair_features(const ClipPair& pair) {
    RerankScore s = components(pair);
    return {s.visual_sim.value_or(0.0), s.text_sim.value_or(0.0), s.audio_sim.value_or(0.0),
            s.visual_sim ? 1.0 : 0.0,   s.text_sim ? 1.0 : 0.0,   s.audio_sim ? 1.0 : 0.0};
}

StudentPairScorer::StudentPairScorer(MlpClassifier model) : model_(std::move(model)) {
    if (model_.input_dim() != kPairFeatureDim || model_.num_classes() != 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    "student pair scorer needs 6 input features and 2 classes");
    }
}

RerankScore
StudentPairScorer::score(const ClipPair& pair) const {
    RerankScore s = components(pair);
    if (!s.visual_sim && !s.text_sim && !s.audio_sim) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "no modality is present on both sides of the pair");
    }
    auto f = pair_features(pair);
    Eigen::MatrixXd x = Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    Eigen::MatrixXd logits = model_.logits(x);
    s.fusion = logits(0, 1) - logits(0, 0);
    s.value = logistic(s.fusion);
    return s;
}

std::vector<RerankedCandidate>
rerank(std::span<const RerankCandidate> candidates,
       const ClipRef& query,
       const ModalEmbeddings& query_emb,
       const PairScorer& scorer,
       double tau) {
    std::vector<RerankedCandidate> out;
    for (const auto& c : candidates) {
        ClipPair pair{query, &query_emb, c.ref, c.emb};
        RerankScore s = scorer.score(pair);
        if (s.value >= tau) {
            out.push_back({c.ref, c.retrieval_sim, s});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const RerankedCandidate& a, const RerankedCandidate& b) {
        if (a.score.value != b.score.value) {
            return a.score.value > b.score.value;
        }
        return a.ref < b.ref;
    });
    return out;
}

}  // namespace livemod
