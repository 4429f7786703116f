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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "livemod/embedding.h"
#include "livemod/mlp.h"
#include "livemod/stream_model.h"

namespace livemod {

/// Per-modality view of one clip. A modality is absent when the clip carries
/// no tokens for it; text is absent when the ASR string is empty.
struct ModalEmbeddings {
    std::optional<EmbeddingVector> visual;
    std::optional<EmbeddingVector> audio;
    std::string asr_text;
};

ModalEmbeddings
embed_modalities(const Clip& clip, const EmbeddingProvider& provider);

struct ClipPair {
    ClipRef query;
    const ModalEmbeddings* query_emb{nullptr};
    ClipRef candidate;
    const ModalEmbeddings* candidate_emb{nullptr};
};

struct FusionWeights {
    double visual{0.6};
    double text{0.3};
    double audio{0.1};

    void
    validate() const;
};

/// value = 1 / (1 + e^-(a * fusion + b)).
struct Calibration {
    double a{8.0};
    double b{-4.0};
};

struct RerankScore {
    double value{0.0};
    double fusion{0.0};
    std::optional<double> visual_sim;
    std::optional<double> text_sim;
    std::optional<double> audio_sim;
};

/// Lowercased whitespace-token Jaccard overlap; 0 when both sides are empty.
double
text_similarity(std::string_view a, std::string_view b);

/// Weighted mean of the similarities present on both sides, then the
/// logistic calibration. Throws INVALID_ARGUMENT when no weighted modality is
/// shared.
RerankScore
score_pair(const ClipPair& pair, const FusionWeights& weights, const Calibration& calibration);

/// Immutable after construction; safe to share across threads.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual RerankScore
    score(const ClipPair& pair) const = 0;
    virtual std::string
    name() const = 0;
};

class FusionScorer : public PairScorer {
public:
    explicit FusionScorer(FusionWeights weights = {}, Calibration calibration = {});

    RerankScore
    score(const ClipPair& pair) const override;
    std::string
    name() const override {
        return "fusion";
    }
    const FusionWeights&
    weights() const {
        return weights_;
    }

private:
    FusionWeights weights_;
    Calibration calibration_;
};

/// [visual, text, audio similarity, then a presence flag per modality];
/// absent similarities are 0.
std::vector<double>
pair_features(const ClipPair& pair);

constexpr size_t kPairFeatureDim = 6;

/// Two-class MLP over pair_features; value is the match-class probability and
/// fusion the logit margin, so the calibration is the identity logistic.
class StudentPairScorer : public PairScorer {
public:
    explicit StudentPairScorer(MlpClassifier model);

    RerankScore
    score(const ClipPair& pair) const override;
    std::string
    name() const override {
        return "student";
    }

private:
    MlpClassifier model_;
};

struct RerankCandidate {
    ClipRef ref;
    double retrieval_sim{0.0};
    const ModalEmbeddings* emb{nullptr};
};

struct RerankedCandidate {
    ClipRef ref;
    double retrieval_sim{0.0};
    RerankScore score;
};

/// Rescores candidates, drops scores below tau, sorts by score descending with
/// ClipRef as the tie-break.
std::vector<RerankedCandidate>
rerank(std::span<const RerankCandidate> candidates,
       const ClipRef& query,
       const ModalEmbeddings& query_emb,
       const PairScorer& scorer,
       double tau);

}  // namespace livemod
