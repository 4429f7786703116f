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

#include "livemod/embedding.h"
#include "livemod/losses.h"
#include "livemod/mlp.h"
#include "livemod/stream_model.h"

namespace livemod {

/// Clip -> probabilities over C preset classes, class 0 benign.
/// Implementations are immutable and deterministic per clip.
class PresetScorer {
public:
    virtual ~PresetScorer() = default;

    virtual ProbVector
    score(const Clip& clip) const = 0;

    virtual size_t
    num_classes() const = 0;

    virtual std::string
    name() const = 0;
};

/// Unit prototype of violation class `cls` (>= 1), shared by the corpus
/// generator and the prototype scorer.
EmbeddingVector
preset_prototype(uint64_t seed, size_t cls, size_t dim = kMaxEmbeddingDim);

struct PrototypeScorerParams {
    size_t num_classes{4};
    double kappa{12.0};
    double benign_bias{0.5};  // benign logit = kappa * benign_bias
    uint64_t seed{9001};
    size_t dim{128};

    void
    validate() const;
};

/// Softmax over kappa * cos(visual, prototype_c); clips without visual tokens
/// score as certainly benign.
class PrototypePresetScorer : public PresetScorer {
public:
    explicit PrototypePresetScorer(PrototypeScorerParams params = {});

    ProbVector
    score(const Clip& clip) const override;

    size_t
    num_classes() const override {
        return params_.num_classes;
    }

    std::string
    name() const override {
        return "prototype";
    }

private:
    PrototypeScorerParams params_;
    std::vector<EmbeddingVector> prototypes_;  // index 0 unused
};

/// Distilled classifier over the pooled visual embedding truncated to the
/// model's input dimension.
class StudentPresetScorer : public PresetScorer {
public:
    explicit StudentPresetScorer(MlpClassifier model);

    ProbVector
    score(const Clip& clip) const override;

    size_t
    num_classes() const override {
        return model_.num_classes();
    }

    std::string
    name() const override {
        return "student";
    }

private:
    MlpClassifier model_;
};

}  // namespace livemod
