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


#include "livemod/preset_scorer.h"

#include <cmath>

#include "livemod/errors.h"

namespace livemod {

namespace {

constexpr uint64_t kPrototypeSalt = 0x50524553ULL;

ProbVector
certain_benign(size_t num_classes) {
    std::vector<double> p(num_classes, 0.0);
    p[0] = 1.0;
    return ProbVector::from(std::move(p));
}

}  // namespace

EmbeddingVector
preset_prototype(uint64_t seed, size_t cls, size_t dim) {
    if (cls == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "class 0 is benign and has no prototype");
    }
    return synthetic_base(mix_seed(mix_seed(seed, kPrototypeSalt), cls), dim);
}

void
PrototypeScorerParams::validate() const {
    if (num_classes < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "preset scorer needs at least 2 classes");
    }
    if (!(kappa > 0.0) || !std::isfinite(kappa) || !std::isfinite(benign_bias)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "kappa must be > 0 and benign_bias finite");
    }
    if (!is_supported_dimension(dim)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "unsupported preset scorer dim");
    }
}

PrototypePresetScorer::PrototypePresetScorer(PrototypeScorerParams params) : params_(params) {
    params_.validate();
    prototypes_.resize(params_.num_classes);
    for (size_t c = 1; c < params_.num_classes; ++c) {
        prototypes_[c] = preset_prototype(params_.seed, c, params_.dim);
    }
}

ProbVector
PrototypePresetScorer::score(const Clip& clip) const {
    if (clip.visual_tokens.empty()) {
        return certain_benign(params_.num_classes);
    }
    auto v = truncate(mean_pool(clip.visual_tokens), params_.dim);
    std::vector<double> logits(params_.num_classes);
    logits[0] = params_.kappa * params_.benign_bias;
    for (size_t c = 1; c < params_.num_classes; ++c) {
        logits[c] = params_.kappa * cosine(v, prototypes_[c]);
    }
    return ProbVector::from_logits(logits);
}

StudentPresetScorer::StudentPresetScorer(MlpClassifier model) : model_(std::move(model)) {
    if (model_.num_classes() < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "student preset scorer needs at least 2 classes");
    }
}

ProbVector
StudentPresetScorer::score(const Clip& clip) const {
    if (clip.visual_tokens.empty()) {
        return certain_benign(model_.num_classes());
    }
    auto v = truncate(mean_pool(clip.visual_tokens), model_.input_dim());
    Eigen::MatrixXd x = Eigen::Map<const Eigen::RowVectorXd>(v.values().data(),
                                                             static_cast<Eigen::Index>(v.dim()));
    Eigen::MatrixXd p = model_.predict_proba(x);
    return ProbVector::from(std::vector<double>(p.data(), p.data() + p.size()));
}

}  // namespace livemod
