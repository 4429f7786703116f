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

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "livemod/encoder.h"
#include "livemod/losses.h"

namespace livemod {

/// FIFO ring of unit key vectors with the latent id each key was drawn from.
class MemoryBank {
public:
    static constexpr uint64_t kUnlabeled = ~uint64_t{0};

    MemoryBank(size_t capacity, size_t dim);

    /// Rows of `keys` oldest first. `labels` is empty or one per row; unlabeled
    /// keys only ever act as negatives.
    void
    push(const Eigen::MatrixXd& keys, std::span<const uint64_t> labels = {});

    size_t
    size() const {
        return size_;
    }
    size_t
    capacity() const {
        return capacity_;
    }
    size_t
    dim() const {
        return dim_;
    }

    /// Contents oldest first.
    Eigen::MatrixXd
    matrix() const;
    std::vector<uint64_t>
    labels() const;

private:
    size_t capacity_;
    size_t dim_;
    size_t size_{0};
    size_t cursor_{0};  // next slot to write
    Eigen::MatrixXd slots_;
    std::vector<uint64_t> labels_;
};

struct MomentumPair {
    Encoder query;
    Encoder key;
    double m{0.999};

    /// Key encoder starts as an exact copy of the query encoder.
    static MomentumPair
    create(const EncoderShape& shape, uint64_t seed, double m = 0.999);
};

void
momentum_update(MomentumPair& pair);

struct ViewPair {
    uint64_t latent{0};
    std::vector<double> view1;
    std::vector<double> view2;
};

struct MocoConfig {
    size_t steps{2000};
    size_t batch{32};
    double lr{1e-2};
    MsParams ms{};
    uint64_t seed{1};
};

struct MocoResult {
    Encoder encoder;
    std::vector<double> loss_trace;
};

/// Per step: queries from view1 through the query encoder, keys from view2
/// through the key encoder; keys and bank entries sharing the anchor's latent
/// are positives, the rest negatives. Only the query encoder gets gradients;
/// then momentum_update and the keys enter the bank.
MocoResult
train_moco(std::span<const ViewPair> data, MomentumPair& pair, MemoryBank& bank, const MocoConfig& cfg);

struct AlignedPair {
    uint64_t latent{0};
    std::vector<double> a;
    std::vector<double> b;
};

struct ClipConfig {
    size_t steps{1000};
    size_t batch{32};
    double lr{1e-2};
    double tau{0.1};
    uint64_t seed{1};
};

struct ClipResult {
    Encoder a;
    Encoder b;
    std::vector<double> loss_trace;
};

/// Minimizes clip_nt_xent over batches of pairs with distinct latents.
ClipResult
train_clip_alignment(std::span<const AlignedPair> data, Encoder a, Encoder b, const ClipConfig& cfg);

/// Two-modality toy data. A latent's base vector is mixed into input space by
/// a per-modality matrix; each view adds strong nuisance confined to a
/// per-modality random subspace plus small isotropic jitter, so an untrained
/// encoder retrieves poorly and training has something to remove.
struct ContrastiveTaskConfig {
    size_t latent_dim{16};
    size_t input_dim{32};
    size_t nuisance_rank{16};
    double nuisance_scale{3.0};
    double jitter{0.1};
    uint64_t seed{7};
};

class ContrastiveTask {
public:
    explicit ContrastiveTask(const ContrastiveTaskConfig& cfg);

    std::vector<double>
    view(int modality, uint64_t latent, uint64_t view_seed) const;

    /// One row per latent, each row view(modality, latent, mix_seed(latent, salt)).
    Eigen::MatrixXd
    views(int modality, std::span<const uint64_t> latents, uint64_t salt) const;

    const ContrastiveTaskConfig&
    config() const {
        return cfg_;
    }

private:
    ContrastiveTaskConfig cfg_;
    Eigen::MatrixXd mix_[2];       // input_dim x latent_dim
    Eigen::MatrixXd nuisance_[2];  // input_dim x nuisance_rank, orthonormal columns
};

/// Exact-cosine RecallOne@k of query rows against gallery rows; a gallery row
/// is relevant when its latent equals the query's.
double
latent_recall_one_at_k(const Eigen::MatrixXd& queries,
                       std::span<const uint64_t> query_latents,
                       const Eigen::MatrixXd& gallery,
                       std::span<const uint64_t> gallery_latents,
                       size_t k);

struct AblationConfig {
    ContrastiveTaskConfig task{};
    EncoderShape shape{};
    MocoConfig moco{};
    double momentum{0.99};
    size_t bank_size{1024};
    ClipConfig clip{};
    double clip_weight{1.0};
    size_t train_latents{32};
    size_t samples_per_latent{64};
    size_t eval_latents{64};
    size_t gallery_views{2};
    size_t k{5};
};

struct AblationResult {
    uint64_t seed{0};
    double untrained{0.0};
    double moco_only{0.0};
    double moco_clip{0.0};
    std::vector<double> moco_loss;   // modality-0 MoCo loss, MoCo-only arm
    std::vector<double> joint_loss;  // summed objective, joint arm
};

/// Cross-modal RecallOne@k (modality-0 queries against a modality-1 gallery of
/// held-out latents) for untrained encoders, MoCo per modality, and MoCo per
/// modality plus CLIP alignment. Both trained arms start from the same weights.
AblationResult
run_contrastive_ablation(const AblationConfig& cfg, uint64_t seed);

std::string
ablation_to_json(std::span<const AblationResult> results);

}  // namespace livemod
