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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "livemod/stream_model.h"

namespace livemod {

constexpr std::array<size_t, 6> kSupportedDims = {32, 64, 128, 256, 512, 768};
constexpr size_t kMaxEmbeddingDim = 768;

bool
is_supported_dimension(size_t dim);

/// Dense unit-norm vector with finite entries. Construction is the only way to
/// obtain one, so every instance satisfies the norm invariant.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Normalizes `raw`; throws DEGENERATE_INPUT for a zero or non-finite vector.
    static EmbeddingVector
    normalized(std::vector<double> raw);

    /// Accepts values already on the unit sphere (|norm - 1| <= 1e-6).
    static EmbeddingVector
    from_unit(std::vector<double> values);

    size_t
    dim() const noexcept {
        return values_.size();
    }

    std::span<const double>
    values() const noexcept {
        return values_;
    }

    double
    operator[](size_t i) const {
        return values_[i];
    }

    bool
    operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    }

    std::vector<double> values_;
};

/// Matryoshka inference rule: keep the first `dim` coordinates and renormalize.
EmbeddingVector
truncate(const EmbeddingVector& v, size_t dim);

/// Dot product of two unit vectors, clamped to [-1, 1].
double
cosine(const EmbeddingVector& u, const EmbeddingVector& v);

double
dot(std::span<const double> a, std::span<const double> b);

/// 64-bit finalizer used to derive independent generator seeds from ids.
uint64_t
mix_seed(uint64_t a, uint64_t b);

/// Seeded isotropic gaussian vector with per-coordinate variance 1/dim, so its
/// expected squared norm is 1 regardless of dim.
std::vector<double>
gaussian_noise(uint64_t seed, size_t dim);

/// Unit base vector of a latent, drawn at kMaxEmbeddingDim and prefix-truncated,
/// so bases at smaller dims are Matryoshka prefixes of the full one.
EmbeddingVector
synthetic_base(uint64_t latent_id, size_t dim = kMaxEmbeddingDim);

/// normalize(base(latent_id) + noise_level * gaussian(seed)); noise is drawn at
/// kMaxEmbeddingDim and prefix-truncated like the base.
EmbeddingVector
synthetic_embed(uint64_t latent_id, double noise_level, uint64_t seed, size_t dim);

enum class Modality { VISUAL, AUDIO, TEXT };

std::string_view
modality_name(Modality modality);

/// Maps a clip to an embedding of one modality at the provider's dimension.
/// Implementations must be deterministic and safe for concurrent const use.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual EmbeddingVector
    embed(const Clip& clip, Modality modality) const = 0;

    virtual size_t
    dim() const = 0;
};

/// Mean-pools the clip's feature tokens for visual/audio and feature-hashes
/// the lowercased ASR tokens for text; output is truncated to `dim`.
class TokenPoolingProvider : public EmbeddingProvider {
public:
    explicit TokenPoolingProvider(size_t dim);

    EmbeddingVector
    embed(const Clip& clip, Modality modality) const override;

    size_t
    dim() const override {
        return dim_;
    }

private:
    size_t dim_;
};

EmbeddingVector
mean_pool(const FeatureTokens& tokens);

/// Signed feature hashing of whitespace tokens (lowercased) into `dim` buckets.
EmbeddingVector
hash_text_embedding(std::string_view text, size_t dim);

uint64_t
fnv1a64(std::string_view bytes);

}  // namespace livemod
