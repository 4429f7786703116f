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

#include "livemod/embedding.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "livemod/errors.h"

namespace livemod {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr uint64_t kBaseSalt = 0x6261736576656374ULL;
constexpr uint64_t kNoiseSalt = 0x6e6f697365766563ULL;

double
l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

std::vector<double>
raw_base(uint64_t latent_id) {
    return gaussian_noise(mix_seed(latent_id, kBaseSalt), kMaxEmbeddingDim);
}

void
check_dim(size_t dim) {
    if (dim == 0 || dim > kMaxEmbeddingDim) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("dimension {} outside [1, {}]", dim, kMaxEmbeddingDim));
    }
}

}  // namespace

bool
is_supported_dimension(size_t dim) {
    return std::find(kSupportedDims.begin(), kSupportedDims.end(), dim) != kSupportedDims.end();
}

EmbeddingVector
EmbeddingVector::normalized(std::vector<double> raw) {
    if (raw.empty()) {
        throw_error(ErrorCode::DEGENERATE_INPUT, "empty vector");
    }
    double norm = l2_norm(raw);
    if (!std::isfinite(norm)) {
        throw_error(ErrorCode::DEGENERATE_INPUT, "vector has non-finite entries");
    }
    if (norm == 0.0) {
        throw_error(ErrorCode::DEGENERATE_INPUT, "zero-norm vector cannot be normalized");
    }
    for (double& x : raw) {
        x /= norm;
    }
    return EmbeddingVector(std::move(raw));
}

EmbeddingVector
EmbeddingVector::from_unit(std::vector<double> values) {
    double norm = l2_norm(values);
    if (values.empty() || !std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("expected a unit vector, got norm {}", norm));
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector
truncate(const EmbeddingVector& v, size_t dim) {
    if (dim == 0 || dim > v.dim()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("cannot truncate a {}-dim vector to {}", v.dim(), dim));
    }
    if (dim == v.dim()) {
        return v;
    }
    auto values = v.values();
    return EmbeddingVector::normalized({values.begin(), values.begin() + dim});
}

double
dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double
cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("dimension mismatch: {} vs {}", u.dim(), v.dim()));
    }
    return std::clamp(dot(u.values(), v.values()), -1.0, 1.0);
}

uint64_t
mix_seed(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over a combined word
    uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double>
gaussian_noise(uint64_t seed, size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> out(dim);
    for (double& x : out) {
        x = normal(rng);
    }
    return out;
}

EmbeddingVector
synthetic_base(uint64_t latent_id, size_t dim) {
    check_dim(dim);
    auto raw = raw_base(latent_id);
    raw.resize(dim);
    return EmbeddingVector::normalized(std::move(raw));
}

EmbeddingVector
synthetic_embed(uint64_t latent_id, double noise_level, uint64_t seed, size_t dim) {
    check_dim(dim);
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "noise_level must be finite and >= 0");
    }
    if (noise_level == 0.0) {
        return synthetic_base(latent_id, dim);
    }
    auto base = raw_base(latent_id);
    double norm = l2_norm(base);
    auto noise = gaussian_noise(mix_seed(mix_seed(seed, kNoiseSalt), latent_id), kMaxEmbeddingDim);
    std::vector<double> out(dim);
    for (size_t i = 0; i < dim; ++i) {
        out[i] = base[i] / norm + noise_level * noise[i];
    }
    return EmbeddingVector::normalized(std::move(out));
}

std::string_view
modality_name(Modality modality) {
    switch (modality) {
        case Modality::VISUAL:
            return "visual";
        case Modality::AUDIO:
            return "audio";
        case Modality::TEXT:
            return "text";
    }
    return "unknown";
}

uint64_t
fnv1a64(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

EmbeddingVector
mean_pool(const FeatureTokens& tokens) {
    if (tokens.empty()) {
        throw_error(ErrorCode::DEGENERATE_INPUT, "no feature tokens to pool");
    }
    size_t dim = tokens.front().size();
    std::vector<double> sum(dim, 0.0);
    for (const auto& token : tokens) {
        if (token.size() != dim) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "feature tokens have inconsistent dims");
        }
        for (size_t i = 0; i < dim; ++i) {
            sum[i] += token[i];
        }
    }
    return EmbeddingVector::normalized(std::move(sum));
}

EmbeddingVector
hash_text_embedding(std::string_view text, size_t dim) {
    std::vector<double> out(dim, 0.0);
    size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) {
            ++end;
        }
        if (end > pos) {
            std::string token(text.substr(pos, end - pos));
            for (char& c : token) {
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
            uint64_t h = fnv1a64(token);
            out[h % dim] += (h >> 63) ? -1.0 : 1.0;
        }
        pos = end;
    }
    return EmbeddingVector::normalized(std::move(out));
}

TokenPoolingProvider::TokenPoolingProvider(size_t dim) : dim_(dim) {
    check_dim(dim);
}

EmbeddingVector
TokenPoolingProvider::embed(const Clip& clip, Modality modality) const {
    switch (modality) {
        case Modality::VISUAL:
        case Modality::AUDIO: {
            const auto& tokens =
                modality == Modality::VISUAL ? clip.visual_tokens : clip.audio_tokens;
            auto pooled = mean_pool(tokens);
            if (pooled.dim() < dim_) {
                throw_error(ErrorCode::INVALID_ARGUMENT,
                            fmt::format("{} tokens of clip {} have dim {} < provider dim {}",
                                        modality_name(modality),
                                        to_string(clip.ref()),
                                        pooled.dim(),
                                        dim_));
            }
            return truncate(pooled, dim_);
        }
        case Modality::TEXT:
            return hash_text_embedding(clip.asr_text, dim_);
    }
    throw_error(ErrorCode::INVALID_ARGUMENT, "unknown modality");
}

}  // namespace livemod
