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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "livemod/embedding.h"
#include "livemod/stream_model.h"

namespace livemod {

struct HnswParams {
    uint32_t m{16};
    uint32_t ef_construction{200};
    uint32_t ef_search{64};
    uint64_t seed{42};

    void
    validate() const;

    bool
    operator==(const HnswParams&) const = default;
};

struct SearchHit {
    ClipRef ref;
    double similarity{0.0};

    bool
    operator==(const SearchHit&) const = default;
};

/// Hierarchical navigable small-world graph over unit vectors, scored by
/// cosine similarity (dot product). Insert-only; the dimension is fixed by the
/// first insert. Concurrent searches are allowed; inserts take an exclusive lock.
class HnswIndex {
public:
    explicit HnswIndex(HnswParams params = {});

    HnswIndex(const HnswIndex&) = delete;
    HnswIndex&
    operator=(const HnswIndex&) = delete;

    void
    insert(const ClipRef& id, const EmbeddingVector& v);

    /// Top-k by descending similarity, ties by ClipRef. Beam width is
    /// max(ef_search, k); `ef_search` defaults to params().ef_search.
    std::vector<SearchHit>
    search(const EmbeddingVector& query, size_t k, std::optional<size_t> ef_search = {}) const;

    size_t
    size() const;

    /// 0 until the first insert.
    size_t
    dim() const;

    const HnswParams&
    params() const {
        return params_;
    }

    bool
    contains(const ClipRef& id) const;

    std::optional<EmbeddingVector>
    vector_of(const ClipRef& id) const;

    std::vector<ClipRef>
    ids() const;

    // Structural introspection, used by invariant tests.
    int
    max_level() const;

    size_t
    layer_size(int level) const;

    /// Largest neighbor-list length found on `level`.
    size_t
    max_degree(int level) const;

    /// Whether every node on `level` is reachable from the entry point.
    bool
    layer_connected(int level) const;

    std::string
    serialize() const;

    static std::unique_ptr<HnswIndex>
    deserialize(std::string_view bytes);

    void
    save(const std::filesystem::path& path) const;

    static std::unique_ptr<HnswIndex>
    load(const std::filesystem::path& path);

private:
    static constexpr uint32_t kNone = 0xffffffffU;

    struct Node {
        ClipRef id;
        std::vector<double> vec;
        int level{0};
        std::vector<std::vector<uint32_t>> links;  // one list per level 0..level
    };

    struct Scored {
        double sim;
        uint32_t node;
    };

    double
    sim(uint32_t a, std::span<const double> q) const;

    std::vector<Scored>
    search_layer(std::span<const double> q, std::vector<Scored> entry, size_t ef, int level) const;

    std::vector<uint32_t>
    select_neighbors(std::vector<Scored> candidates, size_t m) const;

    void
    connect(uint32_t node, uint32_t neighbor, int level);

    size_t
    max_links(int level) const {
        return level == 0 ? 2 * static_cast<size_t>(params_.m) : params_.m;
    }

    int
    draw_level();

    HnswParams params_;
    size_t dim_{0};
    std::vector<Node> nodes_;
    std::map<ClipRef, uint32_t> id_to_node_;
    uint32_t entry_{kNone};
    int max_level_{-1};
    std::mt19937_64 rng_;
    mutable std::shared_mutex mutex_;
};

/// One independent index per violation category.
class CategoryRegistry {
public:
    /// Idempotent: later calls for an existing name return the same index and
    /// ignore `params`.
    std::shared_ptr<HnswIndex>
    get_or_create(const std::string& category, const HnswParams& params = {});

    std::shared_ptr<HnswIndex>
    find(const std::string& category) const;

    /// Sorted category names.
    std::vector<std::string>
    categories() const;

    /// Writes <dir>/<category>.hnsw per category plus <dir>/categories.json.
    void
    save(const std::filesystem::path& dir) const;

    void
    load(const std::filesystem::path& dir);

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<HnswIndex>> indices_;
};

}  // namespace livemod
