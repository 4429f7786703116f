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

#include "livemod/vector_index.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <queue>
#include <sstream>

#include "livemod/errors.h"
#include "livemod/file_io.h"
#include "snapshot_io.h"

namespace livemod {

namespace {

constexpr char kMagic[] = "HNSW";
constexpr uint32_t kFormatVersion = 1;
constexpr int kLevelCap = 16;

}  // namespace

void
HnswParams::validate() const {
    if (m < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "hnsw m must be >= 2");
    }
    if (ef_construction < m) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "hnsw ef_construction must be >= m");
    }
    if (ef_search < 1) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "hnsw ef_search must be >= 1");
    }
}

HnswIndex::HnswIndex(HnswParams params) : params_(params), rng_(params.seed) {
    params_.validate();
}

double
HnswIndex::sim(uint32_t a, std::span<const double> q) const {
    return dot(nodes_[a].vec, q);
}

int
HnswIndex::draw_level() {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double u = 1.0 - uniform(rng_);  // (0, 1]
    double scale = 1.0 / std::log(static_cast<double>(params_.m));
    return std::min(static_cast<int>(std::floor(-std::log(u) * scale)), kLevelCap);
}

std::vector<HnswIndex::Scored>
HnswIndex::search_layer(std::span<const double> q,
                        std::vector<Scored> entry,
                        size_t ef,
                        int level) const {
    // better-first ordering: higher similarity, then lower node id
    auto better = [](const Scored& a, const Scored& b) {
        return a.sim > b.sim || (a.sim == b.sim && a.node < b.node);
    };
    auto worse = [&](const Scored& a, const Scored& b) { return better(b, a); };
    // candidates: best on top; results: worst on top
    std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> candidates(worse);
    std::priority_queue<Scored, std::vector<Scored>, decltype(better)> results(better);
    std::vector<char> visited(nodes_.size(), 0);

    for (const auto& e : entry) {
        if (visited[e.node]) {
            continue;
        }
        visited[e.node] = 1;
        candidates.push(e);
        results.push(e);
        if (results.size() > ef) {
            results.pop();
        }
    }
    while (!candidates.empty()) {
        Scored current = candidates.top();
        if (results.size() >= ef && better(results.top(), current)) {
            break;
        }
        candidates.pop();
        for (uint32_t nb : nodes_[current.node].links[level]) {
            if (visited[nb]) {
                continue;
            }
            visited[nb] = 1;
            Scored s{sim(nb, q), nb};
            if (results.size() < ef || better(s, results.top())) {
                candidates.push(s);
                results.push(s);
                if (results.size() > ef) {
                    results.pop();
                }
            }
        }
    }
    std::vector<Scored> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<uint32_t>
HnswIndex::select_neighbors(std::vector<Scored> candidates, size_t m) const {
    std::sort(candidates.begin(), candidates.end(), [](const Scored& a, const Scored& b) {
        return a.sim > b.sim || (a.sim == b.sim && a.node < b.node);
    });
    std::vector<uint32_t> selected;
    std::vector<uint32_t> pruned;
    for (const auto& c : candidates) {
        if (selected.size() >= m) {
            break;
        }
        // keep c only if it is closer to the base than to every kept neighbor
        bool diverse = true;
        for (uint32_t r : selected) {
            if (dot(nodes_[c.node].vec, nodes_[r].vec) > c.sim) {
                diverse = false;
                break;
            }
        }
        (diverse ? selected : pruned).push_back(c.node);
    }
    for (uint32_t p : pruned) {
        if (selected.size() >= m) {
            break;
        }
        selected.push_back(p);
    }
    return selected;
}

void
HnswIndex::connect(uint32_t node, uint32_t neighbor, int level) {
    auto& links = nodes_[node].links[level];
    links.push_back(neighbor);
    size_t cap = max_links(level);
    if (links.size() <= cap) {
        return;
    }
    const auto& base = nodes_[node].vec;
    std::vector<Scored> candidates;
    candidates.reserve(links.size());
    for (uint32_t l : links) {
        candidates.push_back({sim(l, base), l});
    }
    links = select_neighbors(std::move(candidates), cap);
}

void
HnswIndex::insert(const ClipRef& id, const EmbeddingVector& v) {
    std::unique_lock lock(mutex_);
    if (id_to_node_.count(id) != 0) {
        throw_error(ErrorCode::CONFLICT, fmt::format("{} is already indexed", to_string(id)));
    }
    if (dim_ != 0 && v.dim() != dim_) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("vector dim {} does not match index dim {}", v.dim(), dim_));
    }
    if (nodes_.size() >= kNone) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "index is full");
    }
    dim_ = v.dim();
    int level = draw_level();
    auto n = static_cast<uint32_t>(nodes_.size());
    nodes_.push_back({id, {v.values().begin(), v.values().end()}, level, {}});
    nodes_.back().links.resize(static_cast<size_t>(level) + 1);
    id_to_node_.emplace(id, n);

    if (entry_ == kNone) {
        entry_ = n;
        max_level_ = level;
        return;
    }
    std::span<const double> q = nodes_[n].vec;
    std::vector<Scored> ep{{sim(entry_, q), entry_}};
    for (int l = max_level_; l > level; --l) {
        ep = search_layer(q, ep, 1, l);
    }
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto found = search_layer(q, ep, params_.ef_construction, l);
        auto neighbors = select_neighbors(found, params_.m);
        nodes_[n].links[l] = neighbors;
        for (uint32_t nb : neighbors) {
            connect(nb, n, l);
        }
        ep = std::move(found);
    }
    if (level > max_level_) {
        entry_ = n;
        max_level_ = level;
    }
}

std::vector<SearchHit>
HnswIndex::search(const EmbeddingVector& query, size_t k, std::optional<size_t> ef_search) const {
    if (k == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "k must be >= 1");
    }
    std::shared_lock lock(mutex_);
    if (entry_ == kNone) {
        return {};
    }
    if (query.dim() != dim_) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("query dim {} does not match index dim {}", query.dim(), dim_));
    }
    size_t ef = std::max(ef_search.value_or(params_.ef_search), k);
    if (ef == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "ef_search must be >= 1");
    }
    auto q = query.values();
    std::vector<Scored> ep{{sim(entry_, q), entry_}};
    for (int l = max_level_; l > 0; --l) {
        ep = search_layer(q, ep, 1, l);
    }
    auto found = search_layer(q, ep, ef, 0);
    std::vector<SearchHit> hits;
    hits.reserve(found.size());
    for (const auto& s : found) {
        hits.push_back({nodes_[s.node].id, std::clamp(s.sim, -1.0, 1.0)});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        return a.similarity > b.similarity || (a.similarity == b.similarity && a.ref < b.ref);
    });
    if (hits.size() > k) {
        hits.resize(k);
    }
    return hits;
}

size_t
HnswIndex::size() const {
    std::shared_lock lock(mutex_);
    return nodes_.size();
}

size_t
HnswIndex::dim() const {
    std::shared_lock lock(mutex_);
    return dim_;
}

bool
HnswIndex::contains(const ClipRef& id) const {
    std::shared_lock lock(mutex_);
    return id_to_node_.count(id) != 0;
}

std::optional<EmbeddingVector>
HnswIndex::vector_of(const ClipRef& id) const {
    std::shared_lock lock(mutex_);
    auto it = id_to_node_.find(id);
    if (it == id_to_node_.end()) {
        return std::nullopt;
    }
    return EmbeddingVector::from_unit(nodes_[it->second].vec);
}

std::vector<ClipRef>
HnswIndex::ids() const {
    std::shared_lock lock(mutex_);
    std::vector<ClipRef> out;
    out.reserve(id_to_node_.size());
    for (const auto& [ref, node] : id_to_node_) {
        out.push_back(ref);
    }
    return out;
}

int
HnswIndex::max_level() const {
    std::shared_lock lock(mutex_);
    return max_level_;
}

size_t
HnswIndex::layer_size(int level) const {
    std::shared_lock lock(mutex_);
    return static_cast<size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [level](const Node& n) { return n.level >= level; }));
}

size_t
HnswIndex::max_degree(int level) const {
    std::shared_lock lock(mutex_);
    size_t best = 0;
    for (const auto& n : nodes_) {
        if (n.level >= level) {
            best = std::max(best, n.links[level].size());
        }
    }
    return best;
}

bool
HnswIndex::layer_connected(int level) const {
    std::shared_lock lock(mutex_);
    if (entry_ == kNone) {
        return true;
    }
    std::vector<char> seen(nodes_.size(), 0);
    std::deque<uint32_t> frontier{entry_};
    seen[entry_] = 1;
    size_t reached = 1;
    while (!frontier.empty()) {
        uint32_t cur = frontier.front();
        frontier.pop_front();
        for (uint32_t nb : nodes_[cur].links[level]) {
            if (!seen[nb]) {
                seen[nb] = 1;
                ++reached;
                frontier.push_back(nb);
            }
        }
    }
    size_t expected = static_cast<size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [level](const Node& n) { return n.level >= level; }));
    return reached == expected;
}

std::string
HnswIndex::serialize() const {
    std::shared_lock lock(mutex_);
    detail::ByteWriter out;
    out.raw(std::string_view(kMagic, 4));
    out.u32(kFormatVersion);
    out.u32(static_cast<uint32_t>(dim_));

    detail::ByteWriter parm;
    parm.u32(params_.m);
    parm.u32(params_.ef_construction);
    parm.u32(params_.ef_search);
    parm.u64(params_.seed);
    out.section("PARM", parm);

    detail::ByteWriter node;
    node.u64(nodes_.size());
    for (const auto& n : nodes_) {
        node.str(n.id.stream_id);
        node.i64(n.id.clip_index);
        node.i32(n.level);
        for (double x : n.vec) {
            node.f64(x);
        }
    }
    out.section("NODE", node);

    detail::ByteWriter adjc;
    for (const auto& n : nodes_) {
        for (const auto& links : n.links) {
            adjc.u32(static_cast<uint32_t>(links.size()));
            for (uint32_t l : links) {
                adjc.u32(l);
            }
        }
    }
    out.section("ADJC", adjc);

    detail::ByteWriter entr;
    entr.u32(entry_);
    entr.i32(max_level_);
    out.section("ENTR", entr);

    std::ostringstream rng_state;
    rng_state << rng_;
    detail::ByteWriter rngs;
    rngs.str(rng_state.str());
    out.section("RNGS", rngs);
    return out.bytes();
}

std::unique_ptr<HnswIndex>
HnswIndex::deserialize(std::string_view bytes) {
    auto corrupt = [](const std::string& what) {
        throw_error(ErrorCode::CORRUPT_SNAPSHOT, what);
    };
    detail::ByteReader in(bytes);
    if (bytes.size() < 4 || in.raw(4) != std::string_view(kMagic, 4)) {
        corrupt("bad magic");
    }
    uint32_t version = in.u32();
    if (version != kFormatVersion) {
        corrupt(fmt::format("unsupported snapshot version {}", version));
    }
    uint32_t dim = in.u32();

    auto parm = in.section("PARM");
    HnswParams params;
    params.m = parm.u32();
    params.ef_construction = parm.u32();
    params.ef_search = parm.u32();
    params.seed = parm.u64();
    try {
        params.validate();
    } catch (const Error& e) {
        corrupt("invalid params: " + e.detail());
    }
    auto index = std::make_unique<HnswIndex>(params);
    index->dim_ = dim;

    auto node = in.section("NODE");
    uint64_t count = node.u64();
    if (count >= kNone || count > node.remaining()) {
        corrupt("implausible node count");
    }
    index->nodes_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        Node n;
        n.id.stream_id = node.str();
        n.id.clip_index = node.i64();
        n.level = node.i32();
        if (n.level < 0 || n.level > kLevelCap) {
            corrupt("node level out of range");
        }
        n.vec.resize(dim);
        for (auto& x : n.vec) {
            x = node.f64();
        }
        n.links.resize(static_cast<size_t>(n.level) + 1);
        if (!index->id_to_node_.emplace(n.id, static_cast<uint32_t>(i)).second) {
            corrupt("duplicate node id");
        }
        index->nodes_.push_back(std::move(n));
    }
    if (!node.done()) {
        corrupt("trailing bytes in node table");
    }

    auto adjc = in.section("ADJC");
    for (auto& n : index->nodes_) {
        for (int level = 0; level <= n.level; ++level) {
            uint32_t len = adjc.u32();
            if (len > index->max_links(level)) {
                corrupt("neighbor list exceeds its cap");
            }
            auto& links = n.links[level];
            links.resize(len);
            for (auto& l : links) {
                l = adjc.u32();
                if (l >= count || index->nodes_[l].level < level) {
                    corrupt("dangling neighbor id");
                }
            }
        }
    }
    if (!adjc.done()) {
        corrupt("trailing bytes in adjacency lists");
    }

    auto entr = in.section("ENTR");
    index->entry_ = entr.u32();
    index->max_level_ = entr.i32();
    if (count == 0 ? index->entry_ != kNone
                   : (index->entry_ >= count ||
                      index->nodes_[index->entry_].level != index->max_level_)) {
        corrupt("inconsistent entry point");
    }

    auto rngs = in.section("RNGS");
    std::istringstream rng_state(rngs.str());
    rng_state >> index->rng_;
    if (!rng_state) {
        corrupt("bad generator state");
    }
    if (!in.done()) {
        corrupt("trailing bytes after last section");
    }
    return index;
}

void
HnswIndex::save(const std::filesystem::path& path) const {
    write_text_file(path, serialize());
}

std::unique_ptr<HnswIndex>
HnswIndex::load(const std::filesystem::path& path) {
    return deserialize(read_text_file(path));
}

std::shared_ptr<HnswIndex>
CategoryRegistry::get_or_create(const std::string& category, const HnswParams& params) {
    if (category.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "category name must be non-empty");
    }
    std::lock_guard lock(mutex_);
    auto it = indices_.find(category);
    if (it == indices_.end()) {
        it = indices_.emplace(category, std::make_shared<HnswIndex>(params)).first;
    }
    return it->second;
}

std::shared_ptr<HnswIndex>
CategoryRegistry::find(const std::string& category) const {
    std::lock_guard lock(mutex_);
    auto it = indices_.find(category);
    return it == indices_.end() ? nullptr : it->second;
}

std::vector<std::string>
CategoryRegistry::categories() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, index] : indices_) {
        out.push_back(name);
    }
    return out;
}

void
CategoryRegistry::save(const std::filesystem::path& dir) const {
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir);
    nlohmann::json listing = nlohmann::json::array();
    for (const auto& [name, index] : indices_) {
        index->save(dir / (name + ".hnsw"));
        listing.push_back(name);
    }
    write_text_file(dir / "categories.json", nlohmann::json{{"categories", listing}}.dump(2));
}

void
CategoryRegistry::load(const std::filesystem::path& dir) {
    nlohmann::json listing;
    try {
        listing = nlohmann::json::parse(read_text_file(dir / "categories.json"));
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::CORRUPT_SNAPSHOT, std::string("categories.json: ") + e.what());
    }
    std::map<std::string, std::shared_ptr<HnswIndex>> loaded;
    for (const auto& name : listing.at("categories")) {
        auto category = name.get<std::string>();
        loaded.emplace(category, HnswIndex::load(dir / (category + ".hnsw")));
    }
    std::lock_guard lock(mutex_);
    indices_ = std::move(loaded);
}

}  // namespace livemod
