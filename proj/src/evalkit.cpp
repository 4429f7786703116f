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

#include "livemod/evalkit.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>

#include "livemod/errors.h"

namespace livemod {

namespace {

// Cumulative counts at the end of each tie group, scores descending.
struct Threshold {
    double score;
    size_t tp;
    size_t fp;
};

struct Sweep {
    std::vector<Threshold> steps;
    size_t positives{0};
};

Sweep
threshold_sweep(std::span<const ScoredLabel> data) {
    Sweep sweep;
    for (const auto& d : data) {
        if (!std::isfinite(d.score)) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "scores must be finite");
        }
        sweep.positives += d.label ? 1 : 0;
    }
    if (sweep.positives == 0 || sweep.positives == data.size()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    "metric needs at least one positive and one negative");
    }
    std::vector<ScoredLabel> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        return a.score > b.score;
    });
    size_t tp = 0;
    size_t fp = 0;
    for (size_t i = 0; i < sorted.size(); ++i) {
        (sorted[i].label ? tp : fp) += 1;
        if (i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score) {
            sweep.steps.push_back({sorted[i].score, tp, fp});
        }
    }
    return sweep;
}

double
precision_of(const Threshold& t) {
    return static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fp);
}

size_t
hits_in_top_k(const RetrievalCase& c, size_t k) {
    if (c.relevant.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("case {} has no relevant ids", c.query_id));
    }
    size_t hits = 0;
    size_t n = std::min(k, c.ranked.size());
    for (size_t i = 0; i < n; ++i) {
        hits += c.relevant.count(c.ranked[i]);
    }
    return hits;
}

void
check_cases(std::span<const RetrievalCase> cases, size_t k) {
    if (cases.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "no retrieval cases");
    }
    if (k == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "k must be >= 1");
    }
}

}  // namespace

double
average_precision(std::span<const ScoredLabel> data) {
    auto sweep = threshold_sweep(data);
    // sum of (new positives x precision), divided once so a perfect ranking gives exactly 1
    double weighted = 0.0;
    size_t prev_tp = 0;
    for (const auto& t : sweep.steps) {
        weighted += static_cast<double>(t.tp - prev_tp) * precision_of(t);
        prev_tp = t.tp;
    }
    return std::min(1.0, weighted / static_cast<double>(sweep.positives));
}

double
recall_at_precision(std::span<const ScoredLabel> data, double p_target) {
    if (!(p_target > 0.0 && p_target <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "precision target must lie in (0, 1]");
    }
    auto sweep = threshold_sweep(data);
    size_t best_tp = 0;
    for (const auto& t : sweep.steps) {
        // exact rational comparison tp / (tp + fp) >= p_target, up to rounding of p_target
        if (static_cast<double>(t.tp) >= p_target * static_cast<double>(t.tp + t.fp) - 1e-9) {
            best_tp = std::max(best_tp, t.tp);
        }
    }
    return static_cast<double>(best_tp) / static_cast<double>(sweep.positives);
}

F1Point
best_f1(std::span<const ScoredLabel> data) {
    auto sweep = threshold_sweep(data);
    // F1 = 2tp / (2tp + fp + fn); compared as exact fractions
    size_t best_num = 0;
    size_t best_den = 1;
    const Threshold* best = nullptr;
    for (const auto& t : sweep.steps) {
        size_t num = 2 * t.tp;
        size_t den = 2 * t.tp + t.fp + (sweep.positives - t.tp);
        // steps run from high to low threshold, so >= keeps the lowest on ties
        if (best == nullptr || num * best_den >= best_num * den) {
            best_num = num;
            best_den = den;
            best = &t;
        }
    }
    F1Point out;
    out.f1 = static_cast<double>(best_num) / static_cast<double>(best_den);
    out.threshold = best->score;
    out.precision = precision_of(*best);
    out.recall = static_cast<double>(best->tp) / static_cast<double>(sweep.positives);
    return out;
}

double
recall_one_at_k(std::span<const RetrievalCase> cases, size_t k) {
    check_cases(cases, k);
    size_t ok = 0;
    for (const auto& c : cases) {
        ok += hits_in_top_k(c, k) > 0 ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(cases.size());
}

double
recall_all_at_k(std::span<const RetrievalCase> cases, size_t k) {
    check_cases(cases, k);
    size_t ok = 0;
    for (const auto& c : cases) {
        ok += hits_in_top_k(c, k) == c.relevant.size() ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(cases.size());
}

std::vector<SweepRow>
dimension_sweep(std::span<const std::pair<ClipRef, EmbeddingVector>> corpus,
                std::span<const SweepQuery> queries,
                std::span<const size_t> dims,
                const HnswParams& params,
                std::span<const size_t> ks) {
    if (corpus.empty() || queries.empty() || dims.empty() || ks.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "dimension sweep needs corpus, queries, dims and ks");
    }
    const size_t full = corpus.front().second.dim();
    for (size_t d : dims) {
        if (!is_supported_dimension(d) || d > full) {
            throw_error(ErrorCode::INVALID_ARGUMENT,
                        fmt::format("sweep dimension {} unsupported for corpus dim {}", d, full));
        }
    }
    const size_t k_max = *std::max_element(ks.begin(), ks.end());
    std::vector<SweepRow> rows;
    for (size_t d : dims) {
        HnswIndex index(params);
        for (const auto& [ref, vec] : corpus) {
            index.insert(ref, truncate(vec, d));
        }
        std::vector<RetrievalCase> cases;
        cases.reserve(queries.size());
        for (const auto& q : queries) {
            RetrievalCase c;
            c.query_id = q.query_id;
            for (const auto& hit : index.search(truncate(q.vector, d), k_max)) {
                c.ranked.push_back(to_string(hit.ref));
            }
            for (const auto& r : q.relevant) {
                c.relevant.insert(to_string(r));
            }
            cases.push_back(std::move(c));
        }
        for (size_t k : ks) {
            rows.push_back({d, k, recall_one_at_k(cases, k), recall_all_at_k(cases, k)});
        }
    }
    return rows;
}

std::string
sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out = "dim,k,recall_one,recall_all\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{:.6f},{:.6f}\n", r.dim, r.k, r.recall_one, r.recall_all);
    }
    return out;
}

std::string
sweep_to_json(std::span<const SweepRow> rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"dim", r.dim}, {"k", r.k}, {"recall_one", r.recall_one},
                       {"recall_all", r.recall_all}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace livemod
