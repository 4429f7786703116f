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

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "livemod/embedding.h"
#include "livemod/vector_index.h"

namespace livemod {

struct ScoredLabel {
    double score{0.0};
    bool label{false};
};

/// Step-wise average precision. Equal scores form one threshold group.
double
average_precision(std::span<const ScoredLabel> data);

/// Largest recall over thresholds whose precision is at least `p_target`; 0 if none.
double
recall_at_precision(std::span<const ScoredLabel> data, double p_target);

struct F1Point {
    double f1{0.0};
    double threshold{0.0};  // predict positive when score >= threshold
    double precision{0.0};
    double recall{0.0};
};

/// Best F1 over distinct thresholds; equal F1 resolves to the lowest threshold.
F1Point
best_f1(std::span<const ScoredLabel> data);

struct RetrievalCase {
    std::string query_id;
    std::vector<std::string> ranked;  // best first, no duplicates
    std::set<std::string> relevant;   // non-empty
};

/// Fraction of cases with at least one relevant id in the first k results.
double
recall_one_at_k(std::span<const RetrievalCase> cases, size_t k);

/// Fraction of cases with every relevant id in the first k results.
double
recall_all_at_k(std::span<const RetrievalCase> cases, size_t k);

struct SweepQuery {
    std::string query_id;
    EmbeddingVector vector;  // at the corpus dimension
    std::set<ClipRef> relevant;
};

struct SweepRow {
    size_t dim{0};
    size_t k{0};
    double recall_one{0.0};
    double recall_all{0.0};
};

constexpr std::array<size_t, 5> kSweepKs = {5, 10, 20, 50, 100};

/// For each dim: truncate corpus and queries, rebuild an index, search with
/// the largest k and score every k from the same ranking.
std::vector<SweepRow>
dimension_sweep(std::span<const std::pair<ClipRef, EmbeddingVector>> corpus,
                std::span<const SweepQuery> queries,
                std::span<const size_t> dims,
                const HnswParams& params,
                std::span<const size_t> ks = kSweepKs);

/// Header dim,k,recall_one,recall_all.
std::string
sweep_to_csv(std::span<const SweepRow> rows);

std::string
sweep_to_json(std::span<const SweepRow> rows);

}  // namespace livemod
