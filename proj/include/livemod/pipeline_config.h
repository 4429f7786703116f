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
#include <string>
#include <string_view>
#include <vector>

#include "livemod/aggregation.h"
#include "livemod/reranker.h"
#include "livemod/vector_index.h"

namespace livemod {

struct PresetScorerConfig {
    std::string kind{"prototype"};  // "prototype" or "student"
    size_t num_classes{4};
    double kappa{12.0};
    double benign_bias{0.5};
    uint64_t seed{9001};
    std::string checkpoint;  // student only; relative paths resolve against the config file
};

struct RerankerConfig {
    std::string kind{"fusion"};  // "fusion" or "student"
    FusionWeights weights;
    Calibration calibration;
    std::string checkpoint;
};

struct ReviewMargins {
    double preset{0.1};  // below each preset threshold
};

/// Field names match the JSON config keys. Every numeric default lives here.
struct PipelineConfig {
    double clip_len{kDefaultClipLen};
    size_t embedding_dim{128};
    /// One threshold per violation class 1..C-1.
    std::vector<double> preset_thresholds{0.9, 0.9, 0.9};
    size_t top_k{20};
    size_t ef_search{64};
    double rerank_tau{0.6};
    AggParams aggregation;
    std::vector<std::string> categories{"sports", "film"};
    ReviewMargins review_margins;
    HnswParams hnsw;
    RerankerConfig reranker;
    PresetScorerConfig preset_scorer;
    bool enable_preset{true};
    bool enable_reference{true};
    size_t workers{1};

    /// Throws CONFIG_ERROR naming the offending field.
    void
    validate() const;

    /// Aggregation parameters with tau tied to the rerank threshold.
    AggParams
    agg_params() const;
};

/// Unknown keys and type mismatches are CONFIG_ERROR; missing keys keep defaults.
PipelineConfig
parse_pipeline_config(std::string_view json_text);

std::string
serialize_pipeline_config(const PipelineConfig& config);

/// Also rewrites relative checkpoint paths against the file's directory.
PipelineConfig
load_pipeline_config(const std::filesystem::path& path);

}  // namespace livemod
