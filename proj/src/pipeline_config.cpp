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


#include "livemod/pipeline_config.h"

#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <set>

#include "livemod/errors.h"
#include "livemod/file_io.h"

namespace livemod {

namespace {

using nlohmann::json;

void
config_error(const std::string& msg) {
    throw_error(ErrorCode::CONFIG_ERROR, msg);
}

void
reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) {
        config_error(where + " must be an object");
    }
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) {
            config_error(fmt::format("unknown key '{}{}'", where.empty() ? "" : where + ".", key));
        }
    }
}

template <typename T>
void
read(const json& obj, const char* key, T& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_unsigned()) {
                config_error(fmt::format("{}{} must be a non-negative integer", where, key));
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                config_error(fmt::format("{}{} must be a number", where, key));
            }
        }
        out = it->get<T>();
    } catch (const json::exception& e) {
        config_error(fmt::format("{}{}: {}", where, key, e.what()));
    }
}

void
check(bool ok, const std::string& msg) {
    if (!ok) {
        config_error(msg);
    }
}

bool
unit_interval(double x) {
    return x >= 0.0 && x <= 1.0;
}

}  // namespace

void
PipelineConfig::validate() const {
    check(clip_len > 0.0 && std::isfinite(clip_len), "clip_len must be > 0");
    check(is_supported_dimension(embedding_dim), "embedding_dim must be one of 32,64,128,256,512,768");
    check(!preset_thresholds.empty(), "preset_thresholds needs one entry per violation class");
    for (double t : preset_thresholds) {
        check(unit_interval(t), "preset_thresholds must lie in [0,1]");
    }
    check(preset_thresholds.size() + 1 == preset_scorer.num_classes,
          "preset_thresholds must have preset_scorer.num_classes - 1 entries");
    check(top_k >= 1, "top_k must be >= 1");
    check(ef_search >= 1, "ef_search must be >= 1");
    check(unit_interval(rerank_tau), "rerank_tau must lie in [0,1]");
    check(unit_interval(review_margins.preset), "review_margins.preset must lie in [0,1]");
    check(!categories.empty(), "categories must be non-empty");
    std::set<std::string> seen;
    for (const auto& c : categories) {
        check(!c.empty() && c.find('/') == std::string::npos, "category names must be non-empty path-safe strings");
        check(seen.insert(c).second, "duplicate category " + c);
    }
    check(workers >= 1, "workers must be >= 1");
    check(reranker.kind == "fusion" || reranker.kind == "student", "reranker.kind must be fusion or student");
    check(reranker.kind != "student" || !reranker.checkpoint.empty(), "student reranker needs a checkpoint");
    check(reranker.calibration.a > 0.0, "reranker.calibration.a must be > 0");
    check(preset_scorer.kind == "prototype" || preset_scorer.kind == "student",
          "preset_scorer.kind must be prototype or student");
    check(preset_scorer.kind != "student" || !preset_scorer.checkpoint.empty(),
          "student preset scorer needs a checkpoint");
    try {
        agg_params().validate();
        hnsw.validate();
        reranker.weights.validate();
    } catch (const Error& e) {
        config_error(e.detail());
    }
}

AggParams
PipelineConfig::agg_params() const {
    AggParams p = aggregation;
    p.tau = rerank_tau;
    return p;
}

PipelineConfig
parse_pipeline_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig c;
    reject_unknown(doc, "", {"clip_len", "embedding_dim", "preset_thresholds", "top_k", "ef_search", "rerank_tau",
                             "aggregation", "categories", "review_margins", "hnsw", "reranker", "preset_scorer",
                             "enable_preset", "enable_reference", "workers"});
    read(doc, "clip_len", c.clip_len, "");
    read(doc, "embedding_dim", c.embedding_dim, "");
    read(doc, "preset_thresholds", c.preset_thresholds, "");
    read(doc, "top_k", c.top_k, "");
    read(doc, "ef_search", c.ef_search, "");
    read(doc, "rerank_tau", c.rerank_tau, "");
    read(doc, "categories", c.categories, "");
    read(doc, "enable_preset", c.enable_preset, "");
    read(doc, "enable_reference", c.enable_reference, "");
    read(doc, "workers", c.workers, "");
    if (doc.contains("aggregation")) {
        const auto& a = doc["aggregation"];
        reject_unknown(a, "aggregation", {"epsilon", "l_min", "s_min", "max_pairs"});
        read(a, "epsilon", c.aggregation.epsilon, "aggregation.");
        read(a, "l_min", c.aggregation.l_min, "aggregation.");
        read(a, "s_min", c.aggregation.s_min, "aggregation.");
        read(a, "max_pairs", c.aggregation.max_pairs, "aggregation.");
    }
    if (doc.contains("review_margins")) {
        const auto& r = doc["review_margins"];
        reject_unknown(r, "review_margins", {"preset"});
        read(r, "preset", c.review_margins.preset, "review_margins.");
    }
    if (doc.contains("hnsw")) {
        const auto& h = doc["hnsw"];
        reject_unknown(h, "hnsw", {"m", "ef_construction", "seed"});
        read(h, "m", c.hnsw.m, "hnsw.");
        read(h, "ef_construction", c.hnsw.ef_construction, "hnsw.");
        read(h, "seed", c.hnsw.seed, "hnsw.");
    }
    if (doc.contains("reranker")) {
        const auto& r = doc["reranker"];
        reject_unknown(r, "reranker", {"kind", "weights", "calibration", "checkpoint"});
        read(r, "kind", c.reranker.kind, "reranker.");
        read(r, "checkpoint", c.reranker.checkpoint, "reranker.");
        if (r.contains("weights")) {
            const auto& w = r["weights"];
            reject_unknown(w, "reranker.weights", {"visual", "text", "audio"});
            read(w, "visual", c.reranker.weights.visual, "reranker.weights.");
            read(w, "text", c.reranker.weights.text, "reranker.weights.");
            read(w, "audio", c.reranker.weights.audio, "reranker.weights.");
        }
        if (r.contains("calibration")) {
            const auto& cal = r["calibration"];
            reject_unknown(cal, "reranker.calibration", {"a", "b"});
            read(cal, "a", c.reranker.calibration.a, "reranker.calibration.");
            read(cal, "b", c.reranker.calibration.b, "reranker.calibration.");
        }
    }
    if (doc.contains("preset_scorer")) {
        const auto& p = doc["preset_scorer"];
        reject_unknown(p, "preset_scorer", {"kind", "num_classes", "kappa", "benign_bias", "seed", "checkpoint"});
        read(p, "kind", c.preset_scorer.kind, "preset_scorer.");
        read(p, "num_classes", c.preset_scorer.num_classes, "preset_scorer.");
        read(p, "kappa", c.preset_scorer.kappa, "preset_scorer.");
        read(p, "benign_bias", c.preset_scorer.benign_bias, "preset_scorer.");
        read(p, "seed", c.preset_scorer.seed, "preset_scorer.");
        read(p, "checkpoint", c.preset_scorer.checkpoint, "preset_scorer.");
    }
    c.validate();
    return c;
}

std::string
serialize_pipeline_config(const PipelineConfig& c) {
    json doc = {
        {"clip_len", c.clip_len},
        {"embedding_dim", c.embedding_dim},
        {"preset_thresholds", c.preset_thresholds},
        {"top_k", c.top_k},
        {"ef_search", c.ef_search},
        {"rerank_tau", c.rerank_tau},
        {"aggregation",
         {{"epsilon", c.aggregation.epsilon},
          {"l_min", c.aggregation.l_min},
          {"s_min", c.aggregation.s_min},
          {"max_pairs", c.aggregation.max_pairs}}},
        {"categories", c.categories},
        {"review_margins", {{"preset", c.review_margins.preset}}},
        {"hnsw", {{"m", c.hnsw.m}, {"ef_construction", c.hnsw.ef_construction}, {"seed", c.hnsw.seed}}},
        {"reranker",
         {{"kind", c.reranker.kind},
          {"weights",
           {{"visual", c.reranker.weights.visual},
            {"text", c.reranker.weights.text},
            {"audio", c.reranker.weights.audio}}},
          {"calibration", {{"a", c.reranker.calibration.a}, {"b", c.reranker.calibration.b}}},
          {"checkpoint", c.reranker.checkpoint}}},
        {"preset_scorer",
         {{"kind", c.preset_scorer.kind},
          {"num_classes", c.preset_scorer.num_classes},
          {"kappa", c.preset_scorer.kappa},
          {"benign_bias", c.preset_scorer.benign_bias},
          {"seed", c.preset_scorer.seed},
          {"checkpoint", c.preset_scorer.checkpoint}}},
        {"enable_preset", c.enable_preset},
        {"enable_reference", c.enable_reference},
        {"workers", c.workers},
    };
    return doc.dump(2) + "\n";
}

PipelineConfig
load_pipeline_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        config_error(e.detail());
    }
    auto c = parse_pipeline_config(text);
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) {
            p = (path.parent_path() / p).string();
        }
    };
    resolve(c.reranker.checkpoint);
    resolve(c.preset_scorer.checkpoint);
    return c;
}

}  // namespace livemod
