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


// livemod: corpus generation, indexing, moderation runs, evaluation and the
// ablation / dimension-sweep experiments.
//
// Exit status: 0 success, 1 input error, 2 config error.

#include <CLI11.hpp>
#include <chrono>
#include <fmt/format.h>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "livemod/contrastive.h"
#include "livemod/distill.h"
#include "livemod/errors.h"
#include "livemod/evalkit.h"
#include "livemod/file_io.h"
#include "livemod/pipeline.h"
#include "livemod/report.h"
#include "livemod/simulator.h"

namespace fs = std::filesystem;
using namespace livemod;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;

PipelineConfig
pipeline_config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

void
require_config_path(const std::string& path) {
    if (path.empty()) {
        throw_error(ErrorCode::CONFIG_ERROR, "--config is required");
    }
}

/// refs/<category>/<stream>.jsonl under `dir` (or `dir/refs`), categories and
/// streams in lexicographic order.
std::vector<std::pair<std::string, StreamManifest>>
read_reference_tree(const fs::path& dir, double clip_len) {
    fs::path root = fs::is_directory(dir / "refs") ? dir / "refs" : dir;
    if (!fs::is_directory(root)) {
        throw_error(ErrorCode::IO_ERROR, "reference directory not found: " + dir.string());
    }
    std::vector<fs::path> categories;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            categories.push_back(e.path());
        }
    }
    std::sort(categories.begin(), categories.end());
    std::vector<std::pair<std::string, StreamManifest>> out;
    for (const auto& cat : categories) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cat)) {
            if (e.is_regular_file() && e.path().extension() == ".jsonl") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            out.emplace_back(cat.filename().string(), read_manifest_file(f, clip_len));
        }
    }
    return out;
}

int
cmd_gen(const std::string& config_path, const std::string& out) {
    require_config_path(config_path);
    std::string text;
    try {
        text = read_text_file(config_path);
    } catch (const Error& e) {
        throw_error(ErrorCode::CONFIG_ERROR, e.detail());
    }
    auto corpus = generate_corpus(corpus_config_from_json(text));
    write_corpus(corpus, out);
    fmt::print("wrote {} reference and {} query streams to {}\n", corpus.references.size(), corpus.queries.size(), out);
    return kExitOk;
}

int
cmd_index(const std::string& refs, const std::string& out, const std::string& config_path) {
    auto config = pipeline_config_or_default(config_path);
    ModerationEngine engine(config);
    size_t clips = 0;
    for (auto& [category, manifest] : read_reference_tree(refs, config.clip_len)) {
        clips += engine.register_reference(std::move(manifest), category);
    }
    engine.save_indices(out);
    fmt::print("indexed {} reference clips into {}\n", clips, out);
    return kExitOk;
}

int
cmd_run(const std::string& config_path,
        const std::string& corpus_dir,
        const std::string& out,
        const std::string& index_dir,
        const std::string& timing_out) {
    require_config_path(config_path);
    auto config = load_pipeline_config(config_path);
    auto start = std::chrono::steady_clock::now();
    auto corpus = read_corpus(corpus_dir);
    ModerationEngine engine(config);
    if (index_dir.empty()) {
        for (auto& [category, manifest] : corpus.references) {
            engine.register_reference(manifest, category);
        }
    } else {
        engine.load_indices(index_dir, corpus.references);
    }
    auto results = engine.ingest_streams(corpus.queries);
    std::string lines;
    for (const auto& r : results) {
        lines += serialize_outcomes(r.outcomes);
    }
    write_text_file(out, lines);
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!timing_out.empty()) {
        auto t = engine.timing();
        nlohmann::ordered_json j = {{"preset_s", t.preset_s},
                                    {"retrieval_s", t.retrieval_s},
                                    {"rerank_s", t.rerank_s},
                                    {"aggregation_s", t.aggregation_s},
                                    {"total_s", total}};
        write_text_file(timing_out, j.dump(2) + "\n");
    }
    size_t enforced = 0;
    for (const auto& r : results) {
        enforced += r.summary.decision == Decision::ENFORCE ? 1 : 0;
    }
    fmt::print("moderated {} streams ({} with enforcement) in {:.2f} s\n", results.size(), enforced, total);
    return kExitOk;
}

int
cmd_eval(const std::string& outcomes_path,
         const std::string& truth_dir,
         const std::string& report_path,
         const std::string& timing_path) {
    auto outcomes = parse_outcomes(read_text_file(outcomes_path));
    fs::path truth_file = fs::is_directory(truth_dir) ? fs::path(truth_dir) / "truth.json" : fs::path(truth_dir);
    auto truth = truth_from_json(read_text_file(truth_file));
    auto report = evaluate(outcomes, truth);
    if (!timing_path.empty()) {
        auto j = nlohmann::json::parse(read_text_file(timing_path));
        report.timing = TimingReport{{j.at("preset_s").get<double>(),
                                      j.at("retrieval_s").get<double>(),
                                      j.at("rerank_s").get<double>(),
                                      j.at("aggregation_s").get<double>()},
                                     j.at("total_s").get<double>()};
    }
    auto text = report_to_json(report);
    if (report_path.empty()) {
        fmt::print("{}", text);
    } else {
        write_text_file(report_path, text);
    }
    return kExitOk;
}

std::vector<size_t>
parse_list(const std::string& csv, const char* what) {
    std::vector<size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            auto v = std::stoull(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            out.push_back(v);
        } catch (const std::exception&) {
            throw_error(ErrorCode::INVALID_ARGUMENT, fmt::format("bad {} entry '{}'", what, item));
        }
    }
    if (out.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, fmt::format("{} list is empty", what));
    }
    return out;
}

int
cmd_sweep(const std::string& dims_csv,
          const std::string& ks_csv,
          const std::string& corpus_dir,
          const std::string& corpus_config,
          const std::string& out,
          bool as_json,
          size_t ef_search) {
    auto dims = parse_list(dims_csv, "dims");
    auto ks = parse_list(ks_csv, "ks");
    Corpus corpus;
    if (!corpus_dir.empty()) {
        corpus = read_corpus(corpus_dir);
    } else {
        CorpusConfig cfg;
        if (!corpus_config.empty()) {
            std::string text;
            try {
                text = read_text_file(corpus_config);
            } catch (const Error& e) {
                throw_error(ErrorCode::CONFIG_ERROR, e.detail());
            }
            cfg = corpus_config_from_json(text);
        }
        corpus = generate_corpus(cfg);
    }
    auto data = sweep_data(corpus);
    HnswParams params;
    params.ef_search = static_cast<uint32_t>(ef_search);
    auto rows = dimension_sweep(data.corpus, data.queries, dims, params, ks);
    auto text = as_json ? sweep_to_json(rows) : sweep_to_csv(rows);
    if (out.empty()) {
        fmt::print("{}", text);
    } else {
        write_text_file(out, text);
    }
    return kExitOk;
}

int
cmd_ablate(size_t seeds, size_t moco_steps, const std::string& out) {
    AblationConfig acfg;
    if (moco_steps > 0) {
        acfg.moco.steps = moco_steps;
    }
    DistillExperimentConfig dcfg;
    std::vector<AblationResult> contrastive;
    std::vector<DistillExperimentResult> distill;
    for (uint64_t s = 1; s <= seeds; ++s) {
        contrastive.push_back(run_contrastive_ablation(acfg, s));
        distill.push_back(run_distill_experiment(dcfg, s));
    }
    size_t joint_wins = 0;
    size_t kd_wins = 0;
    double moco = 0.0;
    double joint = 0.0;
    double small = 0.0;
    double small_kd = 0.0;
    for (size_t i = 0; i < seeds; ++i) {
        joint_wins += contrastive[i].moco_clip > contrastive[i].moco_only ? 1 : 0;
        kd_wins += distill[i].student_kd_ap > distill[i].student_ap ? 1 : 0;
        moco += contrastive[i].moco_only / static_cast<double>(seeds);
        joint += contrastive[i].moco_clip / static_cast<double>(seeds);
        small += distill[i].student_ap / static_cast<double>(seeds);
        small_kd += distill[i].student_kd_ap / static_cast<double>(seeds);
    }
    nlohmann::ordered_json j;
    j["seeds"] = seeds;
    j["contrastive"] = nlohmann::ordered_json::parse(ablation_to_json(contrastive));
    j["distill"] = nlohmann::ordered_json::parse(distill_results_to_json(distill));
    j["summary"] = {{"mean_recall_moco", moco},
                    {"mean_recall_moco_clip", joint},
                    {"moco_clip_wins", joint_wins},
                    {"moco_clip_beats_moco", joint > moco && joint_wins * 2 > seeds},
                    {"mean_ap_small", small},
                    {"mean_ap_small_kd", small_kd},
                    {"kd_wins", kd_wins},
                    {"small_kd_at_least_small", small_kd >= small}};
    auto text = j.dump(2) + "\n";
    if (out.empty()) {
        fmt::print("{}", text);
    } else {
        write_text_file(out, text);
    }
    return kExitOk;
}

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"livemod: livestream moderation simulator"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus");
    gen->add_option("--config", config, "Corpus config JSON");
    gen->add_option("--out", out, "Output directory")->required();

    std::string refs;
    auto* index = app.add_subcommand("index", "Build category indices from reference manifests");
    index->add_option("--refs", refs, "Corpus or refs/ directory")->required();
    index->add_option("--out", out, "Snapshot directory")->required();
    index->add_option("--config", config, "Pipeline config JSON (defaults when omitted)");

    std::string corpus;
    std::string index_dir;
    std::string timing;
    auto* run = app.add_subcommand("run", "Moderate every query stream of a corpus");
    run->add_option("--config", config, "Pipeline config JSON");
    run->add_option("--corpus", corpus, "Corpus directory")->required();
    run->add_option("--out", out, "Outcome JSONL")->required();
    run->add_option("--index", index_dir, "Index snapshot from `index` (built in memory when omitted)");
    run->add_option("--timing-out", timing, "Write per-stage timing JSON");

    std::string outcomes;
    std::string truth;
    std::string report;
    auto* eval = app.add_subcommand("eval", "Score outcomes against ground truth");
    eval->add_option("--outcomes", outcomes, "Outcome JSONL")->required();
    eval->add_option("--truth", truth, "Corpus directory or truth.json")->required();
    eval->add_option("--report", report, "Report JSON (stdout when omitted)");
    eval->add_option("--timing", timing, "Timing JSON from `run --timing-out` to embed");

    std::string dims = "32,64,128,256,512,768";
    std::string ks = "5,10,20,50,100";
    std::string corpus_config;
    bool as_json = false;
    size_t ef_search = 128;
    auto* sweep = app.add_subcommand("sweep", "Recall against embedding dimension");
    sweep->add_option("--dims", dims, "Comma-separated dimensions")->capture_default_str();
    sweep->add_option("--ks", ks, "Comma-separated cutoffs")->capture_default_str();
    sweep->add_option("--corpus", corpus, "Corpus directory");
    sweep->add_option("--corpus-config", corpus_config, "Generate the corpus from this config instead");
    sweep->add_option("--out", out, "Output file (stdout when omitted)");
    sweep->add_option("--ef", ef_search, "HNSW ef_search")->capture_default_str();
    sweep->add_flag("--json", as_json, "Emit JSON instead of CSV");

    size_t seeds = 3;
    size_t moco_steps = 0;
    auto* ablate = app.add_subcommand("ablate", "MoCo vs MoCo+CLIP and Small vs Small+KD");
    ablate->add_option("--seeds", seeds, "Number of paired seeds")->capture_default_str();
    ablate->add_option("--moco-steps", moco_steps, "Override MoCo training steps");
    ablate->add_option("--out", out, "Summary JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*gen) {
            return cmd_gen(config, out);
        }
        if (*index) {
            return cmd_index(refs, out, config);
        }
        if (*run) {
            return cmd_run(config, corpus, out, index_dir, timing);
        }
        if (*eval) {
            return cmd_eval(outcomes, truth, report, timing);
        }
        if (*sweep) {
            return cmd_sweep(dims, ks, corpus, corpus_config, out, as_json, ef_search);
        }
        if (*ablate) {
            return cmd_ablate(seeds, moco_steps, out);
        }
    } catch (const Error& e) {
        std::cerr << "livemod: " << e.what() << "\n";
        return e.code() == ErrorCode::CONFIG_ERROR ? kExitConfig : kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "livemod: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "livemod: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
