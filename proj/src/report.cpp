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


#include "livemod/report.h"

#include <fmt/format.h>
#include <json.hpp>
#include <set>

#include "livemod/errors.h"

namespace livemod {

namespace {

using ojson = nlohmann::ordered_json;

ojson
opt(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

std::optional<double>
ratio(size_t num, size_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

RebroadcastMetrics
rebroadcast_metrics(std::span<const ModerationOutcome> outcomes, const GroundTruth& truth) {
    std::map<std::string, std::set<std::string>> flagged;  // stream -> confirmed sources
    for (const auto& o : outcomes) {
        bool reference_enforced = o.decision == Decision::ENFORCE &&
                                  (o.path == EvidencePath::REFERENCE || o.path == EvidencePath::BOTH);
        if (!reference_enforced) {
            continue;
        }
        auto& sources = flagged[o.stream_id];
        for (const auto& m : o.matches) {
            if (m.verdict == VerdictKind::CONFIRMED) {
                sources.insert(m.reference_stream);
            }
        }
    }
    RebroadcastMetrics r;
    std::set<std::string> detected;
    for (const auto& [stream, sources] : flagged) {
        const auto* t = truth.query(stream);
        if (t->kind == StreamKind::REBROADCAST && sources.count(t->source_stream_id) != 0) {
            ++r.tp;
            detected.insert(stream);
        } else {
            ++r.fp;
            r.false_positive_streams.push_back(stream);
        }
    }
    for (const auto& t : truth.queries) {
        if (t.kind == StreamKind::REBROADCAST && detected.count(t.stream_id) == 0) {
            ++r.fn;
            r.missed_streams.push_back(t.stream_id);
        }
    }
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    return r;
}

std::optional<PresetMetrics>
preset_metrics(std::span<const ModerationOutcome> outcomes, const GroundTruth& truth) {
    PresetMetrics p;
    std::vector<ScoredLabel> data;
    for (const auto& o : outcomes) {
        if (!o.preset) {
            continue;
        }
        const auto* t = truth.query(o.stream_id);
        const bool positive = t->kind == StreamKind::PRESET;
        data.push_back({o.preset->probability, positive});
        p.positives += positive ? 1 : 0;
        if (o.preset->triggered) {
            ++p.enforced_clips;
            if (positive) {
                ++p.enforced_true;
                p.enforced_correct_class += o.preset->cls == t->preset_class ? 1 : 0;
            }
        }
    }
    if (data.empty()) {
        return std::nullopt;
    }
    p.clips = data.size();
    if (p.positives > 0 && p.positives < p.clips) {
        p.average_precision = average_precision(data);
        p.best_f1 = best_f1(data);
        p.recall_at_precision_90 = recall_at_precision(data, 0.9);
    }
    return p;
}

std::optional<RetrievalMetrics>
retrieval_metrics(std::span<const ModerationOutcome> outcomes, const GroundTruth& truth) {
    auto aligned = aligned_clips(truth);
    std::vector<RetrievalCase> cases;
    size_t depth = std::numeric_limits<size_t>::max();
    for (const auto& o : outcomes) {
        auto it = aligned.find({o.stream_id, o.clip_index});
        if (it == aligned.end()) {
            continue;
        }
        RetrievalCase c;
        c.query_id = to_string(it->first);
        for (const auto& r : o.retrieved) {
            c.ranked.push_back(to_string(r.ref));
        }
        c.relevant.insert(to_string(it->second));
        depth = std::min(depth, std::max<size_t>(c.ranked.size(), 1));
        cases.push_back(std::move(c));
    }
    if (cases.empty()) {
        return std::nullopt;
    }
    RetrievalMetrics m;
    m.queries = cases.size();
    for (size_t k : kReportKs) {
        if (k <= depth) {
            m.recall_one[k] = recall_one_at_k(cases, k);
            m.recall_all[k] = recall_all_at_k(cases, k);
        }
    }
    return m;
}

ojson
recall_map(const std::map<size_t, double>& m) {
    ojson j = ojson::object();
    for (const auto& [k, v] : m) {
        j[std::to_string(k)] = v;
    }
    return j;
}

}  // namespace

Report
evaluate(std::span<const ModerationOutcome> outcomes, const GroundTruth& truth) {
    Report report;
    std::set<std::string> streams;
    for (const auto& o : outcomes) {
        const auto* t = truth.query(o.stream_id);
        if (t == nullptr) {
            throw_error(ErrorCode::VALIDATION_ERROR,
                        fmt::format("outcome for stream {} which the ground truth does not list", o.stream_id));
        }
        streams.insert(o.stream_id);
        switch (o.decision) {
            case Decision::ALLOW:
                ++report.decisions.allow;
                break;
            case Decision::REVIEW:
                ++report.decisions.review;
                break;
            case Decision::ENFORCE:
                ++report.decisions.enforce;
                report.decisions.enforce_on_clean_streams += t->violating() ? 0 : 1;
                break;
        }
    }
    report.streams = streams.size();
    report.clips = outcomes.size();
    report.rebroadcast = rebroadcast_metrics(outcomes, truth);
    report.preset = preset_metrics(outcomes, truth);
    report.retrieval = retrieval_metrics(outcomes, truth);
    return report;
}

std::string
report_to_json(const Report& r) {
    ojson j;
    j["schema_version"] = kReportSchemaVersion;
    j["streams"] = r.streams;
    j["clips"] = r.clips;
    j["decisions"] = {{"allow", r.decisions.allow},
                      {"review", r.decisions.review},
                      {"enforce", r.decisions.enforce},
                      {"enforce_on_clean_streams", r.decisions.enforce_on_clean_streams}};
    j["rebroadcast"] = {{"tp", r.rebroadcast.tp},
                        {"fp", r.rebroadcast.fp},
                        {"fn", r.rebroadcast.fn},
                        {"precision", opt(r.rebroadcast.precision)},
                        {"recall", opt(r.rebroadcast.recall)},
                        {"false_positive_streams", r.rebroadcast.false_positive_streams},
                        {"missed_streams", r.rebroadcast.missed_streams}};
    if (r.preset) {
        const auto& p = *r.preset;
        ojson f1 = nullptr;
        if (p.best_f1) {
            f1 = {{"f1", p.best_f1->f1},
                  {"threshold", p.best_f1->threshold},
                  {"precision", p.best_f1->precision},
                  {"recall", p.best_f1->recall}};
        }
        j["preset"] = {{"clips", p.clips},
                       {"positives", p.positives},
                       {"average_precision", opt(p.average_precision)},
                       {"best_f1", f1},
                       {"recall_at_precision_90", opt(p.recall_at_precision_90)},
                       {"enforced_clips", p.enforced_clips},
                       {"enforced_true", p.enforced_true},
                       {"enforced_correct_class", p.enforced_correct_class}};
    } else {
        j["preset"] = nullptr;
    }
    if (r.retrieval) {
        j["retrieval"] = {{"queries", r.retrieval->queries},
                          {"recall_one_at_k", recall_map(r.retrieval->recall_one)},
                          {"recall_all_at_k", recall_map(r.retrieval->recall_all)}};
    } else {
        j["retrieval"] = nullptr;
    }
    if (r.timing) {
        j["timing"] = {{"preset_s", r.timing->stages.preset_s},
                       {"retrieval_s", r.timing->stages.retrieval_s},
                       {"rerank_s", r.timing->stages.rerank_s},
                       {"aggregation_s", r.timing->stages.aggregation_s},
                       {"total_s", r.timing->total_s}};
    }
    return j.dump(2) + "\n";
}

}  // namespace livemod
