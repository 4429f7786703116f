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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "livemod/evalkit.h"
#include "livemod/pipeline.h"
#include "livemod/simulator.h"

namespace livemod {

constexpr const char* kReportSchemaVersion = "1.0";

/// Retrieval cutoffs reported; those above the recorded list length are skipped.
constexpr std::array<size_t, 4> kReportKs = {1, 5, 10, 20};

/// Stream-level rebroadcast detection. A stream is flagged when one of its
/// clips is enforced on the reference path; it is a true positive only if a
/// confirmed match names its true source.
struct RebroadcastMetrics {
    size_t tp{0};
    size_t fp{0};
    size_t fn{0};
    std::optional<double> precision;  // undefined without flagged streams
    std::optional<double> recall;     // undefined without rebroadcasts
    std::vector<std::string> false_positive_streams;
    std::vector<std::string> missed_streams;
};

/// Clip-level preset path scored by the reported violation probability.
struct PresetMetrics {
    size_t clips{0};
    size_t positives{0};
    std::optional<double> average_precision;  // undefined unless both labels occur
    std::optional<F1Point> best_f1;
    std::optional<double> recall_at_precision_90;
    size_t enforced_clips{0};
    size_t enforced_true{0};
    size_t enforced_correct_class{0};
};

struct RetrievalMetrics {
    size_t queries{0};
    std::map<size_t, double> recall_one;
    std::map<size_t, double> recall_all;
};

struct DecisionCounts {
    size_t allow{0};
    size_t review{0};
    size_t enforce{0};
    /// Enforce outcomes on streams that carry no violation.
    size_t enforce_on_clean_streams{0};
};

struct TimingReport {
    StageTiming stages;
    double total_s{0.0};
};

struct Report {
    size_t streams{0};
    size_t clips{0};
    DecisionCounts decisions;
    RebroadcastMetrics rebroadcast;
    std::optional<PresetMetrics> preset;  // absent when no outcome carries preset evidence
    std::optional<RetrievalMetrics> retrieval;
    std::optional<TimingReport> timing;
};

/// Outcomes must name query streams of `truth`.
Report
evaluate(std::span<const ModerationOutcome> outcomes, const GroundTruth& truth);

std::string
report_to_json(const Report& report);

}  // namespace livemod
