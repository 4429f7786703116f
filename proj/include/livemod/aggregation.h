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

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace livemod {

/// One accepted (query clip, reference clip) match.
struct MatchPair {
    double q_time{0.0};
    double c_time{0.0};
    double score{0.0};

    bool
    operator==(const MatchPair&) const = default;
};

struct AggParams {
    double tau{0.6};
    double epsilon{2.0};  // seconds; offsets must differ by strictly less
    size_t l_min{3};
    double s_min{0.8};
    /// Oldest pairs beyond this many are evicted; 0 keeps every pair.
    size_t max_pairs{512};

    void
    validate() const;
};

struct AggCandidate {
    double c_time{0.0};
    double score{0.0};
    /// Reference stream of the candidate; empty skips the identity check.
    std::string reference_stream;
};

enum class VerdictKind { NO_MATCH, WEAK, CONFIRMED };

std::string_view
verdict_name(VerdictKind kind);

struct MatchVerdict {
    VerdictKind kind{VerdictKind::NO_MATCH};
    size_t l_max{0};
    double agg_score{0.0};
};

/// Clip-match aggregation state for one (query stream, reference stream) pair.
class MatchState {
public:
    MatchState() = default;
    MatchState(std::string query_stream, std::string reference_stream);

    /// Runs the aggregation over `candidates` in order, appending each
    /// accepted pair to M after scoring it. Returns (agg_score, l_max).
    /// q_time may not decrease across calls.
    std::pair<double, size_t>
    process_query_clip(double q_time, std::span<const AggCandidate> candidates, const AggParams& params);

    const std::deque<MatchPair>&
    pairs() const {
        return pairs_;
    }
    size_t
    l_max() const {
        return l_max_;
    }
    double
    agg_score() const {
        return agg_score_;
    }
    const std::string&
    query_stream() const {
        return query_stream_;
    }
    const std::string&
    reference_stream() const {
        return reference_stream_;
    }

    std::string
    to_json() const;
    static MatchState
    from_json(std::string_view text);

    bool
    operator==(const MatchState&) const = default;

private:
    std::string query_stream_;
    std::string reference_stream_;
    std::deque<MatchPair> pairs_;
    size_t l_max_{0};
    double agg_score_{0.0};
    std::optional<double> last_q_time_;
};

MatchVerdict
verdict(const MatchState& state, const AggParams& params);

}  // namespace livemod
