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

#include "livemod/aggregation.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>

#include "livemod/errors.h"

namespace livemod {

void
AggParams::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "aggregation tau must lie in [0, 1]");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "aggregation epsilon must be > 0");
    }
    if (l_min < 1) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "aggregation l_min must be >= 1");
    }
    if (!(s_min >= 0.0 && s_min <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "aggregation s_min must lie in [0, 1]");
    }
}

std::string_view
verdict_name(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::NO_MATCH:
            return "no_match";
        case VerdictKind::WEAK:
            return "weak";
        case VerdictKind::CONFIRMED:
            return "confirmed";
    }
    return "unknown";
}

MatchState::MatchState(std::string query_stream, std::string reference_stream)
    : query_stream_(std::move(query_stream)), reference_stream_(std::move(reference_stream)) {
}

std::pair<double, size_t>
MatchState::process_query_clip(double q_time,
                               std::span<const AggCandidate> candidates,
                               const AggParams& params) {
    params.validate();
    if (!std::isfinite(q_time)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "q_time must be finite");
    }
    if (last_q_time_ && q_time < *last_q_time_) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("q_time {} precedes the previous {}", q_time, *last_q_time_));
    }
    for (const auto& c : candidates) {
        if (!reference_stream_.empty() && !c.reference_stream.empty() &&
            c.reference_stream != reference_stream_) {
            throw_error(ErrorCode::CONTRACT_VIOLATION,
                        fmt::format("candidate from {} routed to state of {}", c.reference_stream,
                                    reference_stream_));
        }
        if (!(c.score >= 0.0 && c.score <= 1.0) || !std::isfinite(c.c_time)) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "candidate score must lie in [0, 1]");
        }
    }
    last_q_time_ = q_time;

    for (const auto& c : candidates) {
        if (c.score < params.tau) {
            continue;
        }
        size_t length = 1;
        double total = c.score;
        for (const auto& m : pairs_) {
            // evaluated in this exact form so results are bit-reproducible
            if (std::abs((q_time - m.q_time) - (c.c_time - m.c_time)) < params.epsilon) {
                ++length;
                total += m.score;
            }
        }
        const double mean = total / static_cast<double>(length);
        if (length > l_max_) {
            l_max_ = length;
            agg_score_ = mean;
        } else if (length == l_max_) {
            agg_score_ = std::max(agg_score_, mean);
        }
        pairs_.push_back({q_time, c.c_time, c.score});
        if (params.max_pairs > 0 && pairs_.size() > params.max_pairs) {
            pairs_.pop_front();
        }
    }
    return {agg_score_, l_max_};
}

std::string
MatchState::to_json() const {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : pairs_) {
        pairs.push_back({p.q_time, p.c_time, p.score});
    }
    nlohmann::json j = {{"query_stream", query_stream_},
                        {"reference_stream", reference_stream_},
                        {"pairs", pairs},
                        {"l_max", l_max_},
                        {"agg_score", agg_score_},
                        {"last_q_time", last_q_time_ ? nlohmann::json(*last_q_time_) : nlohmann::json()}};
    return j.dump();
}

MatchState
MatchState::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        MatchState s(j.at("query_stream").get<std::string>(), j.at("reference_stream").get<std::string>());
        for (const auto& p : j.at("pairs")) {
            if (p.size() != 3) {
                throw_error(ErrorCode::PARSE_ERROR, "match pair must have 3 fields");
            }
            s.pairs_.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
        s.l_max_ = j.at("l_max").get<size_t>();
        s.agg_score_ = j.at("agg_score").get<double>();
        if (!j.at("last_q_time").is_null()) {
            s.last_q_time_ = j.at("last_q_time").get<double>();
        }
        if ((s.l_max_ == 0) != s.pairs_.empty() || s.agg_score_ < 0.0 || s.agg_score_ > 1.0) {
            throw_error(ErrorCode::PARSE_ERROR, "match state violates its invariants");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::PARSE_ERROR, std::string("match state: ") + e.what());
    }
}

MatchVerdict
verdict(const MatchState& state, const AggParams& params) {
    MatchVerdict v{VerdictKind::NO_MATCH, state.l_max(), state.agg_score()};
    if (state.l_max() >= params.l_min && state.agg_score() >= params.s_min) {
        v.kind = VerdictKind::CONFIRMED;
    } else if (state.l_max() >= 1) {
        v.kind = VerdictKind::WEAK;
    }
    return v;
}

}  // namespace livemod
