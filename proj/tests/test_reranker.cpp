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

#include "livemod/reranker.h"

#include <cmath>

#include "test_util.h"

using namespace livemod;

namespace {

EmbeddingVector
at_angle(double radians) {
    return EmbeddingVector::normalized({std::cos(radians), std::sin(radians)});
}

ModalEmbeddings
modal(std::optional<EmbeddingVector> v, std::optional<EmbeddingVector> a, std::string text) {
    return {std::move(v), std::move(a), std::move(text)};
}

double
logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

TEST_CASE("text similarity", "[reranker]") {
    REQUIRE(text_similarity("live match stream", "live match stream") == 1.0);
    REQUIRE(text_similarity("abc def", "xyz") == 0.0);
    REQUIRE(text_similarity("a b c", "b c d") == 0.5);
    REQUIRE(text_similarity("", "") == 0.0);
    REQUIRE(text_similarity("", "a") == 0.0);
    REQUIRE(text_similarity("Live  MATCH\tstream", "live match stream stream") == 1.0);
}

TEST_CASE("score_pair hand values", "[reranker]") {
    auto e1 = at_angle(0.0);
    auto e2 = at_angle(M_PI / 2.0);
    Calibration cal{10.0, -5.0};

    auto same = modal(e1, e1, "goal replay crowd");
    ClipPair identical{{"q", 0}, &same, {"r", 0}, &same};
    auto s = score_pair(identical, FusionWeights{}, cal);
    REQUIRE(s.fusion == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(std::abs(s.value - 0.993307) < 1e-6);

    auto q = modal(e1, e1, "goal replay crowd");
    auto c = modal(e2, e2, "cooking show kitchen");
    ClipPair apart{{"q", 0}, &q, {"r", 0}, &c};
    s = score_pair(apart, FusionWeights{}, cal);
    REQUIRE(std::abs(s.fusion) < 1e-15);
    REQUIRE(std::abs(s.value - 0.006693) < 1e-6);
    REQUIRE(s.text_sim == 0.0);

    // weight only on visual and no candidate text: the pure visual path
    auto partial = modal(at_angle(0.3), std::nullopt, "");
    ClipPair visual_only{{"q", 0}, &q, {"r", 0}, &partial};
    s = score_pair(visual_only, FusionWeights{1.0, 0.0, 0.0}, cal);
    REQUIRE_FALSE(s.text_sim.has_value());
    REQUIRE_FALSE(s.audio_sim.has_value());
    REQUIRE(s.value == logistic(10.0 * cosine(e1, at_angle(0.3)) - 5.0));

    // default weights renormalize over the modalities present
    s = score_pair(visual_only, FusionWeights{}, cal);
    REQUIRE(s.fusion == Catch::Approx(cosine(e1, at_angle(0.3))).epsilon(1e-12));
}

TEST_CASE("score_pair needs a shared weighted modality", "[reranker]") {
    auto q = modal(at_angle(0.0), std::nullopt, "");
    auto c = modal(std::nullopt, at_angle(0.0), "words");
    ClipPair nothing{{"q", 0}, &q, {"r", 0}, &c};
    REQUIRE_ERROR(score_pair(nothing, FusionWeights{}, Calibration{}), ErrorCode::INVALID_ARGUMENT);
    ClipPair zero_weight{{"q", 0}, &q, {"r", 0}, &q};
    REQUIRE_ERROR(score_pair(zero_weight, FusionWeights{0.0, 1.0, 1.0}, Calibration{}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(FusionWeights({0.0, 0.0, 0.0}).validate(), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(FusionWeights({-1.0, 1.0, 0.0}).validate(), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("score_pair is monotone in each component", "[reranker][property]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        FusionWeights w{u(rng), u(rng), u(rng) + 0.01};
        Calibration cal{0.1 + 10.0 * u(rng), -5.0 * u(rng)};
        double av = M_PI * u(rng), aa = M_PI * u(rng);
        auto q = modal(at_angle(0.0), at_angle(0.0), "a b c d");
        auto c = modal(at_angle(av), at_angle(aa), "a x y z");
        ClipPair base{{"q", 0}, &q, {"r", 0}, &c};
        double v0 = score_pair(base, w, cal).value;

        auto closer_v = modal(at_angle(av * 0.5), at_angle(aa), "a x y z");
        ClipPair pv{{"q", 0}, &q, {"r", 0}, &closer_v};
        REQUIRE(score_pair(pv, w, cal).value >= v0);

        auto closer_a = modal(at_angle(av), at_angle(aa * 0.5), "a x y z");
        ClipPair pa{{"q", 0}, &q, {"r", 0}, &closer_a};
        REQUIRE(score_pair(pa, w, cal).value >= v0);

        auto more_text = modal(at_angle(av), at_angle(aa), "a b y z");
        ClipPair pt{{"q", 0}, &q, {"r", 0}, &more_text};
        REQUIRE(score_pair(pt, w, cal).value >= v0);
    }
}

TEST_CASE("rerank filters, orders and breaks ties", "[reranker]") {
    FusionScorer scorer(FusionWeights{1.0, 0.0, 0.0}, Calibration{8.0, -4.0});
    auto q = modal(at_angle(0.0), std::nullopt, "");
    std::vector<ModalEmbeddings> store = {modal(at_angle(0.2), std::nullopt, ""),
                                          modal(at_angle(1.4), std::nullopt, ""),
                                          modal(at_angle(0.6), std::nullopt, ""),
                                          modal(at_angle(0.2), std::nullopt, "")};
    std::vector<RerankCandidate> cands = {{{"b", 0}, 0.9, &store[0]},
                                          {{"c", 1}, 0.5, &store[1]},
                                          {{"a", 3}, 0.7, &store[2]},
                                          {{"a", 9}, 0.9, &store[3]}};
    REQUIRE(rerank({}, {"q", 0}, q, scorer, 0.0).empty());
    REQUIRE(rerank(cands, {"q", 0}, q, scorer, 0.9999).empty());

    auto out = rerank(cands, {"q", 0}, q, scorer, 0.5);
    // straight-line recomputation of each value
    auto expect = [](double angle) { return logistic(8.0 * std::cos(angle) - 4.0); };
    REQUIRE(out.size() == 3);
    REQUIRE(out[0].ref == ClipRef{"a", 9});  // tie with b#0 resolved by ClipRef
    REQUIRE(out[1].ref == ClipRef{"b", 0});
    REQUIRE(out[2].ref == ClipRef{"a", 3});
    REQUIRE(out[0].score.value == Catch::Approx(expect(0.2)).epsilon(1e-12));
    REQUIRE(out[2].score.value == Catch::Approx(expect(0.6)).epsilon(1e-12));
    REQUIRE(expect(1.4) < 0.5);

    // idempotent on its own output
    std::vector<RerankCandidate> again;
    for (const auto& r : out) {
        for (const auto& c : cands) {
            if (c.ref == r.ref) {
                again.push_back(c);
            }
        }
    }
    auto twice = rerank(again, {"q", 0}, q, scorer, 0.5);
    REQUIRE(twice.size() == out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        REQUIRE(twice[i].ref == out[i].ref);
        REQUIRE(twice[i].score.value == out[i].score.value);
    }
}

TEST_CASE("student scorer is a drop-in", "[reranker]") {
    MlpClassifier model({kPairFeatureDim, 4, 2}, 3);
    StudentPairScorer student(model);
    auto q = modal(at_angle(0.0), at_angle(0.1), "a b");
    auto c = modal(at_angle(0.4), std::nullopt, "b c");
    ClipPair pair{{"q", 0}, &q, {"r", 0}, &c};
    auto f = pair_features(pair);
    REQUIRE(f.size() == kPairFeatureDim);
    REQUIRE(f[3] == 1.0);
    REQUIRE(f[4] == 1.0);
    REQUIRE(f[5] == 0.0);
    REQUIRE(f[2] == 0.0);
    auto s = student.score(pair);
    Eigen::MatrixXd x = Eigen::Map<const Eigen::RowVectorXd>(f.data(), 6);
    REQUIRE(s.value == Catch::Approx(model.predict_proba(x)(0, 1)).epsilon(1e-12));
    REQUIRE(s.value == Catch::Approx(logistic(s.fusion)).epsilon(1e-15));
    REQUIRE(student.name() == "student");
    std::vector<RerankCandidate> cands = {{{"r", 0}, 0.8, &c}};
    REQUIRE(rerank(cands, {"q", 0}, q, student, 0.0).size() == 1);
    REQUIRE_ERROR(StudentPairScorer(MlpClassifier({5, 4, 2}, 1)), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("embed_modalities marks absent modalities", "[reranker]") {
    Clip clip;
    clip.stream_id = "s";
    clip.visual_tokens = {{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}};
    clip.asr_text = "hello";
    TokenPoolingProvider provider(4);
    auto m = embed_modalities(clip, provider);
    REQUIRE(m.visual.has_value());
    REQUIRE_FALSE(m.audio.has_value());
    REQUIRE(m.asr_text == "hello");
}
