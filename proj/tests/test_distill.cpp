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

#include "livemod/distill.h"

#include <cmath>
#include <json.hpp>

#include "livemod/file_io.h"
#include "livemod/losses.h"
#include "metric_oracles.h"
#include "test_util.h"

using namespace livemod;

namespace {

Eigen::MatrixXd
random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = normal(rng);
    }
    return m;
}

std::vector<double>
flatten(const Eigen::MatrixXd& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

BlobTaskConfig
separable_two_class() {
    BlobTaskConfig t;
    t.num_classes = 2;
    t.blobs_per_class = 1;
    t.input_dim = 4;
    t.center_scale = 4.0;
    t.spread = 0.5;
    t.seed = 3;
    return t;
}

}  // namespace

TEST_CASE("mlp shapes and validation", "[distill][mlp]") {
    MlpClassifier m({5, 7, 3, 4}, 1);
    REQUIRE(m.hidden_dim() == 3);
    REQUIRE(m.num_classes() == 4);
    std::mt19937_64 rng(1);
    auto t = m.forward(random_matrix(rng, 6, 5));
    REQUIRE(t.logits.rows() == 6);
    REQUIRE(t.logits.cols() == 4);
    REQUIRE(t.activations.size() == 3);
    REQUIRE(t.activations.back().cols() == 3);
    Eigen::MatrixXd p = m.predict_proba(random_matrix(rng, 3, 5));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        REQUIRE(std::abs(p.row(r).sum() - 1.0) < 1e-12);
    }
    REQUIRE_ERROR(MlpClassifier({5, 3}, 1), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(MlpClassifier({5, 3, 1}, 1), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(m.forward(random_matrix(rng, 2, 4)), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("mlp backward agrees with finite differences", "[distill][gradient]") {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        MlpClassifier m({4, 5, 3, 3}, 10 + trial);
        Eigen::MatrixXd x = random_matrix(rng, 3, 4);
        Eigen::MatrixXd cl = random_matrix(rng, 3, 3);
        Eigen::MatrixXd ch = random_matrix(rng, 3, 3);
        DifferentiableFn f = [&](std::span<const double> theta, std::vector<double>* g) {
            MlpClassifier probe = m;
            probe.mutable_params() = Eigen::Map<const Eigen::VectorXd>(
                theta.data(), static_cast<Eigen::Index>(theta.size()));
            auto t = probe.forward(x);
            if (g) {
                Eigen::VectorXd grad = probe.backward(t, cl, ch);
                g->assign(grad.data(), grad.data() + grad.size());
            }
            return (t.logits.array() * cl.array()).sum() +
                   (t.activations.back().array() * ch.array()).sum();
        };
        std::vector<double> theta(m.params().data(), m.params().data() + m.params().size());
        worst = std::max(worst, grad_check(f, theta));
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("mlp checkpoints round-trip", "[distill][mlp]") {
    MlpClassifier m({3, 4, 2}, 9);
    testing::TempDir dir("mlp");
    m.save(dir.path() / "m.json");
    auto loaded = MlpClassifier::load(dir.path() / "m.json");
    REQUIRE(loaded.sizes() == m.sizes());
    REQUIRE(loaded.params() == m.params());
    REQUIRE(loaded.to_json() == m.to_json());

    auto j = nlohmann::json::parse(m.to_json());
    REQUIRE(j["format"] == "livemod-mlp");
    REQUIRE(j["version"] == 1);
    // row-major weights: entry (r, c) of the first layer sits at r * cols + c
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 3);
    x(0, 1) = 1.0;
    auto hidden = m.forward(x).activations[1];
    double pre = j["layers"][0]["weights"][1 * 4 + 2].get<double>() +
                 j["layers"][0]["bias"][2].get<double>();
    REQUIRE(hidden(0, 2) == Catch::Approx(std::tanh(pre)).epsilon(1e-14));

    auto bad_version = j;
    bad_version["version"] = 2;
    REQUIRE_ERROR(MlpClassifier::from_json(bad_version.dump()), ErrorCode::PARSE_ERROR);
    auto bad_shape = j;
    bad_shape["layers"][0]["weights"].erase(0);
    REQUIRE_ERROR(MlpClassifier::from_json(bad_shape.dump()), ErrorCode::PARSE_ERROR);
    auto bad_sizes = j;
    bad_sizes["sizes"] = {3, 2};
    REQUIRE_ERROR(MlpClassifier::from_json(bad_sizes.dump()), ErrorCode::PARSE_ERROR);
    REQUIRE_ERROR(MlpClassifier::from_json("{nope"), ErrorCode::PARSE_ERROR);
}

TEST_CASE("teacher training on separable data", "[distill][training]") {
    auto task = separable_two_class();
    auto train = make_blob_set(task, 400, 1);
    auto test = make_blob_set(task, 400, 2);
    TrainConfig cfg;
    cfg.steps = 300;
    auto result = train_teacher(train, {8}, cfg);
    REQUIRE(accuracy(result.model, test) >= 0.95);
    REQUIRE(eval_ap(result.model, test, 1) == 1.0);
    double early = 0.0, late = 0.0;
    for (size_t i = 0; i < 30; ++i) {
        early += result.loss_trace[i];
        late += result.loss_trace[270 + i];
    }
    REQUIRE(late < early);

    TrainConfig none = cfg;
    none.steps = 0;
    auto init = train_teacher(train, {8}, none);
    REQUIRE(init.model.params() == MlpClassifier({4, 8, 2}, cfg.seed).params());
    REQUIRE(init.loss_trace.empty());
}

TEST_CASE("teacher training rejects degenerate labels", "[distill]") {
    auto set = make_blob_set(separable_two_class(), 100, 1);
    auto single = set;
    std::fill(single.y.begin(), single.y.end(), 0);
    REQUIRE_ERROR(train_teacher(single, {4}, TrainConfig{}), ErrorCode::INVALID_ARGUMENT);
    auto one_class_set = set;
    one_class_set.num_classes = 1;
    std::fill(one_class_set.y.begin(), one_class_set.y.end(), 0);
    REQUIRE_ERROR(train_teacher(one_class_set, {4}, TrainConfig{}), ErrorCode::INVALID_ARGUMENT);
    auto sparse = make_blob_set(separable_two_class(), 15, 1);
    REQUIRE_ERROR(train_teacher(sparse, {4}, TrainConfig{}), ErrorCode::INVALID_ARGUMENT);
    auto out_of_range = set;
    out_of_range.y[0] = 5;
    REQUIRE_ERROR(train_teacher(out_of_range, {4}, TrainConfig{}), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("self-distillation is a fixed point", "[distill]") {
    std::mt19937_64 rng(4);
    MlpClassifier teacher({6, 8, 5, 3}, 1);
    Eigen::MatrixXd x = random_matrix(rng, 20, 6);
    auto t = teacher.forward(x);
    Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(5, 5);
    std::vector<int> labels(20);
    for (auto& l : labels) {
        l = static_cast<int>(rng() % 3);
    }
    DistillConfig kl_only{1.0, 0.0, 0.0, 1.0, true};
    auto terms = distill_objective(t.logits, t.activations.back(), t.logits, t.activations.back(),
                                   identity, kl_only, nullptr, nullptr);
    REQUIRE(terms.total == 0.0);

    DistillConfig all{1.0, 1.0, 0.7, 1.0, true};
    terms = distill_objective(t.logits, t.activations.back(), t.logits, t.activations.back(),
                              identity, all, &labels, nullptr);
    REQUIRE(terms.kl == 0.0);
    REQUIRE(terms.mse == 0.0);
    REQUIRE(terms.total == 0.7 * terms.ce);
    REQUIRE(terms.ce > 0.0);

    // student initialized to the teacher with no projection starts at zero loss
    DistillConfig unlabeled_only{1.0, 1.0, 0.0, 1.0, false};
    TrainConfig one_step{1, 20, 1e-3, 1};
    auto r = distill_student(teacher, x, {8, 5}, unlabeled_only, one_step, nullptr, teacher);
    REQUIRE(r.loss_trace.at(0) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("distillation objective is non-negative with correct gradients", "[distill][gradient]") {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 3, c = 4, hs = 3, ht = 5;
        Eigen::MatrixXd tl = random_matrix(rng, n, c, 2.0);
        Eigen::MatrixXd th = random_matrix(rng, n, ht);
        Eigen::MatrixXd sl = random_matrix(rng, n, c, 2.0);
        Eigen::MatrixXd sh = random_matrix(rng, n, hs);
        Eigen::MatrixXd proj = random_matrix(rng, hs, ht);
        std::vector<int> labels = {0, 3, 1};
        DistillConfig cfg{0.5 + (trial % 3), 0.3 * (trial % 4), 0.2 * (trial % 5), 0.5 + 0.5 * (trial % 4), true};
        DistillGrad g;
        auto terms = distill_objective(tl, th, sl, sh, proj, cfg, &labels, &g);
        REQUIRE(terms.kl >= 0.0);
        REQUIRE(terms.mse >= 0.0);
        REQUIRE(terms.total >= 0.0);

        // pack (student logits, student hidden, projection)
        std::vector<double> x = flatten(sl);
        auto hv = flatten(sh);
        auto pv = flatten(proj);
        x.insert(x.end(), hv.begin(), hv.end());
        x.insert(x.end(), pv.begin(), pv.end());
        DifferentiableFn f = [&](std::span<const double> v, std::vector<double>* grad) {
            Eigen::Map<const Eigen::MatrixXd> a(v.data(), n, c);
            Eigen::Map<const Eigen::MatrixXd> b(v.data() + n * c, n, hs);
            Eigen::Map<const Eigen::MatrixXd> p(v.data() + n * c + n * hs, hs, ht);
            DistillGrad dg;
            auto t = distill_objective(tl, th, a, b, p, cfg, &labels, &dg);
            if (grad) {
                *grad = flatten(dg.d_logits);
                auto gh = flatten(dg.d_hidden);
                auto gp = flatten(dg.d_projection);
                grad->insert(grad->end(), gh.begin(), gh.end());
                grad->insert(grad->end(), gp.begin(), gp.end());
            }
            return t.total;
        };
        worst = std::max(worst, grad_check(f, x));
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("distill_student argument checks", "[distill]") {
    MlpClassifier teacher({4, 6, 3}, 1);
    Eigen::MatrixXd empty(0, 4);
    REQUIRE_ERROR(distill_student(teacher, empty, {4}, DistillConfig{}, TrainConfig{}),
                  ErrorCode::INVALID_ARGUMENT);
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 4);
    REQUIRE_ERROR(distill_student(teacher, x, {7}, DistillConfig{}, TrainConfig{}),
                  ErrorCode::INVALID_ARGUMENT);
    DistillConfig no_proj{1.0, 1.0, 0.0, 1.0, false};
    REQUIRE_ERROR(distill_student(teacher, x, {4}, no_proj, TrainConfig{}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(DistillConfig({0.0, 0.0, 0.0, 1.0, true}).validate(), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(DistillConfig({1.0, 0.0, 0.0, 0.0, true}).validate(), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(DistillConfig({-1.0, 1.0, 0.0, 1.0, true}).validate(), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("distillation loss decreases", "[distill][training]") {
    BlobTaskConfig task;
    auto teacher_set = make_blob_set(task, 2000, 1);
    auto teacher = train_teacher(teacher_set, {32, 32}, TrainConfig{800, 64, 1e-2, 1}).model;
    auto unlabeled = make_blob_set(task, 1000, 2);
    auto r = distill_student(teacher, unlabeled.x, {8}, DistillConfig{}, TrainConfig{600, 32, 1e-2, 2});
    double early = 0.0, late = 0.0;
    for (size_t i = 0; i < 60; ++i) {
        early += r.loss_trace[i];
        late += r.loss_trace[540 + i];
    }
    REQUIRE(late < early);
    REQUIRE(r.projection.rows() == 8);
    REQUIRE(r.projection.cols() == 32);
}

TEST_CASE("eval_ap edge cases", "[distill]") {
    auto task = separable_two_class();
    auto test = make_blob_set(task, 200, 5);
    // balance the set exactly so a constant scorer has AP 0.5
    for (size_t i = 0; i < test.size(); ++i) {
        test.y[i] = static_cast<int>(i % 2);
    }
    MlpClassifier constant({4, 3, 2}, 1);
    constant.mutable_params().setZero();
    REQUIRE(eval_ap(constant, test, 1) == 0.5);

    auto real = make_blob_set(task, 200, 6);
    auto model = train_teacher(make_blob_set(task, 400, 7), {8}, TrainConfig{300, 64, 1e-2, 1}).model;
    REQUIRE(eval_ap(model, real, 1) == 1.0);
    // flipped labels: compare against the brute-force definition
    auto flipped = real;
    std::vector<ScoredLabel> scored;
    Eigen::MatrixXd p = model.predict_proba(real.x);
    for (size_t i = 0; i < flipped.size(); ++i) {
        flipped.y[i] = 1 - flipped.y[i];
        scored.push_back({p(static_cast<Eigen::Index>(i), 1), flipped.y[i] == 1});
    }
    REQUIRE(std::abs(eval_ap(model, flipped, 1) - oracle::average_precision(scored)) < 1e-12);
    REQUIRE(eval_ap(model, flipped, 1) < 0.6);

    auto single = real;
    std::fill(single.y.begin(), single.y.end(), 1);
    REQUIRE_ERROR(eval_ap(model, single, 1), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(eval_ap(model, real, 2), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("distilled students beat students trained from scratch", "[distill][training]") {
    DistillExperimentConfig cfg;
    std::vector<DistillExperimentResult> results;
    int wins = 0;
    double gain = 0.0;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        auto r = run_distill_experiment(cfg, seed);
        INFO("seed " << seed << " teacher " << r.teacher_ap << " scratch " << r.student_ap << " kd "
                     << r.student_kd_ap);
        wins += r.student_kd_ap >= r.student_ap ? 1 : 0;
        gain += (r.student_kd_ap - r.student_ap) / 3.0;
        results.push_back(r);
    }
    REQUIRE(wins >= 2);
    REQUIRE(gain > 0.0);
    auto json = nlohmann::json::parse(distill_results_to_json(results));
    REQUIRE(json.size() == 3);
    REQUIRE(json[2]["seed"] == 3);
}
