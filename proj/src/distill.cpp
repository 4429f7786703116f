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
#include <fmt/format.h>
#include <json.hpp>
#include <random>

#include "livemod/embedding.h"
#include "livemod/errors.h"
#include "livemod/evalkit.h"
#include "livemod/losses.h"
#include "livemod/optim.h"

namespace livemod {

namespace {

Eigen::MatrixXd
log_softmax_rows(const Eigen::MatrixXd& logits, double temperature) {
    Eigen::MatrixXd z = logits / temperature;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        double mx = z.row(r).maxCoeff();
        double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
        z.row(r).array() -= lse;
    }
    return z;
}

std::vector<size_t>
sample_rows(std::mt19937_64& rng, size_t n, size_t batch) {
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::vector<size_t> idx(batch);
    for (auto& i : idx) {
        i = pick(rng);
    }
    return idx;
}

Eigen::MatrixXd
gather(const Eigen::MatrixXd& m, const std::vector<size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

std::vector<size_t>
with_ends(size_t in, const std::vector<size_t>& hidden, size_t out) {
    std::vector<size_t> sizes = {in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

// CE training without the teacher-side data requirements.
TrainResult
train_supervised(const LabeledSet& data, MlpClassifier model, const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    Adam adam(model.params().size(), cfg.lr);
    std::vector<double> trace;
    trace.reserve(cfg.steps);
    DistillConfig ce_only{0.0, 0.0, 1.0, 1.0, false};
    for (size_t step = 0; step < cfg.steps; ++step) {
        auto idx = sample_rows(rng, data.size(), cfg.batch);
        std::vector<int> labels;
        for (size_t i : idx) {
            labels.push_back(data.y[i]);
        }
        auto t = model.forward(gather(data.x, idx));
        DistillGrad g;
        Eigen::MatrixXd none;
        auto terms = distill_objective(t.logits, none, t.logits, none, none, ce_only, &labels, &g);
        adam.step(model.mutable_params(), model.backward(t, g.d_logits));
        trace.push_back(terms.total);
    }
    return {std::move(model), std::move(trace)};
}

}  // namespace

void
LabeledSet::validate() const {
    if (static_cast<size_t>(x.rows()) != y.size()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "labeled set rows and labels differ in count");
    }
    if (y.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "labeled set is empty");
    }
    for (int label : y) {
        if (label < 0 || static_cast<size_t>(label) >= num_classes) {
            throw_error(ErrorCode::INVALID_ARGUMENT,
                        fmt::format("label {} outside [0, {})", label, num_classes));
        }
    }
}

TrainResult
train_teacher(const LabeledSet& data, const std::vector<size_t>& hidden, const TrainConfig& cfg) {
    data.validate();
    if (data.num_classes < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "teacher needs >= 2 classes");
    }
    std::vector<size_t> counts(data.num_classes, 0);
    for (int label : data.y) {
        ++counts[static_cast<size_t>(label)];
    }
    for (size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 10) {
            throw_error(ErrorCode::INVALID_ARGUMENT,
                        fmt::format("class {} has {} examples, need >= 10", c, counts[c]));
        }
    }
    MlpClassifier model(with_ends(static_cast<size_t>(data.x.cols()), hidden, data.num_classes),
                        cfg.seed);
    return train_supervised(data, std::move(model), cfg);
}

void
DistillConfig::validate() const {
    if (lambda_kl < 0.0 || lambda_mse < 0.0 || lambda_ce < 0.0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "distillation weights must be >= 0");
    }
    if (lambda_kl + lambda_mse + lambda_ce <= 0.0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "at least one distillation weight must be > 0");
    }
    if (!(temperature > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "distillation temperature must be > 0");
    }
}

DistillTerms
distill_objective(const Eigen::MatrixXd& teacher_logits,
                  const Eigen::MatrixXd& teacher_hidden,
                  const Eigen::MatrixXd& student_logits,
                  const Eigen::MatrixXd& student_hidden,
                  const Eigen::MatrixXd& projection,
                  const DistillConfig& cfg,
                  const std::vector<int>* labels,
                  DistillGrad* grad) {
    cfg.validate();
    const Eigen::Index n = student_logits.rows();
    if (n == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "distillation batch is empty");
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    DistillTerms terms;
    if (grad != nullptr) {
        grad->d_logits = Eigen::MatrixXd::Zero(n, student_logits.cols());
        grad->d_hidden = Eigen::MatrixXd::Zero(student_hidden.rows(), student_hidden.cols());
        grad->d_projection = Eigen::MatrixXd::Zero(projection.rows(), projection.cols());
    }

    if (cfg.lambda_kl > 0.0) {
        if (teacher_logits.rows() != n || teacher_logits.cols() != student_logits.cols()) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "teacher and student logits differ in shape");
        }
        const double t = cfg.temperature;
        Eigen::MatrixXd log_p = log_softmax_rows(teacher_logits, t);
        Eigen::MatrixXd log_q = log_softmax_rows(student_logits, t);
        Eigen::MatrixXd p = log_p.array().exp().matrix();
        terms.kl = (p.array() * (log_p - log_q).array()).sum() * inv_n;
        if (grad != nullptr) {
            Eigen::MatrixXd q = log_q.array().exp().matrix();
            grad->d_logits += cfg.lambda_kl * (q - p) * (inv_n / t);
        }
    }

    if (cfg.lambda_mse > 0.0) {
        if (student_hidden.rows() != n || projection.rows() != student_hidden.cols() ||
            teacher_hidden.rows() != n || projection.cols() != teacher_hidden.cols()) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "hidden states and projection differ in shape");
        }
        Eigen::MatrixXd diff = student_hidden * projection - teacher_hidden;
        const double inv_d = 1.0 / static_cast<double>(teacher_hidden.cols());
        terms.mse = diff.squaredNorm() * inv_d * inv_n;
        if (grad != nullptr) {
            Eigen::MatrixXd d_proj_out = cfg.lambda_mse * 2.0 * inv_d * inv_n * diff;
            grad->d_hidden += d_proj_out * projection.transpose();
            grad->d_projection += student_hidden.transpose() * d_proj_out;
        }
    }

    if (labels != nullptr && cfg.lambda_ce > 0.0) {
        if (static_cast<Eigen::Index>(labels->size()) != n) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "label count differs from batch size");
        }
        Eigen::MatrixXd log_q = log_softmax_rows(student_logits, 1.0);
        for (Eigen::Index r = 0; r < n; ++r) {
            int y = (*labels)[static_cast<size_t>(r)];
            if (y < 0 || y >= student_logits.cols()) {
                throw_error(ErrorCode::INVALID_ARGUMENT, "label outside the class range");
            }
            terms.ce -= std::max(log_q(r, y), std::log(kProbEpsilon)) * inv_n;
        }
        if (grad != nullptr) {
            Eigen::MatrixXd d = log_q.array().exp().matrix();
            for (Eigen::Index r = 0; r < n; ++r) {
                d(r, (*labels)[static_cast<size_t>(r)]) -= 1.0;
            }
            grad->d_logits += cfg.lambda_ce * inv_n * d;
        }
    }

    terms.total = cfg.lambda_kl * terms.kl + cfg.lambda_mse * terms.mse + cfg.lambda_ce * terms.ce;
    return terms;
}

DistillResult
distill_student(const MlpClassifier& teacher,
                const Eigen::MatrixXd& unlabeled,
                const std::vector<size_t>& student_hidden,
                const DistillConfig& cfg,
                const TrainConfig& train,
                const LabeledSet* labeled,
                std::optional<MlpClassifier> init) {
    cfg.validate();
    if (unlabeled.rows() == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "distillation needs unlabeled inputs");
    }
    if (static_cast<size_t>(unlabeled.cols()) != teacher.input_dim()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "unlabeled inputs do not match the teacher");
    }
    if (student_hidden.empty() || student_hidden.back() > teacher.hidden_dim()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    "student final hidden size must be >= 1 and <= the teacher's");
    }
    if (!cfg.projection && student_hidden.back() != teacher.hidden_dim()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "without a projection hidden sizes must match");
    }
    if (labeled != nullptr) {
        labeled->validate();
        if (labeled->num_classes != teacher.num_classes() ||
            static_cast<size_t>(labeled->x.cols()) != teacher.input_dim()) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "labeled set does not match the teacher");
        }
    }
    auto sizes = with_ends(teacher.input_dim(), student_hidden, teacher.num_classes());
    MlpClassifier student = init ? std::move(*init) : MlpClassifier(sizes, train.seed);
    if (student.sizes() != sizes) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "initial student does not match the requested architecture");
    }

    const auto hs = static_cast<Eigen::Index>(student.hidden_dim());
    const auto ht = static_cast<Eigen::Index>(teacher.hidden_dim());
    Eigen::MatrixXd projection;
    if (hs == ht) {
        projection = Eigen::MatrixXd::Identity(hs, ht);
    } else {
        std::mt19937_64 prng(mix_seed(train.seed, 0x9e0));
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(hs)));
        projection.resize(hs, ht);
        for (Eigen::Index i = 0; i < projection.size(); ++i) {
            projection.data()[i] = normal(prng);
        }
    }

    auto teacher_trace = teacher.forward(unlabeled);
    const Eigen::MatrixXd& teacher_hidden = teacher_trace.activations.back();

    std::mt19937_64 rng(train.seed);
    Adam adam(student.params().size(), train.lr);
    Adam adam_proj(projection.size(), train.lr);
    DistillConfig soft = cfg;
    soft.lambda_ce = 0.0;
    const bool soft_active = soft.lambda_kl + soft.lambda_mse > 0.0;
    const bool ce_active = labeled != nullptr && cfg.lambda_ce > 0.0;
    DistillConfig hard{0.0, 0.0, cfg.lambda_ce, 1.0, false};

    std::vector<double> trace;
    trace.reserve(train.steps);
    for (size_t step = 0; step < train.steps; ++step) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(student.params().size());
        Eigen::MatrixXd g_proj = Eigen::MatrixXd::Zero(hs, ht);
        double loss = 0.0;
        if (soft_active) {
            auto idx = sample_rows(rng, static_cast<size_t>(unlabeled.rows()), train.batch);
            auto st = student.forward(gather(unlabeled, idx));
            DistillGrad dg;
            auto terms = distill_objective(gather(teacher_trace.logits, idx),
                                           gather(teacher_hidden, idx), st.logits,
                                           st.activations.back(), projection, soft, nullptr, &dg);
            g += student.backward(st, dg.d_logits, dg.d_hidden);
            g_proj += dg.d_projection;
            loss += terms.total;
        }
        if (ce_active) {
            auto idx = sample_rows(rng, labeled->size(), train.batch);
            std::vector<int> labels;
            for (size_t i : idx) {
                labels.push_back(labeled->y[i]);
            }
            auto st = student.forward(gather(labeled->x, idx));
            DistillGrad dg;
            Eigen::MatrixXd none;
            auto terms = distill_objective(st.logits, none, st.logits, none, none, hard, &labels, &dg);
            g += student.backward(st, dg.d_logits);
            loss += terms.total;
        }
        adam.step(student.mutable_params(), g);
        if (cfg.projection) {
            Eigen::Map<Eigen::VectorXd> p(projection.data(), projection.size());
            adam_proj.step(p, Eigen::Map<const Eigen::VectorXd>(g_proj.data(), g_proj.size()));
        }
        trace.push_back(loss);
    }
    return {std::move(student), std::move(projection), std::move(trace)};
}

double
eval_ap(const MlpClassifier& model, const LabeledSet& data, int positive_class) {
    data.validate();
    if (positive_class < 0 || static_cast<size_t>(positive_class) >= model.num_classes()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "positive class outside the model's classes");
    }
    Eigen::MatrixXd p = model.predict_proba(data.x);
    std::vector<ScoredLabel> scored;
    scored.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        scored.push_back({p(static_cast<Eigen::Index>(i), positive_class), data.y[i] == positive_class});
    }
    return average_precision(scored);
}

double
macro_ap(const MlpClassifier& model, const LabeledSet& data) {
    double total = 0.0;
    for (size_t c = 0; c < model.num_classes(); ++c) {
        total += eval_ap(model, data, static_cast<int>(c));
    }
    return total / static_cast<double>(model.num_classes());
}

double
accuracy(const MlpClassifier& model, const LabeledSet& data) {
    data.validate();
    Eigen::MatrixXd logits = model.logits(data.x);
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        Eigen::Index best = 0;
        logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        correct += best == data.y[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

LabeledSet
make_blob_set(const BlobTaskConfig& task, size_t n, uint64_t sample_seed) {
    if (task.num_classes < 2 || task.input_dim == 0 || task.blobs_per_class == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "blob task needs >= 2 classes and >= 1 blob");
    }
    const auto d = static_cast<Eigen::Index>(task.input_dim);
    std::mt19937_64 center_rng(task.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(task.num_classes * task.blobs_per_class), d);
    for (Eigen::Index i = 0; i < centers.size(); ++i) {
        centers.data()[i] = task.center_scale * normal(center_rng);
    }

    LabeledSet set;
    set.num_classes = task.num_classes;
    set.x.resize(static_cast<Eigen::Index>(n), d);
    set.y.resize(n);
    std::mt19937_64 rng(mix_seed(task.seed, sample_seed));
    std::uniform_int_distribution<size_t> pick_class(0, task.num_classes - 1);
    std::uniform_int_distribution<size_t> pick_blob(0, task.blobs_per_class - 1);
    for (size_t i = 0; i < n; ++i) {
        size_t c = pick_class(rng);
        size_t b = pick_blob(rng);
        auto row = static_cast<Eigen::Index>(i);
        auto center = static_cast<Eigen::Index>(c * task.blobs_per_class + b);
        for (Eigen::Index j = 0; j < d; ++j) {
            set.x(row, j) = centers(center, j) + task.spread * normal(rng);
        }
        set.y[i] = static_cast<int>(c);
    }
    return set;
}

DistillExperimentResult
run_distill_experiment(const DistillExperimentConfig& cfg, uint64_t seed) {
    BlobTaskConfig task = cfg.task;
    task.seed = mix_seed(cfg.task.seed, seed);
    auto teacher_set = make_blob_set(task, cfg.teacher_examples, 1);
    auto subset = make_blob_set(task, cfg.labeled_subset, 2);
    auto unlabeled = make_blob_set(task, cfg.unlabeled_examples, 3);
    auto test = make_blob_set(task, cfg.test_examples, 4);

    TrainConfig tcfg = cfg.teacher_train;
    tcfg.seed = mix_seed(seed, 0x7e);
    auto teacher = train_teacher(teacher_set, cfg.teacher_hidden, tcfg).model;

    TrainConfig scfg = cfg.student_train;
    scfg.seed = mix_seed(seed, 0x5e);
    MlpClassifier init(with_ends(task.input_dim, cfg.student_hidden, task.num_classes), scfg.seed);
    auto scratch = train_supervised(subset, init, scfg).model;
    auto kd = distill_student(teacher, unlabeled.x, cfg.student_hidden, cfg.kd, scfg, &subset, init)
                  .student;

    DistillExperimentResult r;
    r.seed = seed;
    r.teacher_ap = macro_ap(teacher, test);
    r.student_ap = macro_ap(scratch, test);
    r.student_kd_ap = macro_ap(kd, test);
    return r;
}

std::string
distill_results_to_json(std::span<const DistillExperimentResult> results) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        rows.push_back({{"seed", r.seed},
                        {"ap_teacher", r.teacher_ap},
                        {"ap_student", r.student_ap},
                        {"ap_student_kd", r.student_kd_ap}});
    }
    return rows.dump(2) + "\n";
}

}  // namespace livemod
