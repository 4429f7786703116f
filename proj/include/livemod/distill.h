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

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "livemod/mlp.h"

namespace livemod {

struct LabeledSet {
    Eigen::MatrixXd x;   // one example per row
    std::vector<int> y;  // class in [0, num_classes)
    size_t num_classes{0};

    size_t
    size() const {
        return y.size();
    }

    /// Shape and label-range checks only.
    void
    validate() const;
};

struct TrainConfig {
    size_t steps{2000};
    size_t batch{64};
    double lr{1e-2};
    uint64_t seed{1};
};

struct TrainResult {
    MlpClassifier model;
    std::vector<double> loss_trace;
};

/// Cross-entropy training of an MLP with the given hidden sizes. Needs >= 2
/// classes with >= 10 examples each. steps == 0 returns the initialization.
TrainResult
train_teacher(const LabeledSet& data, const std::vector<size_t>& hidden, const TrainConfig& cfg);

struct DistillConfig {
    double lambda_kl{1.0};
    double lambda_mse{1.0};
    double lambda_ce{0.0};
    double temperature{1.0};
    /// Learn a linear map from the student's hidden state to the teacher's.
    /// Without it the hidden sizes must match and the map is the identity.
    bool projection{true};

    void
    validate() const;
};

struct DistillTerms {
    double kl{0.0};
    double mse{0.0};
    double ce{0.0};
    double total{0.0};
};

struct DistillGrad {
    Eigen::MatrixXd d_logits;
    Eigen::MatrixXd d_hidden;
    Eigen::MatrixXd d_projection;
};

/// Batch mean of
///   lambda_kl KL(softmax(t/T) || softmax(s/T)) + lambda_mse MSE(h_s P, h_t)
///   + lambda_ce CE(y, softmax(s))
/// with the CE term present only when `labels` is given. Gradients are w.r.t.
/// the student logits, the student hidden state and P.
DistillTerms
distill_objective(const Eigen::MatrixXd& teacher_logits,
                  const Eigen::MatrixXd& teacher_hidden,
                  const Eigen::MatrixXd& student_logits,
                  const Eigen::MatrixXd& student_hidden,
                  const Eigen::MatrixXd& projection,
                  const DistillConfig& cfg,
                  const std::vector<int>* labels,
                  DistillGrad* grad);

struct DistillResult {
    MlpClassifier student;
    Eigen::MatrixXd projection;  // student hidden x teacher hidden
    std::vector<double> loss_trace;
};

/// KL/MSE on batches of `unlabeled`; when `labeled` is given and lambda_ce > 0
/// a labeled batch adds the CE term each step. `init` replaces the random
/// student initialization (its input and class count must match the teacher).
DistillResult
distill_student(const MlpClassifier& teacher,
                const Eigen::MatrixXd& unlabeled,
                const std::vector<size_t>& student_hidden,
                const DistillConfig& cfg,
                const TrainConfig& train,
                const LabeledSet* labeled = nullptr,
                std::optional<MlpClassifier> init = std::nullopt);

/// AP of the model's probability for `positive_class`.
double
eval_ap(const MlpClassifier& model, const LabeledSet& data, int positive_class);

/// Mean one-vs-rest AP over classes.
double
macro_ap(const MlpClassifier& model, const LabeledSet& data);

double
accuracy(const MlpClassifier& model, const LabeledSet& data);

/// Classes are unions of gaussian blobs with centers fixed by `seed`, which
/// makes the decision boundary nonlinear.
struct BlobTaskConfig {
    size_t num_classes{4};
    size_t input_dim{8};
    size_t blobs_per_class{3};
    double center_scale{1.5};
    double spread{1.0};
    uint64_t seed{11};
};

LabeledSet
make_blob_set(const BlobTaskConfig& task, size_t n, uint64_t sample_seed);

struct DistillExperimentConfig {
    BlobTaskConfig task{};
    size_t teacher_examples{4000};
    size_t labeled_subset{48};
    size_t unlabeled_examples{4000};
    size_t test_examples{2000};
    std::vector<size_t> teacher_hidden{64, 64};
    std::vector<size_t> student_hidden{16};
    TrainConfig teacher_train{3000, 64, 1e-2, 1};
    TrainConfig student_train{1500, 32, 1e-2, 1};
    DistillConfig kd{1.0, 1.0, 1.0, 1.0, true};
};

struct DistillExperimentResult {
    uint64_t seed{0};
    double teacher_ap{0.0};
    double student_ap{0.0};     // CE on the labeled subset only
    double student_kd_ap{0.0};  // same subset plus teacher KL/MSE on unlabeled data
};

/// One paired run: both students share initialization, labeled subset and
/// step budget; only the distillation terms differ.
DistillExperimentResult
run_distill_experiment(const DistillExperimentConfig& cfg, uint64_t seed);

std::string
distill_results_to_json(std::span<const DistillExperimentResult> results);

}  // namespace livemod
