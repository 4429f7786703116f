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
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "livemod/embedding.h"

namespace livemod {

/// Probability clamp used by every log in this module.
constexpr double kProbEpsilon = 1e-12;

/// Probabilities over C >= 2 classes summing to 1 within 1e-9.
class ProbVector {
public:
    static ProbVector
    from(std::vector<double> p);

    static ProbVector
    from_logits(std::span<const double> logits, double temperature = 1.0);

    size_t
    size() const noexcept {
        return p_.size();
    }

    double
    operator[](size_t i) const {
        return p_[i];
    }

    std::span<const double>
    values() const noexcept {
        return p_;
    }

    /// Index of the largest probability, lowest index on ties.
    size_t
    argmax() const;

private:
    explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {
    }

    std::vector<double> p_;
};

std::vector<double>
softmax(std::span<const double> logits, double temperature = 1.0);

/// -sum y_i ln(max(p_i, eps)). Inputs are not required to lie on the simplex,
/// which keeps finite differences well defined.
double
cross_entropy(std::span<const double> y, std::span<const double> p);

/// d cross_entropy / d p.
std::vector<double>
cross_entropy_grad(std::span<const double> y, std::span<const double> p);

/// Composite gradient of cross_entropy(y, softmax(logits)) w.r.t. the logits
/// (p - y), valid when y sums to one.
std::vector<double>
softmax_cross_entropy_grad(std::span<const double> y, std::span<const double> logits);

/// sum p_i ln(p_i / q_i) with p the reference distribution; terms with p_i = 0 vanish.
double
kl_divergence(std::span<const double> p, std::span<const double> q);

/// d kl_divergence / d q.
std::vector<double>
kl_divergence_grad_q(std::span<const double> p, std::span<const double> q);

double
entropy(std::span<const double> p);

/// (1/n) sum (y_i - y_hat_i)^2.
double
mse(std::span<const double> y, std::span<const double> y_hat);

/// d mse / d y_hat.
std::vector<double>
mse_grad(std::span<const double> y, std::span<const double> y_hat);

/// Pairwise similarities with disjoint positive/negative masks. Rows are
/// anchors. A SELF matrix compares a set with itself, so it must be square and
/// its diagonal may not be masked; a CROSS matrix compares anchors against a
/// different sample set (e.g. momentum keys and a memory bank).
class SimilarityMatrix {
public:
    enum class Kind { SELF, CROSS };

    SimilarityMatrix(size_t rows,
                     size_t cols,
                     std::vector<double> s,
                     std::vector<uint8_t> pos_mask,
                     std::vector<uint8_t> neg_mask,
                     Kind kind = Kind::SELF);

    size_t
    rows() const {
        return rows_;
    }
    size_t
    cols() const {
        return cols_;
    }
    double
    s(size_t i, size_t j) const {
        return s_[i * cols_ + j];
    }
    bool
    positive(size_t i, size_t j) const {
        return pos_[i * cols_ + j] != 0;
    }
    bool
    negative(size_t i, size_t j) const {
        return neg_[i * cols_ + j] != 0;
    }
    std::span<const double>
    values() const {
        return s_;
    }
    Kind
    kind() const {
        return kind_;
    }

    /// Same masks, new similarity values (used by gradient checks).
    SimilarityMatrix
    with_values(std::vector<double> s) const;

private:
    size_t rows_;
    size_t cols_;
    std::vector<double> s_;
    std::vector<uint8_t> pos_;
    std::vector<uint8_t> neg_;
    Kind kind_;
};

struct MsParams {
    double alpha{2.0};   // negative weighting
    double beta{50.0};   // positive weighting
    double lambda{0.5};  // similarity margin
    // Multipliers on the negative and positive terms. The canonical
    // multi-similarity loss uses 1/alpha and 1/beta; the default is 1.
    double neg_scale{1.0};
    double pos_scale{1.0};

    void
    validate() const;
};

struct MsLossResult {
    double loss{0.0};
    std::vector<double> grad;  // d loss / d s, row-major like the matrix
};

/// Multi-similarity loss, evaluated as
///   1/|P| sum_{(i,j) in P} ln(1 + sum_{(i,k) in N} e^{alpha (s_ik - lambda)})
/// + 1/|N| sum_{(i,k) in N} ln(1 + sum_{(i,j) in P} e^{beta (lambda - s_ij)})
/// with the inner sums running over the same anchor row i. A term whose outer
/// set is empty contributes 0.
MsLossResult
multi_similarity_loss_with_grad(const SimilarityMatrix& s, const MsParams& params);

double
multi_similarity_loss(const SimilarityMatrix& s, const MsParams& params);

struct ClipLossResult {
    double loss{0.0};
    Eigen::MatrixXd grad_v;
    Eigen::MatrixXd grad_w;
};

/// Symmetric NT-Xent over N paired rows of V and W:
///   -1/N sum_i [ ln softmax_j(v_i.w_j/tau)_i + ln softmax_j(w_i.v_j/tau)_i ].
/// Rows are used as given; unit norm is the caller's contract.
ClipLossResult
clip_nt_xent_with_grad(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, double tau);

double
clip_nt_xent(std::span<const EmbeddingVector> v, std::span<const EmbeddingVector> w, double tau);

/// Loss plus (when grad != nullptr) its analytic gradient at x.
using DifferentiableFn = std::function<double(std::span<const double> x, std::vector<double>* grad)>;

/// Central-difference check; returns max_i |analytic_i - numeric_i| / max(1, |numeric_i|).
double
grad_check(const DifferentiableFn& f, std::span<const double> x, double h = 1e-5);

}  // namespace livemod
