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

#include "livemod/losses.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "livemod/errors.h"

namespace livemod {

namespace {

void
require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("{}: length mismatch ({} vs {})", what, a.size(), b.size()));
    }
    if (a.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, fmt::format("{}: empty input", what));
    }
}

double
clamp_prob(double p) {
    return std::max(p, kProbEpsilon);
}

}  // namespace

ProbVector
ProbVector::from(std::vector<double> p) {
    if (p.size() < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "a probability vector needs at least 2 classes");
    }
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "probabilities must be finite and >= 0");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("probabilities sum to {}, expected 1", sum));
    }
    return ProbVector(std::move(p));
}

ProbVector
ProbVector::from_logits(std::span<const double> logits, double temperature) {
    auto p = softmax(logits, temperature);
    // renormalize once more so the 1e-9 sum invariant holds after rounding
    double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) {
        x /= sum;
    }
    return from(std::move(p));
}

size_t
ProbVector::argmax() const {
    return static_cast<size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

std::vector<double>
softmax(std::span<const double> logits, double temperature) {
    if (logits.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "softmax of an empty vector");
    }
    if (!(temperature > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "temperature must be > 0");
    }
    double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - top) / temperature);
        sum += out[i];
    }
    for (double& x : out) {
        x /= sum;
    }
    return out;
}

double
cross_entropy(std::span<const double> y, std::span<const double> p) {
    require_same_length(y, p, "cross_entropy");
    double loss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0) {
            loss -= y[i] * std::log(clamp_prob(p[i]));
        }
    }
    return loss;
}

std::vector<double>
cross_entropy_grad(std::span<const double> y, std::span<const double> p) {
    require_same_length(y, p, "cross_entropy_grad");
    std::vector<double> grad(y.size(), 0.0);
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && p[i] > kProbEpsilon) {
            grad[i] = -y[i] / p[i];
        }
    }
    return grad;
}

std::vector<double>
softmax_cross_entropy_grad(std::span<const double> y, std::span<const double> logits) {
    require_same_length(y, logits, "softmax_cross_entropy_grad");
    auto p = softmax(logits);
    for (size_t i = 0; i < p.size(); ++i) {
        p[i] -= y[i];
    }
    return p;
}

double
kl_divergence(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q, "kl_divergence");
    double loss = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            loss += p[i] * (std::log(p[i]) - std::log(clamp_prob(q[i])));
        }
    }
    return loss;
}

std::vector<double>
kl_divergence_grad_q(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q, "kl_divergence_grad_q");
    std::vector<double> grad(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0 && q[i] > kProbEpsilon) {
            grad[i] = -p[i] / q[i];
        }
    }
    return grad;
}

double
entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log(x);
        }
    }
    return h;
}

double
mse(std::span<const double> y, std::span<const double> y_hat) {
    require_same_length(y, y_hat, "mse");
    double sum = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        double d = y[i] - y_hat[i];
        sum += d * d;
    }
    return sum / static_cast<double>(y.size());
}

std::vector<double>
mse_grad(std::span<const double> y, std::span<const double> y_hat) {
    require_same_length(y, y_hat, "mse_grad");
    std::vector<double> grad(y.size());
    double scale = 2.0 / static_cast<double>(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        grad[i] = scale * (y_hat[i] - y[i]);
    }
    return grad;
}

SimilarityMatrix::SimilarityMatrix(size_t rows,
                                   size_t cols,
                                   std::vector<double> s,
                                   std::vector<uint8_t> pos_mask,
                                   std::vector<uint8_t> neg_mask,
                                   Kind kind)
    : rows_(rows),
      cols_(cols),
      s_(std::move(s)),
      pos_(std::move(pos_mask)),
      neg_(std::move(neg_mask)),
      kind_(kind) {
    size_t n = rows_ * cols_;
    if (s_.size() != n || pos_.size() != n || neg_.size() != n) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "similarity matrix and masks differ in shape");
    }
    if (kind_ == Kind::SELF && rows_ != cols_) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "a SELF similarity matrix must be square");
    }
    for (size_t i = 0; i < rows_; ++i) {
        for (size_t j = 0; j < cols_; ++j) {
            size_t at = i * cols_ + j;
            if (!std::isfinite(s_[at]) || s_[at] < -1.0 - 1e-9 || s_[at] > 1.0 + 1e-9) {
                throw_error(ErrorCode::INVALID_ARGUMENT,
                            fmt::format("similarity ({}, {}) = {} outside [-1, 1]", i, j, s_[at]));
            }
            if (pos_[at] && neg_[at]) {
                throw_error(ErrorCode::INVALID_ARGUMENT,
                            fmt::format("pair ({}, {}) is both positive and negative", i, j));
            }
            if (kind_ == Kind::SELF && i == j && (pos_[at] || neg_[at])) {
                throw_error(ErrorCode::INVALID_ARGUMENT, "diagonal pairs may not be masked");
            }
        }
    }
}

SimilarityMatrix
SimilarityMatrix::with_values(std::vector<double> s) const {
    return SimilarityMatrix(rows_, cols_, std::move(s), pos_, neg_, kind_);
}

void
MsParams::validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "alpha and beta must be > 0");
    }
    if (!(lambda >= -1.0 && lambda <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "lambda must lie in [-1, 1]");
    }
    if (!(neg_scale >= 0.0) || !(pos_scale >= 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "term scales must be >= 0");
    }
}

MsLossResult
multi_similarity_loss_with_grad(const SimilarityMatrix& s, const MsParams& params) {
    params.validate();
    const size_t rows = s.rows();
    const size_t cols = s.cols();
    size_t total_pos = 0;
    size_t total_neg = 0;
    std::vector<size_t> row_pos(rows, 0);
    std::vector<size_t> row_neg(rows, 0);
    for (size_t i = 0; i < rows; ++i) {
        for (size_t j = 0; j < cols; ++j) {
            row_pos[i] += s.positive(i, j) ? 1 : 0;
            row_neg[i] += s.negative(i, j) ? 1 : 0;
        }
        total_pos += row_pos[i];
        total_neg += row_neg[i];
    }
    if (total_pos == 0 && total_neg == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "multi-similarity loss needs a masked pair");
    }

    MsLossResult out;
    out.grad.assign(rows * cols, 0.0);
    for (size_t i = 0; i < rows; ++i) {
        double neg_sum = 0.0;
        double pos_sum = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            if (s.negative(i, j)) {
                neg_sum += std::exp(params.alpha * (s.s(i, j) - params.lambda));
            } else if (s.positive(i, j)) {
                pos_sum += std::exp(params.beta * (params.lambda - s.s(i, j)));
            }
        }
        // first term: every positive pair anchored at i contributes ln(1 + neg_sum)
        double w_neg = 0.0;
        if (total_pos > 0 && row_pos[i] > 0) {
            double weight = params.neg_scale * static_cast<double>(row_pos[i]) /
                            static_cast<double>(total_pos);
            out.loss += weight * std::log1p(neg_sum);
            w_neg = weight / (1.0 + neg_sum);
        }
        // second term: every negative pair anchored at i contributes ln(1 + pos_sum)
        double w_pos = 0.0;
        if (total_neg > 0 && row_neg[i] > 0) {
            double weight = params.pos_scale * static_cast<double>(row_neg[i]) /
                            static_cast<double>(total_neg);
            out.loss += weight * std::log1p(pos_sum);
            w_pos = weight / (1.0 + pos_sum);
        }
        for (size_t j = 0; j < cols; ++j) {
            if (s.negative(i, j) && w_neg != 0.0) {
                out.grad[i * cols + j] =
                    w_neg * params.alpha * std::exp(params.alpha * (s.s(i, j) - params.lambda));
            } else if (s.positive(i, j) && w_pos != 0.0) {
                out.grad[i * cols + j] =
                    -w_pos * params.beta * std::exp(params.beta * (params.lambda - s.s(i, j)));
            }
        }
    }
    return out;
}

double
multi_similarity_loss(const SimilarityMatrix& s, const MsParams& params) {
    return multi_similarity_loss_with_grad(s, params).loss;
}

ClipLossResult
clip_nt_xent_with_grad(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, double tau) {
    if (!(tau > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "tau must be > 0");
    }
    if (v.rows() != w.rows() || v.cols() != w.cols()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("clip_nt_xent: V is {}x{}, W is {}x{}",
                                v.rows(),
                                v.cols(),
                                w.rows(),
                                w.cols()));
    }
    const Eigen::Index n = v.rows();
    if (n < 1) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip_nt_xent needs at least one pair");
    }
    Eigen::MatrixXd logits = (v * w.transpose()) / tau;
    Eigen::VectorXd row_lse(n);
    Eigen::VectorXd col_lse(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double rmax = logits.row(i).maxCoeff();
        row_lse(i) = rmax + std::log((logits.row(i).array() - rmax).exp().sum());
        double cmax = logits.col(i).maxCoeff();
        col_lse(i) = cmax + std::log((logits.col(i).array() - cmax).exp().sum());
    }
    ClipLossResult out;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum += (logits(i, i) - row_lse(i)) + (logits(i, i) - col_lse(i));
    }
    out.loss = -sum / static_cast<double>(n);

    Eigen::MatrixXd g(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            double row_p = std::exp(logits(a, b) - row_lse(a));
            double col_p = std::exp(logits(a, b) - col_lse(b));
            g(a, b) = row_p + col_p - (a == b ? 2.0 : 0.0);
        }
    }
    g /= static_cast<double>(n);
    out.grad_v = g * w / tau;
    out.grad_w = g.transpose() * v / tau;
    return out;
}

double
clip_nt_xent(std::span<const EmbeddingVector> v, std::span<const EmbeddingVector> w, double tau) {
    if (v.size() != w.size() || v.empty()) {
        throw_error(ErrorCode::INVALID_ARGUMENT,
                    fmt::format("clip_nt_xent needs equal non-empty batches ({} vs {})",
                                v.size(),
                                w.size()));
    }
    const size_t dim = v.front().dim();
    Eigen::MatrixXd vm(v.size(), dim);
    Eigen::MatrixXd wm(w.size(), dim);
    for (size_t i = 0; i < v.size(); ++i) {
        if (v[i].dim() != dim || w[i].dim() != dim) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "clip_nt_xent: embedding dims differ");
        }
        for (size_t d = 0; d < dim; ++d) {
            vm(i, d) = v[i][d];
            wm(i, d) = w[i][d];
        }
    }
    return clip_nt_xent_with_grad(vm, wm, tau).loss;
}

double
grad_check(const DifferentiableFn& f, std::span<const double> x, double h) {
    std::vector<double> analytic;
    f(x, &analytic);
    if (analytic.size() != x.size()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "analytic gradient has the wrong length");
    }
    std::vector<double> probe(x.begin(), x.end());
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double saved = probe[i];
        probe[i] = saved + h;
        double up = f(probe, nullptr);
        probe[i] = saved - h;
        double down = f(probe, nullptr);
        probe[i] = saved;
        double numeric = (up - down) / (2.0 * h);
        double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace livemod
