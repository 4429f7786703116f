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
#include <span>

#include "livemod/embedding.h"

namespace livemod {

struct EncoderShape {
    size_t input_dim{32};
    size_t hidden_dim{0};  // 0: purely affine
    size_t output_dim{32};

    bool
    operator==(const EncoderShape&) const = default;
};

/// x -> normalize(W2 h + b2), h = tanh(W1 x + b1) or h = x without a hidden
/// layer. Parameters live in one flat vector so optimizers and momentum
/// updates can treat them uniformly.
class Encoder {
public:
    Encoder(const EncoderShape& shape, uint64_t seed);

    const EncoderShape&
    shape() const {
        return shape_;
    }

    /// Rows of `x` are samples; returned rows are unit-norm.
    Eigen::MatrixXd
    encode(const Eigen::MatrixXd& x) const;

    EmbeddingVector
    encode_one(std::span<const double> x) const;

    /// Activations kept for backward().
    struct Trace {
        Eigen::MatrixXd x;
        Eigen::MatrixXd hidden;
        Eigen::MatrixXd raw;
        Eigen::MatrixXd out;
    };

    Eigen::MatrixXd
    forward(const Eigen::MatrixXd& x, Trace* trace) const;

    /// Gradient w.r.t. the flat parameters, given d loss / d output rows.
    Eigen::VectorXd
    backward(const Trace& trace, const Eigen::MatrixXd& d_out) const;

    const Eigen::VectorXd&
    params() const {
        return theta_;
    }

    Eigen::VectorXd&
    mutable_params() {
        return theta_;
    }

private:
    size_t
    trunk_dim() const {
        return shape_.hidden_dim > 0 ? shape_.hidden_dim : shape_.input_dim;
    }

    EncoderShape shape_;
    Eigen::VectorXd theta_;
    // offsets into theta_: W1 (in x hidden), b1, W2 (trunk x out), b2; column-major
    Eigen::Index w1_{0};
    Eigen::Index b1_{0};
    Eigen::Index w2_{0};
    Eigen::Index b2_{0};
};

/// key <- m * key + (1 - m) * query, parameter by parameter.
void
momentum_update(Encoder& key, const Encoder& query, double m);

}  // namespace livemod
