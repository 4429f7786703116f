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

#include "livemod/encoder.h"

#include <cmath>
#include <random>

#include "livemod/errors.h"

namespace livemod {

Encoder::Encoder(const EncoderShape& shape, uint64_t seed) : shape_(shape) {
    if (shape.input_dim == 0 || shape.output_dim == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "encoder dims must be >= 1");
    }
    const auto in = static_cast<Eigen::Index>(shape.input_dim);
    const auto hid = static_cast<Eigen::Index>(shape.hidden_dim);
    const auto trunk = static_cast<Eigen::Index>(trunk_dim());
    const auto out = static_cast<Eigen::Index>(shape.output_dim);
    w1_ = 0;
    b1_ = w1_ + in * hid;
    w2_ = b1_ + hid;
    b2_ = w2_ + trunk * out;
    theta_ = Eigen::VectorXd::Zero(b2_ + out);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Glorot-style scale; biases start at zero
    const double s1 = std::sqrt(2.0 / static_cast<double>(in + std::max<Eigen::Index>(hid, 1)));
    for (Eigen::Index i = w1_; i < b1_; ++i) {
        theta_[i] = s1 * normal(rng);
    }
    const double s2 = std::sqrt(2.0 / static_cast<double>(trunk + out));
    for (Eigen::Index i = w2_; i < b2_; ++i) {
        theta_[i] = s2 * normal(rng);
    }
}

Eigen::MatrixXd
Encoder::forward(const Eigen::MatrixXd& x, Trace* trace) const {
    if (static_cast<size_t>(x.cols()) != shape_.input_dim) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "encoder input dim mismatch");
    }
    const auto in = static_cast<Eigen::Index>(shape_.input_dim);
    const auto hid = static_cast<Eigen::Index>(shape_.hidden_dim);
    const auto trunk = static_cast<Eigen::Index>(trunk_dim());
    const auto out = static_cast<Eigen::Index>(shape_.output_dim);

    Eigen::MatrixXd hidden;
    if (hid > 0) {
        Eigen::Map<const Eigen::MatrixXd> w1(theta_.data() + w1_, in, hid);
        Eigen::Map<const Eigen::VectorXd> b1(theta_.data() + b1_, hid);
        hidden = ((x * w1).rowwise() + b1.transpose()).array().tanh().matrix();
    } else {
        hidden = x;
    }
    Eigen::Map<const Eigen::MatrixXd> w2(theta_.data() + w2_, trunk, out);
    Eigen::Map<const Eigen::VectorXd> b2(theta_.data() + b2_, out);
    Eigen::MatrixXd raw = (hidden * w2).rowwise() + b2.transpose();
    Eigen::MatrixXd y = raw;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        double n = y.row(r).norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw_error(ErrorCode::DEGENERATE_INPUT, "encoder produced a zero or non-finite output");
        }
        y.row(r) /= n;
    }
    if (trace != nullptr) {
        trace->x = x;
        trace->hidden = std::move(hidden);
        trace->raw = std::move(raw);
        trace->out = y;
    }
    return y;
}

Eigen::MatrixXd
Encoder::encode(const Eigen::MatrixXd& x) const {
    return forward(x, nullptr);
}

EmbeddingVector
Encoder::encode_one(std::span<const double> x) const {
    Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::MatrixXd y = forward(Eigen::MatrixXd(row), nullptr);
    return EmbeddingVector::normalized(std::vector<double>(y.data(), y.data() + y.size()));
}

Eigen::VectorXd
Encoder::backward(const Trace& trace, const Eigen::MatrixXd& d_out) const {
    const auto in = static_cast<Eigen::Index>(shape_.input_dim);
    const auto hid = static_cast<Eigen::Index>(shape_.hidden_dim);
    const auto trunk = static_cast<Eigen::Index>(trunk_dim());
    const auto out = static_cast<Eigen::Index>(shape_.output_dim);
    if (d_out.rows() != trace.out.rows() || d_out.cols() != out) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "encoder gradient shape mismatch");
    }

    // through the row normalization: dz = (dy - y (y . dy)) / |z|
    Eigen::MatrixXd dz(d_out.rows(), out);
    for (Eigen::Index r = 0; r < d_out.rows(); ++r) {
        double n = trace.raw.row(r).norm();
        double proj = trace.out.row(r).dot(d_out.row(r));
        dz.row(r) = (d_out.row(r) - proj * trace.out.row(r)) / n;
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
    Eigen::Map<Eigen::MatrixXd> gw2(grad.data() + w2_, trunk, out);
    Eigen::Map<Eigen::VectorXd> gb2(grad.data() + b2_, out);
    gw2 = trace.hidden.transpose() * dz;
    gb2 = dz.colwise().sum().transpose();
    if (hid > 0) {
        Eigen::Map<const Eigen::MatrixXd> w2(theta_.data() + w2_, trunk, out);
        Eigen::MatrixXd dh = dz * w2.transpose();
        Eigen::MatrixXd da = (dh.array() * (1.0 - trace.hidden.array().square())).matrix();
        Eigen::Map<Eigen::MatrixXd> gw1(grad.data() + w1_, in, hid);
        Eigen::Map<Eigen::VectorXd> gb1(grad.data() + b1_, hid);
        gw1 = trace.x.transpose() * da;
        gb1 = da.colwise().sum().transpose();
    }
    return grad;
}

void
momentum_update(Encoder& key, const Encoder& query, double m) {
    if (!(m >= 0.0 && m <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "momentum must lie in [0, 1]");
    }
    if (!(key.shape() == query.shape())) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "momentum update needs identical architectures");
    }
    key.mutable_params() = m * key.params() + (1.0 - m) * query.params();
}

}  // namespace livemod
