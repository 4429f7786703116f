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

#include "livemod/mlp.h"

#include <cmath>
#include <json.hpp>
#include <random>

#include "livemod/errors.h"
#include "livemod/file_io.h"

namespace livemod {

namespace {

constexpr const char* kCheckpointFormat = "livemod-mlp";
constexpr int kCheckpointVersion = 1;

}  // namespace

MlpClassifier::MlpClassifier(std::vector<size_t> sizes, uint64_t seed) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 3) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "mlp needs input, >= 1 hidden and output sizes");
    }
    for (size_t s : sizes_) {
        if (s == 0) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "mlp layer sizes must be >= 1");
        }
    }
    if (sizes_.back() < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "mlp needs >= 2 classes");
    }
    Eigen::Index offset = 0;
    for (size_t i = 0; i + 1 < sizes_.size(); ++i) {
        Layer l;
        l.in = static_cast<Eigen::Index>(sizes_[i]);
        l.out = static_cast<Eigen::Index>(sizes_[i + 1]);
        l.w = offset;
        l.b = l.w + l.in * l.out;
        offset = l.b + l.out;
        layers_.push_back(l);
    }
    theta_ = Eigen::VectorXd::Zero(offset);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& l : layers_) {
        double scale = std::sqrt(2.0 / static_cast<double>(l.in + l.out));
        for (Eigen::Index i = l.w; i < l.b; ++i) {
            theta_[i] = scale * normal(rng);
        }
    }
}

MlpClassifier::Trace
MlpClassifier::forward(const Eigen::MatrixXd& x) const {
    if (x.cols() != layers_.front().in) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "mlp input dim mismatch");
    }
    Trace t;
    t.activations.push_back(x);
    for (size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        Eigen::Map<const Eigen::MatrixXd> w(theta_.data() + l.w, l.in, l.out);
        Eigen::Map<const Eigen::VectorXd> b(theta_.data() + l.b, l.out);
        Eigen::MatrixXd z = (t.activations.back() * w).rowwise() + b.transpose();
        if (i + 1 == layers_.size()) {
            t.logits = std::move(z);
        } else {
            t.activations.push_back(z.array().tanh().matrix());
        }
    }
    return t;
}

Eigen::MatrixXd
softmax_rows(const Eigen::MatrixXd& logits, double temperature) {
    if (!(temperature > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "temperature must be > 0");
    }
    Eigen::MatrixXd p = logits / temperature;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

Eigen::MatrixXd
MlpClassifier::predict_proba(const Eigen::MatrixXd& x) const {
    return softmax_rows(logits(x));
}

Eigen::VectorXd
MlpClassifier::backward(const Trace& trace,
                        const Eigen::MatrixXd& d_logits,
                        const Eigen::MatrixXd& d_hidden) const {
    if (d_logits.rows() != trace.logits.rows() || d_logits.cols() != trace.logits.cols()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "mlp logit gradient shape mismatch");
    }
    if (d_hidden.size() != 0 && (d_hidden.rows() != trace.activations.back().rows() ||
                                 d_hidden.cols() != trace.activations.back().cols())) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "mlp hidden gradient shape mismatch");
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
    Eigen::MatrixXd delta = d_logits;  // gradient w.r.t. the current layer's pre-activation
    for (size_t i = layers_.size(); i-- > 0;) {
        const auto& l = layers_[i];
        const Eigen::MatrixXd& input = trace.activations[i];
        Eigen::Map<Eigen::MatrixXd>(grad.data() + l.w, l.in, l.out) = input.transpose() * delta;
        Eigen::Map<Eigen::VectorXd>(grad.data() + l.b, l.out) = delta.colwise().sum().transpose();
        if (i == 0) {
            break;
        }
        Eigen::Map<const Eigen::MatrixXd> w(theta_.data() + l.w, l.in, l.out);
        Eigen::MatrixXd d_act = delta * w.transpose();
        if (i + 1 == layers_.size() && d_hidden.size() != 0) {
            d_act += d_hidden;
        }
        delta = (d_act.array() * (1.0 - input.array().square())).matrix();
    }
    return grad;
}

std::string
MlpClassifier::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        // row-major (in x out): weights[r * out + c] = W(r, c)
        std::vector<double> w(static_cast<size_t>(l.in * l.out));
        Eigen::Map<const Eigen::MatrixXd> m(theta_.data() + l.w, l.in, l.out);
        for (Eigen::Index r = 0; r < l.in; ++r) {
            for (Eigen::Index c = 0; c < l.out; ++c) {
                w[static_cast<size_t>(r * l.out + c)] = m(r, c);
            }
        }
        std::vector<double> b(theta_.data() + l.b, theta_.data() + l.b + l.out);
        layers.push_back({{"rows", l.in}, {"cols", l.out}, {"weights", w}, {"bias", b}});
    }
    nlohmann::json j = {{"format", kCheckpointFormat},
                        {"version", kCheckpointVersion},
                        {"sizes", sizes_},
                        {"layers", layers}};
    return j.dump() + "\n";
}

MlpClassifier
MlpClassifier::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::PARSE_ERROR, std::string("mlp checkpoint: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) {
            throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: unexpected format tag");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: unsupported version");
        }
        MlpClassifier model(j.at("sizes").get<std::vector<size_t>>(), 0);
        const auto& layers = j.at("layers");
        if (layers.size() != model.layers_.size()) {
            throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: layer count mismatch");
        }
        for (size_t i = 0; i < layers.size(); ++i) {
            const auto& l = model.layers_[i];
            auto w = layers[i].at("weights").get<std::vector<double>>();
            auto b = layers[i].at("bias").get<std::vector<double>>();
            if (layers[i].at("rows").get<Eigen::Index>() != l.in ||
                layers[i].at("cols").get<Eigen::Index>() != l.out ||
                w.size() != static_cast<size_t>(l.in * l.out) ||
                b.size() != static_cast<size_t>(l.out)) {
                throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: layer shape mismatch");
            }
            Eigen::Map<Eigen::MatrixXd> m(model.theta_.data() + l.w, l.in, l.out);
            for (Eigen::Index r = 0; r < l.in; ++r) {
                for (Eigen::Index c = 0; c < l.out; ++c) {
                    m(r, c) = w[static_cast<size_t>(r * l.out + c)];
                }
            }
            for (Eigen::Index c = 0; c < l.out; ++c) {
                model.theta_[l.b + c] = b[static_cast<size_t>(c)];
            }
        }
        if (!model.theta_.allFinite()) {
            throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: non-finite weight");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::PARSE_ERROR, std::string("mlp checkpoint: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::INVALID_ARGUMENT) {
            throw_error(ErrorCode::PARSE_ERROR, "mlp checkpoint: " + e.detail());
        }
        throw;
    }
}

void
MlpClassifier::save(const std::filesystem::path& path) const {
    write_text_file(path, to_json());
}

MlpClassifier
MlpClassifier::load(const std::filesystem::path& path) {
    return from_json(read_text_file(path));
}

}  // namespace livemod
