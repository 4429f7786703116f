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
#include <filesystem>
#include <string>
#include <vector>

namespace livemod {

/// Fully connected classifier: tanh hidden layers, linear logits.
/// `sizes` = {input, hidden..., classes}; at least one hidden layer.
class MlpClassifier {
public:
    MlpClassifier(std::vector<size_t> sizes, uint64_t seed);

    const std::vector<size_t>&
    sizes() const {
        return sizes_;
    }
    size_t
    input_dim() const {
        return sizes_.front();
    }
    size_t
    hidden_dim() const {
        return sizes_[sizes_.size() - 2];
    }
    size_t
    num_classes() const {
        return sizes_.back();
    }

    struct Trace {
        std::vector<Eigen::MatrixXd> activations;  // input, then each hidden layer
        Eigen::MatrixXd logits;
    };

    /// Rows of `x` are examples. The last entry of trace.activations is the
    /// final hidden state.
    Trace
    forward(const Eigen::MatrixXd& x) const;

    Eigen::MatrixXd
    logits(const Eigen::MatrixXd& x) const {
        return forward(x).logits;
    }

    /// Row-wise softmax of the logits.
    Eigen::MatrixXd
    predict_proba(const Eigen::MatrixXd& x) const;

    /// Parameter gradient from d loss / d logits plus an optional
    /// d loss / d final hidden state (empty matrix for none).
    Eigen::VectorXd
    backward(const Trace& trace,
             const Eigen::MatrixXd& d_logits,
             const Eigen::MatrixXd& d_hidden = {}) const;

    const Eigen::VectorXd&
    params() const {
        return theta_;
    }
    Eigen::VectorXd&
    mutable_params() {
        return theta_;
    }

    /// Versioned JSON: layer sizes plus row-major weight arrays.
    std::string
    to_json() const;
    static MlpClassifier
    from_json(const std::string& text);

    void
    save(const std::filesystem::path& path) const;
    static MlpClassifier
    load(const std::filesystem::path& path);

private:
    struct Layer {
        Eigen::Index w;  // offset of an (in x out) column-major block
        Eigen::Index b;
        Eigen::Index in;
        Eigen::Index out;
    };

    std::vector<size_t> sizes_;
    std::vector<Layer> layers_;
    Eigen::VectorXd theta_;
};

/// Row-wise softmax with temperature.
Eigen::MatrixXd
softmax_rows(const Eigen::MatrixXd& logits, double temperature = 1.0);

}  // namespace livemod
